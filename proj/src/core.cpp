#include "qpsim/core.hpp"

#include <cmath>
#include <complex>
#include <limits>

#include "qpsim/error.hpp"

namespace qps {

Frequency Frequency::make(std::vector<double> omega, double gamma, double tau) {
    if (omega.empty()) throw Error(ErrorCode::InvalidArgument, "frequency needs d >= 1", "omega");
    for (double w : omega) {
        if (!std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "non-finite frequency", "omega");
        const double r = reduce_mod(w, kTwoPi);
        if (r < 1e-14 || kTwoPi - r < 1e-14)
            throw Error(ErrorCode::InvalidArgument, "frequency entry is 0 mod 2 pi", "omega");
    }
    if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive", "gamma");
    const int d = static_cast<int>(omega.size());
    if (!(tau > d - 1)) throw Error(ErrorCode::InvalidArgument, "tau must exceed d - 1", "tau");
    return Frequency{std::move(omega), gamma, tau};
}

PotentialSpec PotentialSpec::make(int dim, std::map<IVec, double> coeffs, double radius_r,
                                  std::optional<double> eps0) {
    if (dim < 1) throw Error(ErrorCode::InvalidArgument, "potential dimension must be >= 1", "dim");
    if (!(radius_r > 0.0 && radius_r <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "radius must lie in (0, 1]", "radius_r");
    for (const auto& [k, c] : coeffs) {
        if (static_cast<int>(k.size()) != dim)
            throw Error(ErrorCode::DimensionMismatch, "coefficient index has wrong dimension", "coeffs");
        if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "non-finite coefficient", "coeffs");
        IVec mk(k);
        for (int& x : mk) x = -x;
        auto it = coeffs.find(mk);
        const double partner = it == coeffs.end() ? 0.0 : it->second;
        if (std::abs(partner - c) > 1e-15 * std::max(1.0, std::abs(c)))
            throw Error(ErrorCode::InvalidArgument, "coefficients must satisfy c_{-k} = c_k", "coeffs");
    }
    PotentialSpec p;
    p.dim = dim;
    p.coeffs = std::move(coeffs);
    p.radius_r = radius_r;
    const double bound = p.computed_bound();
    if (eps0) {
        if (*eps0 < bound)
            throw Error(ErrorCode::InvalidArgument, "eps0 is smaller than sum |c_k| exp(r|k|)", "eps0");
        p.eps0 = *eps0;
    } else {
        p.eps0 = bound;
    }
    return p;
}

double PotentialSpec::coeff_l1() const {
    double s = 0.0;
    for (const auto& [k, c] : coeffs) s += std::abs(c);
    return s;
}

double PotentialSpec::computed_bound() const {
    double s = 0.0;
    for (const auto& [k, c] : coeffs) s += std::abs(c) * std::exp(radius_r * norm1(k));
    return s;
}

int PotentialSpec::degree() const {
    int deg = 0;
    for (const auto& [k, c] : coeffs)
        if (c != 0.0) deg = std::max(deg, norm1(k));
    return deg;
}

bool PotentialSpec::is_zero() const {
    for (const auto& [k, c] : coeffs)
        if (c != 0.0) return false;
    return true;
}

Phase Phase::reduced(std::vector<double> theta, double period) {
    for (double& t : theta) t = reduce_mod(t, period);
    return Phase{std::move(theta)};
}

double reduce_mod(double x, double period) {
    double r = std::fmod(x, period);
    if (r < 0.0) r += period;
    if (r >= period) r -= period;
    return r;
}

double dist_pi(double x) {
    const double r = reduce_mod(x, kPi);
    return std::min(r, kPi - r);
}

int norm1(const IVec& k) {
    int s = 0;
    for (int x : k) s += std::abs(x);
    return s;
}

double dot(const IVec& k, const std::vector<double>& omega) {
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * omega[i];
    return s;
}

double bracket(const IVec& k, const Frequency& freq) {
    return reduce_mod(0.5 * dot(k, freq.omega), kPi);
}

std::vector<IVec> lattice_shell(int dim, int kmax) {
    std::vector<IVec> out;
    IVec k(dim, -kmax);
    while (true) {
        const int n = norm1(k);
        if (n > 0 && n <= kmax) out.push_back(k);
        int i = dim - 1;
        while (i >= 0 && k[i] == kmax) {
            k[i] = -kmax;
            --i;
        }
        if (i < 0) break;
        ++k[i];
    }
    return out;
}

MarginResult diophantine_margin(const Frequency& freq, int kmax) {
    if (kmax < 1) throw Error(ErrorCode::InvalidArgument, "kmax must be >= 1", "kmax");
    MarginResult best{std::numeric_limits<double>::infinity(), {}};
    for (const IVec& k : lattice_shell(freq.dim(), kmax)) {
        const double v = std::pow(static_cast<double>(norm1(k)), freq.tau) * dist_pi(0.5 * dot(k, freq.omega));
        if (v < best.margin) best = {v, k};
    }
    return best;
}

double eval_potential(const PotentialSpec& pot, std::span<const double> theta) {
    if (static_cast<int>(theta.size()) != pot.dim)
        throw Error(ErrorCode::DimensionMismatch, "phase dimension does not match potential", "theta");
    std::complex<double> acc = 0.0;
    for (const auto& [k, c] : pot.coeffs) {
        double arg = 0.0;
        for (int i = 0; i < pot.dim; ++i) arg += k[i] * theta[i];
        acc += c * std::complex<double>(std::cos(arg), std::sin(arg));
    }
    if (std::abs(acc.imag()) > 1e-12 * pot.coeff_l1())
        throw Error(ErrorCode::DomainError, "potential evaluates to a non-real value", "coeffs");
    return acc.real();
}

std::vector<double> hull_sequence(const PotentialSpec& pot, const Frequency& freq, const Phase& theta0,
                                  long n_lo, long n_hi) {
    if (n_lo > n_hi) throw Error(ErrorCode::InvalidArgument, "n_lo must not exceed n_hi", "n_lo");
    if (freq.dim() != pot.dim || theta0.dim() != pot.dim)
        throw Error(ErrorCode::DimensionMismatch, "frequency, phase and potential dimensions differ", "omega");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_hi - n_lo + 1));
    std::vector<double> th(pot.dim);
    for (long n = n_lo; n <= n_hi; ++n) {
        for (int i = 0; i < pot.dim; ++i) th[i] = reduce_mod(theta0.theta[i] + n * freq.omega[i], kTwoPi);
        out.push_back(eval_potential(pot, th));
    }
    return out;
}

std::vector<Phase> theta_samples(int dim, int count) {
    if (dim < 1 || count < 1) throw Error(ErrorCode::InvalidArgument, "need dim >= 1 and count >= 1", "theta_samples");
    std::vector<Phase> out;
    out.reserve(static_cast<std::size_t>(count));
    if (dim == 1) {
        for (int i = 0; i < count; ++i) out.push_back(Phase{{kTwoPi * i / count}});
        return out;
    }
    // phi_d solves x^{d+1} = x + 1.
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
    std::vector<double> alpha(dim);
    for (int c = 0; c < dim; ++c) alpha[c] = std::pow(1.0 / phi, c + 1);
    for (int i = 0; i < count; ++i) {
        std::vector<double> th(dim);
        for (int c = 0; c < dim; ++c) th[c] = kTwoPi * reduce_mod(0.5 + alpha[c] * i, 1.0);
        out.push_back(Phase{std::move(th)});
    }
    return out;
}

namespace presets {

PotentialSpec zero(int dim) { return PotentialSpec::make(dim, {}); }

PotentialSpec harper(double lambda, double radius_r) {
    return PotentialSpec::make(1, {{{1}, lambda}, {{-1}, lambda}}, radius_r);
}

PotentialSpec two_frequency(double lambda, double radius_r) {
    return PotentialSpec::make(2, {{{1, 0}, lambda}, {{-1, 0}, lambda}, {{0, 1}, lambda}, {{0, -1}, lambda}},
                               radius_r);
}

Frequency golden(double gamma, double tau) {
    return Frequency::make({(std::sqrt(5.0) - 1.0) * kPi}, gamma, tau);
}

}  // namespace presets

}  // namespace qps
