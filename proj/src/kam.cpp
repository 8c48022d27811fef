#include "qpsim/kam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "qpsim/error.hpp"

namespace qps {

namespace {

std::string format_k(const IVec& k) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
    os << ')';
    return os.str();
}

double half_dot(const IVec& k, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * v[i];
    return 0.5 * s;
}

IVec sum_history(const std::vector<IVec>& history, int dim) {
    IVec s(static_cast<std::size_t>(dim), 0);
    for (const auto& k : history)
        for (int i = 0; i < dim; ++i) s[static_cast<std::size_t>(i)] += k[static_cast<std::size_t>(i)];
    return s;
}

// theta -> P_A(<k, theta>/2 + shift) on the grid of `like`.
TrigPolyMatrix rotation_field(const Mat2& A, const IVec& k, double scale, double shift, const TrigPolyMatrix& like) {
    return TrigPolyMatrix::from_function(like.dim(), like.grid_exp(), [&](std::span<const double> th) {
        return elliptic_rotation(A, scale * half_dot(k, th) + shift);
    });
}

std::vector<std::vector<double>> residual_phases(int dim, int npoints) {
    std::vector<std::vector<double>> out;
    for (const auto& ph : theta_samples(dim, npoints)) {
        std::vector<double> th = ph.theta;
        for (int i = 0; i < dim; ++i)
            th[static_cast<std::size_t>(i)] = reduce_mod(2.0 * th[static_cast<std::size_t>(i)] + 0.0137 * (i + 1), 2.0 * kTwoPi);
        out.push_back(std::move(th));
    }
    return out;
}

std::vector<double> phase_at(std::span<const double> theta, const Frequency& freq, long shift) {
    std::vector<double> th(theta.begin(), theta.end());
    for (std::size_t i = 0; i < th.size(); ++i)
        th[i] = reduce_mod(th[i] + static_cast<double>(shift) * freq.omega[i], 2.0 * kTwoPi);
    return th;
}

void check_pair(const ReducedPair& pair, const Frequency& freq, std::span<const double> theta) {
    if (static_cast<int>(theta.size()) != freq.dim() || pair.Z.dim() != freq.dim())
        throw Error(ErrorCode::DimensionMismatch, "phase, frequency and conjugation dimensions differ", "theta");
}

double smoothing(const ReducedPair& pair, int power) {
    return pair.level >= 1 ? std::pow(std::sin(pair.xi), power) : 1.0;
}

}  // namespace

const char* to_string(AngleKind kind) {
    switch (kind) {
        case AngleKind::Elliptic: return "elliptic";
        case AngleKind::Parabolic: return "parabolic";
        case AngleKind::Hyperbolic: return "hyperbolic";
    }
    return "unknown";
}

EigenAngle eigen_angle(const Mat2& A) {
    const double tr = A.trace();
    EigenAngle out;
    if (std::abs(std::abs(tr) - 2.0) <= 1e-12) {
        out.kind = AngleKind::Parabolic;
        out.alpha = tr > 0 ? 0.0 : kPi;
        out.signed_alpha = out.alpha;
    } else if (std::abs(tr) < 2.0) {
        out.kind = AngleKind::Elliptic;
        out.alpha = std::acos(tr / 2.0);
        out.signed_alpha = A(1, 0) >= 0.0 ? out.alpha : -out.alpha;
    } else {
        out.kind = AngleKind::Hyperbolic;
        out.alpha = std::acosh(std::abs(tr) / 2.0);
        out.signed_alpha = 0.0;
    }
    return out;
}

Mat2 elliptic_rotation(const Mat2& A, double phi) {
    const EigenAngle ea = eigen_angle(A);
    if (ea.kind != AngleKind::Elliptic)
        throw Error(ErrorCode::DomainError, std::string("rotation group needs an elliptic matrix, got ") + to_string(ea.kind), "A");
    const Mat2 J = (A - std::cos(ea.signed_alpha) * Mat2::Identity()) / std::sin(ea.signed_alpha);
    return std::cos(phi) * Mat2::Identity() + std::sin(phi) * J;
}

double eigenvector_condition(const Mat2& A) {
    Eigen::EigenSolver<Mat2> es(A);
    const Eigen::Matrix2cd C = es.eigenvectors();
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(C);
    const auto s = svd.singularValues();
    if (s(1) == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / s(1);
}

KamState kam_initial(double E, const PotentialSpec& pot, const Frequency& freq, const KamParams& params) {
    if (pot.dim != freq.dim()) throw Error(ErrorCode::DimensionMismatch, "potential and frequency dimensions differ", "pot");
    if (!(params.c >= 0.5 && params.c <= 1.0)) throw Error(ErrorCode::InvalidArgument, "resonance constant must lie in [1/2, 1]", "c");
    if (!(params.sigma > 0.0 && params.sigma < 1.0)) throw Error(ErrorCode::InvalidArgument, "sigma must lie in (0, 1)", "sigma");
    KamState s;
    s.pot = pot;
    s.freq = freq;
    s.params = params;
    s.A << -E, -1.0, 1.0, 0.0;
    s.F = TrigPolyMatrix::from_function(pot.dim, params.grid_exp, [&](std::span<const double> th) {
        Mat2 m = Mat2::Zero();
        m(0, 0) = eval_potential(pot, th);
        return m;
    });
    s.Z = TrigPolyMatrix::constant(pot.dim, params.grid_exp, Mat2::Identity());
    s.eps = pot.is_zero() ? 0.0 : pot.eps0;
    s.N = s.eps > 0.0 ? 4.0 * params.sigma * std::abs(std::log(s.eps)) : 0.0;
    s.xi = eigen_angle(s.A).signed_alpha;
    s.measured = s.F.sup_norm();
    s.within_bound = s.measured <= s.eps * (1.0 + 1e-12);
    return s;
}

double effective_truncation(const KamState& state) {
    const int G = state.F.points_per_dim();
    double floor_n = state.params.n_floor >= 0 ? state.params.n_floor
                                               : std::max(1, state.pot.degree()) * std::ldexp(1.0, state.j);
    return std::min(std::max(state.N, floor_n), static_cast<double>(G / 4));
}

std::optional<IVec> detect_resonance(double xi, double N, double eps, const Frequency& freq, double c, double sigma) {
    if (!(c >= 0.5 && c <= 1.0)) throw Error(ErrorCode::InvalidArgument, "resonance constant must lie in [1/2, 1]", "c");
    if (eps <= 0.0 || N < 1.0) return std::nullopt;
    const double scale = c * std::pow(eps, sigma);
    std::vector<IVec> hits;
    for (const auto& k : lattice_shell(freq.dim(), static_cast<int>(std::floor(N)))) {
        const double thresh = scale / std::pow(static_cast<double>(norm1(k)), freq.tau);
        if (dist_pi(xi - 0.5 * dot(k, freq.omega)) < thresh) hits.push_back(k);
    }
    if (hits.empty()) return std::nullopt;
    if (hits.size() > 1)
        throw Error(ErrorCode::DiophantineViolation,
                    "several resonant k within the truncation: " + format_k(hits[0]) + " and " + format_k(hits[1]), "xi");
    return hits.front();
}

KamState renormalize(const KamState& state, const IVec& k) {
    if (static_cast<int>(k.size()) != state.freq.dim()) throw Error(ErrorCode::DimensionMismatch, "k has the wrong dimension", "k");
    const EigenAngle ea = eigen_angle(state.A);
    if (ea.kind != AngleKind::Elliptic)
        throw Error(ErrorCode::DomainError, "renormalization needs an elliptic constant part", "A");
    const double cond = eigenvector_condition(state.A);
    if (!(cond <= state.params.max_condition))
        throw Error(ErrorCode::IllConditioned, "eigenvector matrix too ill-conditioned for renormalization", "A");

    const double shift = 0.5 * dot(k, state.freq.omega);
    const TrigPolyMatrix H = rotation_field(state.A, k, 1.0, 0.0, state.F);
    const TrigPolyMatrix Hinv_next = rotation_field(state.A, k, -1.0, -shift, state.F);

    KamState out = state;
    out.A = elliptic_rotation(state.A, ea.signed_alpha - shift);
    out.F = Hinv_next * state.F * H;
    out.Z = state.Z * H;
    out.history.push_back(k);
    out.history_level.push_back(state.j);
    out.xi = eigen_angle(out.A).signed_alpha;

    const TrigPolyMatrix conj = Hinv_next * state.A * H;
    double defect = 0.0;
    for (std::size_t i = 0; i < conj.size(); ++i) defect = std::max(defect, norm2(conj[i] - out.A));
    out.renormalization_defect = defect;
    const double before = state.F.sup_norm();
    out.measured = out.F.sup_norm();
    out.renormalization_growth = before > 0.0 ? out.measured / before : 1.0;
    return out;
}

HomologicalResult homological_solve(const Mat2& A, const TrigPolyMatrix& F, const Frequency& freq, double N_trunc,
                                    double divisor_floor) {
    if (F.dim() != freq.dim()) throw Error(ErrorCode::DimensionMismatch, "remainder and frequency dimensions differ", "F");
    const double tr = A.trace();
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr / 4.0 - 1.0, 0.0));
    const std::array<std::complex<double>, 2> lam{tr / 2.0 + disc, tr / 2.0 - disc};

    HomologicalResult res;
    res.worst_divisor = std::numeric_limits<double>::infinity();
    auto c = F.coefficients();
    TrigPolyMatrix::Coeffs y;
    for (auto& e : y.entry) e.assign(F.size(), 0.0);

    Eigen::Matrix4cd kronA;  // A^T (x) I
    Eigen::Matrix4cd kronB;  // I (x) A
    kronA.setZero();
    kronB.setZero();
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
            for (int r = 0; r < 2; ++r) {
                kronA(2 * p + r, 2 * q + r) = A(q, p);
                kronB(2 * p + r, 2 * p + q) = A(r, q);
            }

    for (std::size_t i = 0; i < F.size(); ++i) {
        const IVec jd = F.doubled_mode(i);
        bool integer = true;
        for (int v : jd) integer = integer && (v % 2 == 0);
        if (!integer) continue;
        IVec k(jd.size());
        for (std::size_t t = 0; t < jd.size(); ++t) k[t] = jd[t] / 2;
        const int nk = norm1(k);
        if (nk == 0 || nk > N_trunc) continue;
        const double phi = dot(k, freq.omega);
        const std::complex<double> e(std::cos(phi), std::sin(phi));
        double div = std::numeric_limits<double>::infinity();
        for (const auto& lq : lam)
            for (const auto& lp : lam) div = std::min(div, std::abs(e * lq - lp));
        if (div < res.worst_divisor) {
            res.worst_divisor = div;
            res.worst_k = k;
        }
        if (div < divisor_floor)
            throw Error(ErrorCode::Resonance, "small divisor " + std::to_string(div) + " at k = " + format_k(k), "k");

        Eigen::Vector4cd rhs;  // column-major vec
        rhs << c.entry[0][i], c.entry[2][i], c.entry[1][i], c.entry[3][i];
        const Eigen::Matrix4cd M = e * kronA - kronB;
        const Eigen::Vector4cd sol = M.partialPivLu().solve(rhs);
        y.entry[0][i] = sol(0);
        y.entry[2][i] = sol(1);
        y.entry[1][i] = sol(2);
        y.entry[3][i] = sol(3);
    }
    res.Y = TrigPolyMatrix::from_coefficients(F.dim(), F.grid_exp(), y);
    return res;
}

KamState kam_step(const KamState& state) {
    KamState s = state;
    const double sigma = s.params.sigma;
    auto advance = [&](KamState& t) {
        t.j = state.j + 1;
        t.eps = std::pow(state.eps, 1.0 + sigma);
        t.N = t.eps > 0.0 ? std::pow(4.0, t.j + 1) * sigma * std::abs(std::log(t.eps)) : 0.0;
        t.measured = t.F.sup_norm();
        t.within_bound = t.measured <= t.eps * (1.0 + 1e-12);
    };
    if (s.F.sup_norm() == 0.0) {
        advance(s);
        return s;
    }

    const double n_eff = effective_truncation(s);
    if (const auto k = detect_resonance(s.xi, n_eff, s.eps, s.freq, s.params.c, sigma)) s = renormalize(s, *k);

    const double floor_div = s.params.c * std::pow(s.eps, sigma) / std::pow(n_eff, s.freq.tau);
    const HomologicalResult hr = homological_solve(s.A, s.F, s.freq, n_eff, floor_div);

    const TrigPolyMatrix Zhat = (TrigPolyMatrix::constant(s.F.dim(), s.F.grid_exp(), Mat2::Identity()) + hr.Y).unimodular();
    const TrigPolyMatrix full = TrigPolyMatrix::constant(s.F.dim(), s.F.grid_exp(), s.A) + s.F;
    const TrigPolyMatrix M = Zhat.shifted(s.freq.omega).inverse() * full * Zhat;
    Mat2 Anew = M.mean();
    const double det = Anew.determinant();
    if (!(det > 0.0)) throw Error(ErrorCode::IllConditioned, "averaged constant part lost orientation", "A");
    Anew /= std::sqrt(det);
    const EigenAngle ea = eigen_angle(Anew);
    if (ea.kind == AngleKind::Hyperbolic)
        throw Error(ErrorCode::DomainError, "constant part became hyperbolic", "A");

    s.A = Anew;
    s.F = M - TrigPolyMatrix::constant(s.F.dim(), s.F.grid_exp(), Anew);
    s.Z = s.Z * Zhat;
    s.xi = ea.signed_alpha;
    s.worst_divisor = hr.worst_divisor;
    advance(s);
    return s;
}

ReducedPair reduce(double E, const PotentialSpec& pot, const Frequency& freq, int jmax, const KamParams& params) {
    if (jmax < 0 || jmax > 4) throw Error(ErrorCode::InvalidArgument, "jmax must lie in [0, 4]", "jmax");
    ReducedPair pair;
    pair.E = E;
    KamState state = kam_initial(E, pot, freq, params);
    pair.remainder_norms.push_back(state.measured);
    pair.eps.push_back(state.eps);
    pair.kind = eigen_angle(state.A).kind;

    if (pair.kind != AngleKind::Elliptic) {
        pair.ok = false;
        pair.failure = std::string("constant part is ") + to_string(pair.kind);
    } else {
        for (int j = 0; j < jmax; ++j) {
            KamState next;
            try {
                next = kam_step(state);
            } catch (const Error& e) {
                pair.ok = false;
                pair.failure = std::string(to_string(e.code())) + ": " + e.what();
                break;
            }
            if (next.measured > state.measured && next.measured > 1e-13) {
                pair.ok = false;
                pair.failure = "NonConvergence: remainder grew from " + std::to_string(state.measured) + " to " +
                               std::to_string(next.measured);
                break;
            }
            state = std::move(next);
            pair.remainder_norms.push_back(state.measured);
            pair.eps.push_back(state.eps);
        }
    }

    pair.history = state.history;
    pair.level = state.history.empty() ? 0 : 1 + state.history_level.back();
    pair.xi = state.xi;
    const EigenAngle fin = eigen_angle(state.A);
    pair.kind = fin.kind;
    const IVec K = sum_history(state.history, freq.dim());
    const double turn = pair.xi + 0.5 * dot(K, freq.omega);
    pair.Z = state.Z;
    pair.B = state.A;
    if (norm1(K) != 0) {
        if (fin.kind != AngleKind::Elliptic) {
            pair.ok = false;
            if (pair.failure.empty()) pair.failure = "closing transformation needs an elliptic constant part";
        } else {
            pair.Z = state.Z * rotation_field(state.A, K, -1.0, 0.0, state.Z);
            pair.B = elliptic_rotation(state.A, turn);
        }
    }
    pair.rho_lift = reduce_mod(turn, kTwoPi);
    pair.rho_rep = reduce_mod(turn, kPi);
    pair.det_defect = pair.Z.max_det_defect();
    pair.residual = conjugation_residual(pair, pot, freq);
    return pair;
}

double conjugation_residual(const ReducedPair& pair, const PotentialSpec& pot, const Frequency& freq, int npoints) {
    const auto phases = residual_phases(freq.dim(), npoints);
    std::vector<std::vector<double>> shifted;
    for (const auto& th : phases) shifted.push_back(phase_at(th, freq, 1));
    const auto Z0 = pair.Z.eval_many(phases);
    const auto Z1 = pair.Z.eval_many(shifted);
    double worst = 0.0;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const Mat2 A = transfer_matrix(pair.E, pot, phases[i]);
        worst = std::max(worst, norm2(Z1[i].inverse() * A * Z0[i] - pair.B));
    }
    return worst;
}

std::vector<cd> bloch_wave(const ReducedPair& pair, const Frequency& freq, std::span<const double> theta, long n_lo,
                           long n_hi) {
    check_pair(pair, freq, theta);
    if (n_hi < n_lo) throw Error(ErrorCode::InvalidArgument, "empty window", "window");
    if (eigen_angle(pair.B).kind != AngleKind::Elliptic || std::abs(std::sin(pair.rho_lift)) < 1e-12)
        throw Error(ErrorCode::DomainError, "Bloch waves need an elliptic, non-parabolic pair", "pair");
    std::vector<std::vector<double>> phases;
    for (long n = n_lo; n <= n_hi; ++n) phases.push_back(phase_at(theta, freq, n - 1));
    const auto Z = pair.Z.eval_many(phases);
    const double rho = pair.rho_lift;
    const cd back = std::polar(1.0, -rho);
    const double smooth = smoothing(pair, 5);
    const Mat2& B = pair.B;
    std::vector<cd> psi;
    psi.reserve(Z.size());
    for (long n = n_lo; n <= n_hi; ++n) {
        const Mat2& z = Z[static_cast<std::size_t>(n - n_lo)];
        const cd f = (z(0, 0) * B(0, 1) - z(0, 1) * B(0, 0)) * back + z(0, 1);
        psi.push_back(std::polar(1.0, static_cast<double>(n) * rho) * f * smooth);
    }
    return psi;
}

BetaTriple beta_coefficients(const ReducedPair& pair, const Frequency& freq, std::span<const double> theta, long n) {
    check_pair(pair, freq, theta);
    const std::vector<std::vector<double>> phases{phase_at(theta, freq, n - 1), phase_at(theta, freq, -1)};
    const auto Z = pair.Z.eval_many(phases);
    const double an = Z[0](0, 0), bn = Z[0](0, 1), a0 = Z[1](0, 0), b0 = Z[1](0, 1);
    const double B11 = pair.B(0, 0), B12 = pair.B(0, 1);
    const double s = smoothing(pair, 10);
    BetaTriple out;
    out.diag = s * (bn * b0 * (1.0 + B11 * B11) + an * a0 * B12 * B12 - (an * b0 + a0 * bn) * B11 * B12);
    out.plus = s * (a0 * bn * B12 - bn * b0 * B11);
    out.minus = s * (an * b0 * B12 - bn * b0 * B11);
    return out;
}

}  // namespace qps
