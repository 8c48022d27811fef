#include "qpsim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "qpsim/error.hpp"
#include "qpsim/evolution.hpp"
#include "qpsim/parallel.hpp"

namespace qps {

TruncatedOperator TruncatedOperator::make(const PotentialSpec& pot, const Frequency& freq, const Phase& theta,
                                          long n_lo, long N) {
    if (N < 1) throw Error(ErrorCode::InvalidArgument, "truncation size must be >= 1", "N");
    TruncatedOperator op;
    op.n_lo = n_lo;
    op.diag = hull_sequence(pot, freq, theta, n_lo, n_lo + N - 1);
    op.pot = pot;
    op.freq = freq;
    op.theta = theta;
    return op;
}

EigenPairs eigen_spectrum(const TruncatedOperator& op, bool with_vectors) {
    const long N = op.size();
    EigenPairs out;
    if (N == 1) {
        out.values = Eigen::VectorXd::Constant(1, op.diag[0]);
        if (with_vectors) out.vectors = Eigen::MatrixXd::Identity(1, 1);
        return out;
    }
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(op.diag.data(), N);
    Eigen::VectorXd e = Eigen::VectorXd::Constant(N - 1, -1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(d, e, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::NonConvergence, "tridiagonal eigensolver did not converge", "N");
    out.values = solver.eigenvalues();
    if (with_vectors) out.vectors = solver.eigenvectors();
    return out;
}

double Staircase::count_below(double E) const {
    if (levels.empty()) return 0.0;
    std::size_t total = 0;
    for (const auto& lv : levels) total += static_cast<std::size_t>(std::upper_bound(lv.begin(), lv.end(), E) - lv.begin());
    return static_cast<double>(total) / (static_cast<double>(N) * static_cast<double>(levels.size()));
}

Staircase build_staircase(const PotentialSpec& pot, const Frequency& freq, long N, int theta_count, int threads) {
    if (theta_count < 1) throw Error(ErrorCode::InvalidArgument, "need at least one phase sample", "theta_samples");
    const auto phases = theta_samples(pot.dim, theta_count);
    Staircase st;
    st.N = N;
    st.levels.resize(phases.size());
    parallel_for(phases.size(), threads, [&](std::size_t i) {
        const auto op = TruncatedOperator::make(pot, freq, phases[i], 0, N);
        const auto ev = eigen_spectrum(op, false);
        st.levels[i].assign(ev.values.data(), ev.values.data() + ev.values.size());
    });
    return st;
}

double ids(double E, const PotentialSpec& pot, const Frequency& freq, long N, int theta_count) {
    return build_staircase(pot, freq, N, theta_count, 1).count_below(E);
}

IdsCurve ids_curve(std::span<const double> energies, Staircase staircase) {
    IdsCurve c;
    c.E.assign(energies.begin(), energies.end());
    c.k.reserve(c.E.size());
    for (double E : c.E) c.k.push_back(staircase.count_below(E));
    c.staircase = std::move(staircase);
    return c;
}

namespace {

// x ln x - x with the x = 0 limit.
double xlogx_minus_x(double x) { return x > 0.0 ? x * std::log(x) - x : 0.0; }

}  // namespace

ThoulessResult thouless_residual(double E, const IdsCurve& curve, double lyapunov) {
    const auto& st = curve.staircase;
    if (st.levels.empty()) throw Error(ErrorCode::InvalidArgument, "IDS curve carries no eigenvalues", "idscurve");
    ThoulessResult r;
    const double w = 1.0 / (static_cast<double>(st.N) * static_cast<double>(st.levels.size()));
    double acc = 0.0;
    for (const auto& lv : st.levels) {
        const auto it = std::upper_bound(lv.begin(), lv.end(), E);
        const std::size_t p = static_cast<std::size_t>(it - lv.begin());
        const bool paired = p > 0 && p < lv.size();
        for (std::size_t i = 0; i < lv.size(); ++i) {
            const double gap = std::abs(lv[i] - E);
            if (gap < 1e-10) r.ill_conditioned = true;
            if (paired && (i == p - 1 || i == p)) continue;
            acc += w * std::log(gap);
        }
        if (paired) {
            const double a = lv[p - 1], b = lv[p];
            const double cell = b - a;
            if (cell > 0.0) {
                acc += 2.0 * w * (xlogx_minus_x(E - a) + xlogx_minus_x(b - E)) / cell;
            } else {
                acc += 2.0 * w * std::log(std::max(std::abs(E - a), std::numeric_limits<double>::min()));
            }
        }
    }
    r.integral = acc;
    r.residual = std::abs(lyapunov - acc);
    return r;
}

std::vector<GapRecord> gap_detect_and_label(const IdsCurve& curve, std::span<const double> rho,
                                            std::span<const double> rho_err, const Frequency& freq, int l_max,
                                            const GapOptions& opts) {
    const std::size_t n = curve.E.size();
    if (rho.size() != n || rho_err.size() != n)
        throw Error(ErrorCode::DimensionMismatch, "rotation grid must align with the IDS grid", "rho_grid");
    if (l_max < 0) throw Error(ErrorCode::InvalidArgument, "l_max must be >= 0", "l_max");
    const double ktol = opts.plateau_tol_per_N / static_cast<double>(std::max<long>(curve.staircase.N, 1));
    std::vector<IVec> labels{IVec(freq.dim(), 0)};
    for (auto& l : lattice_shell(freq.dim(), l_max)) labels.push_back(std::move(l));

    std::vector<GapRecord> out;
    std::size_t i = 0;
    while (i + 1 < n) {
        auto flat = [&](std::size_t j) {
            const double rtol = 2.0 * std::max(rho_err[j], rho_err[j + 1]) + 1e-9;
            return curve.k[j + 1] - curve.k[j] <= ktol && std::abs(rho[j + 1] - rho[j]) <= rtol;
        };
        if (!flat(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && flat(j)) ++j;
        GapRecord g;
        g.E1 = curve.E[i];
        g.E2 = curve.E[j];
        double mean = 0.0;
        for (std::size_t m = i; m <= j; ++m) mean += rho[m];
        g.rho = mean / static_cast<double>(j - i + 1);
        g.residual = std::numeric_limits<double>::infinity();
        for (const auto& l : labels) {
            const double res = dist_pi(g.rho - 0.5 * dot(l, freq.omega));
            if (res < g.residual - 1e-15) {
                g.residual = res;
                g.label = l;
            }
        }
        out.push_back(std::move(g));
        i = j;
    }
    return out;
}

MFunctionResult m_function(std::complex<double> z, Side side, const PotentialSpec& pot, const Frequency& freq,
                           const Phase& theta, long depth, double tol) {
    if (!(z.imag() > 0.0)) throw Error(ErrorCode::DomainError, "m-function needs Im z > 0", "z");
    if (depth < 100) throw Error(ErrorCode::InvalidArgument, "depth must be >= 100", "depth");
    // Ratios u_{n+1}/u_n (plus side) or u_{n-1}/u_n (minus side) for the solution vanishing just
    // beyond the truncation; the sign is fixed by the (-1)^n gauge to the +Delta convention.
    auto run = [&](long D) {
        std::complex<double> s = 0.0;
        if (side == Side::Plus) {
            const auto V = hull_sequence(pot, freq, theta, 1, D);
            for (long n = D; n >= 1; --n) s = 1.0 / ((V[static_cast<std::size_t>(n - 1)] - z) - s);
        } else {
            const auto V = hull_sequence(pot, freq, theta, -D, -1);
            for (long n = -D; n <= -1; ++n) s = 1.0 / ((V[static_cast<std::size_t>(n + D)] - z) - s);
        }
        return s;
    };
    MFunctionResult r;
    const auto full = run(depth);
    const auto half = run(depth / 2);
    r.value = full;
    r.change = std::abs(full - half);
    r.converged = r.change <= tol * (1.0 + std::abs(full));
    return r;
}

BorelResult borel_transform(std::complex<double> m_plus, std::complex<double> m_minus) {
    const auto den = m_plus + m_minus;
    BorelResult r;
    r.near_singular = std::abs(den) < 1e-12 * (1.0 + std::abs(m_plus) + std::abs(m_minus));
    r.value = (m_plus * m_minus - 1.0) / den;
    return r;
}

ClassicalPair free_classical_transform(double E, long n) {
    if (!(std::abs(E) < 2.0)) throw Error(ErrorCode::DomainError, "free classical transform needs |E| < 2", "E");
    const double xi = std::acos(-0.5 * E);
    const double s = std::sin(xi);
    return {std::sin(static_cast<double>(n) * xi) / s, -std::sin(static_cast<double>(n - 1) * xi) / s};
}

double eigenbasis_phase_check(const TruncatedOperator& op, const EigenPairs& pairs,
                              std::span<const std::complex<double>> q0, double t) {
    const long N = op.size();
    if (static_cast<long>(q0.size()) != N)
        throw Error(ErrorCode::DimensionMismatch, "initial vector must match the window", "q0");
    if (pairs.vectors.cols() != N)
        throw Error(ErrorCode::InvalidArgument, "eigenvectors are required", "eigenpairs");
    WaveState s{op.n_lo, std::vector<cd>(q0.begin(), q0.end()), 0.0, op.pot, op.freq, op.theta};
    if (t > 0.0) {
        const long steps = static_cast<long>(std::ceil(t / 0.5));
        PropagatorOptions opts;
        opts.allow_growth = false;
        s = propagate(s, t / static_cast<double>(steps), steps, 1e-14, opts);
    }
    Eigen::Map<const Eigen::VectorXcd> a(q0.data(), N), b(s.amps.data(), N);
    double worst = 0.0;
    for (long k = 0; k < N; ++k) {
        const Eigen::VectorXcd v = pairs.vectors.col(k).cast<std::complex<double>>();
        const std::complex<double> lhs = v.dot(b);
        const std::complex<double> rhs = std::exp(std::complex<double>(0.0, -pairs.values[k] * t)) * v.dot(a);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace qps
