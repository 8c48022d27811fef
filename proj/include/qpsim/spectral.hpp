#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "qpsim/core.hpp"

namespace qps {

/// H_theta restricted to sites n_lo .. n_lo + N - 1 with Dirichlet boundary.
struct TruncatedOperator {
    long n_lo = 0;
    std::vector<double> diag;  // V(theta + n omega)
    PotentialSpec pot;
    Frequency freq;
    Phase theta;

    static TruncatedOperator make(const PotentialSpec& pot, const Frequency& freq, const Phase& theta, long n_lo,
                                  long N);
    long size() const { return static_cast<long>(diag.size()); }
};

struct EigenPairs {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns; empty unless requested
};

EigenPairs eigen_spectrum(const TruncatedOperator& op, bool with_vectors = false);

/// Sorted eigenvalues of N-site truncations on sites 0 .. N-1 at several phases.
struct Staircase {
    long N = 0;
    std::vector<std::vector<double>> levels;  // one ascending list per phase

    double count_below(double E) const;  // (1 / (N S)) #{eigenvalues <= E}
    std::size_t samples() const { return levels.size(); }
};

Staircase build_staircase(const PotentialSpec& pot, const Frequency& freq, long N, int theta_count,
                          int threads = 0);

/// k(E) averaged over the phase samples.
double ids(double E, const PotentialSpec& pot, const Frequency& freq, long N, int theta_count);

struct IdsCurve {
    std::vector<double> E;
    std::vector<double> k;
    Staircase staircase;
};

IdsCurve ids_curve(std::span<const double> energies, Staircase staircase);

struct ThoulessResult {
    double residual = 0.0;  // |L - integral|
    double integral = 0.0;  // int ln|E' - E| dk(E')
    bool ill_conditioned = false;  // an eigenvalue within 1e-10 of E
};

/// Staircase quadrature of int ln|E' - E| dk(E'); in each phase sample the two levels
/// adjacent to E are spread uniformly over the interval between them.
ThoulessResult thouless_residual(double E, const IdsCurve& curve, double lyapunov);

struct GapRecord {
    double E1 = 0.0;
    double E2 = 0.0;
    IVec label;
    double rho = 0.0;
    double residual = 0.0;
};

struct GapOptions {
    double plateau_tol_per_N = 2.5;  // allowed IDS rise is plateau_tol_per_N / N
};

/// Maximal grid intervals with flat IDS and flat rotation number, each labelled by the
/// l with |l|_1 <= l_max closest to rho_gap in the sense of dist(rho - <l, omega>/2, pi Z).
std::vector<GapRecord> gap_detect_and_label(const IdsCurve& curve, std::span<const double> rho,
                                            std::span<const double> rho_err, const Frequency& freq, int l_max,
                                            const GapOptions& opts = {});

enum class Side { Plus, Minus };

struct MFunctionResult {
    std::complex<double> value;
    double change = 0.0;  // |m(depth) - m(depth / 2)|
    bool converged = true;
};

/// Half-line m-function from a ratio recursion seeded with a Dirichlet condition at `depth`
/// sites from the origin; the half-depth value is compared to flag non-convergence.
MFunctionResult m_function(std::complex<double> z, Side side, const PotentialSpec& pot, const Frequency& freq,
                           const Phase& theta, long depth, double tol = 1e-10);

struct BorelResult {
    std::complex<double> value;
    bool near_singular = false;
};

/// (m+ m- - 1) / (m+ + m-).
BorelResult borel_transform(std::complex<double> m_plus, std::complex<double> m_minus);

struct ClassicalPair {
    double u = 0.0;
    double v = 0.0;
};

/// u_n = sin(n xi) / sin xi, v_n = -sin((n - 1) xi) / sin xi with xi = arccos(-E / 2).
ClassicalPair free_classical_transform(double E, long n);

/// max_k |<q(t), v_k> - exp(-i E_k t) <q(0), v_k>| with q(t) from the Chebyshev propagator.
double eigenbasis_phase_check(const TruncatedOperator& op, const EigenPairs& pairs,
                              std::span<const std::complex<double>> q0, double t);

}  // namespace qps
