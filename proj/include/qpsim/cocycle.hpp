#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qpsim/core.hpp"

namespace qps {

using Mat2 = Eigen::Matrix2d;

/// A_0(E) + F_0(theta) = [[V(theta) - E, -1], [1, 0]].
Mat2 transfer_matrix(double E, const PotentialSpec& pot, std::span<const double> theta);
inline Mat2 transfer_matrix(double E, const PotentialSpec& pot, const Phase& theta) {
    return transfer_matrix(E, pot, theta.theta);
}

struct RotationResult {
    double rho = 0.0;    // in [0, pi]
    double error = 0.0;  // |rho(niter) - rho(niter / 2)|
    bool reseeded = false;
};

/// Fibered rotation number from the lifted projective angle. Each transfer matrix is split
/// into a shear (x, y) -> (x, y - a x) followed by a quarter turn, so every increment has
/// a unique continuous branch.
RotationResult rotation_number(double E, const PotentialSpec& pot, const Frequency& freq, const Phase& theta,
                               long niter);
/// Same estimator driven by a precomputed hull V(theta + j omega), j = 0 .. niter - 1.
RotationResult rotation_number_hull(double E, std::span<const double> hull);

struct LyapunovResult {
    double value = 0.0;  // max(raw, 0)
    double raw = 0.0;
    double error = 0.0;  // |L(niter) - L(niter / 2)|
};

LyapunovResult lyapunov_exponent(double E, const PotentialSpec& pot, const Frequency& freq, const Phase& theta,
                                 long niter);
LyapunovResult lyapunov_exponent_hull(double E, std::span<const double> hull);
/// Average over `nphases` deterministic phases.
LyapunovResult lyapunov_exponent_averaged(double E, const PotentialSpec& pot, const Frequency& freq, long niter,
                                          int nphases = 16);

/// max over 1 <= n <= nmax and the phase samples of the operator norm of the n-step product.
double boundedness_sup(double E, const PotentialSpec& pot, const Frequency& freq, std::span<const Phase> thetas,
                       long nmax);

/// Operator 2-norm of a 2x2 matrix.
double norm2(const Mat2& m);

struct CocycleRow {
    double E = 0.0;
    double rho = 0.0;
    double rho_err = 0.0;
    double lyap = 0.0;
    double lyap_err = 0.0;
    double sup_norm = 0.0;
};

struct ScanOptions {
    long niter = 100000;
    long sup_nmax = 1000;  // 0 skips the boundedness column
    bool lyapunov = true;
    int threads = 0;
};

std::vector<CocycleRow> cocycle_scan(std::span<const double> energies, const PotentialSpec& pot,
                                     const Frequency& freq, const Phase& theta, const ScanOptions& opts);

/// Largest (rho_i - rho_{i+1}) - max(err_i, err_{i+1}) along the grid; <= 0 means monotone within error.
double monotonicity_excess(std::span<const CocycleRow> rows);

/// max |rho_i - rho_j| / |E_i - E_j|^{1/2} over adjacent nodes with 0 < rho < pi at both ends.
double holder_half_constant(std::span<const CocycleRow> rows);

}  // namespace qps
