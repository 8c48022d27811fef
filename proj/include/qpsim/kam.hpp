#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qpsim/cocycle.hpp"
#include "qpsim/core.hpp"
#include "qpsim/evolution.hpp"
#include "qpsim/trigpoly.hpp"

namespace qps {

enum class AngleKind { Elliptic, Parabolic, Hyperbolic };

const char* to_string(AngleKind kind);

struct EigenAngle {
    AngleKind kind = AngleKind::Elliptic;
    double alpha = 0.0;         // arccos(tr / 2); acosh(|tr| / 2) when hyperbolic
    double signed_alpha = 0.0;  // orientation-carrying angle in (-pi, pi]; 0 when hyperbolic
};

/// Classification of a unimodular 2x2 matrix by its trace (|tr| = 2 within 1e-12 is parabolic).
EigenAngle eigen_angle(const Mat2& A);

/// cos(phi) I + sin(phi) (A - cos(alpha) I) / sin(alpha) = C_A diag(e^{i phi}, e^{-i phi}) C_A^{-1},
/// the one-parameter group through an elliptic A (phi = signed alpha gives A back).
Mat2 elliptic_rotation(const Mat2& A, double phi);

/// ||C|| ||C^{-1}|| for the normalized eigenvector matrix of an elliptic A.
double eigenvector_condition(const Mat2& A);

struct KamParams {
    double sigma = 1.0 / 200.0;
    double c = 1.0;             // resonance constant, in [1/2, 1]
    int grid_exp = 8;           // 2^grid_exp points per dimension on [0, 4 pi)
    int n_floor = -1;           // lower bound for the truncation; -1 uses deg(V) 2^j
    double max_condition = 1e6; // eigenvector conditioning accepted by renormalize
};

struct KamState {
    int j = 0;
    Mat2 A = Mat2::Identity();  // constant part
    TrigPolyMatrix F;           // remainder
    double eps = 0.0;           // eps_j
    double N = 0.0;             // N_j
    double xi = 0.0;            // signed eigen-angle of A
    std::vector<IVec> history;  // resonant k's
    std::vector<int> history_level;  // step index at which each k was removed
    TrigPolyMatrix Z;           // accumulated conjugation
    double measured = 0.0;      // sup norm of F on the grid
    bool within_bound = true;   // measured <= eps
    double worst_divisor = 0.0;
    double renormalization_defect = 0.0;  // deviation of the renormalized angle from xi - <k, omega>/2
    double renormalization_growth = 0.0;  // ||F after|| / ||F before|| at the last renormalization
    PotentialSpec pot;
    Frequency freq;
    KamParams params;
};

/// (A_0(E), F_0) with eps_0 = |V|_r and N_0 = 4 sigma |ln eps_0|.
KamState kam_initial(double E, const PotentialSpec& pot, const Frequency& freq, const KamParams& params = {});

/// Truncation actually used at level j: max(N_j, floor) capped at the grid Nyquist.
double effective_truncation(const KamState& state);

/// The unique 0 < |k|_1 <= N with dist(xi - <k, omega>/2, pi Z) < c eps^sigma / |k|^tau, if any.
/// Throws DiophantineViolation when more than one k qualifies.
std::optional<IVec> detect_resonance(double xi, double N, double eps, const Frequency& freq, double c,
                                     double sigma);

/// Conjugates by H(theta) = C diag(e^{i<k,theta>/2}, e^{-i<k,theta>/2}) C^{-1}, moving the angle by -<k, omega>/2.
KamState renormalize(const KamState& state, const IVec& k);

struct HomologicalResult {
    TrigPolyMatrix Y;
    double worst_divisor = 0.0;
    IVec worst_k;
};

/// Solves Y(theta + omega) A - A Y(theta) = F_k for every integer mode 0 < |k|_1 <= N_trunc.
/// Throws Resonance (field carries k) when a divisor falls below the floor.
HomologicalResult homological_solve(const Mat2& A, const TrigPolyMatrix& F, const Frequency& freq, double N_trunc,
                                    double divisor_floor);

/// One conjugation step: optional renormalization, homological solve, re-measured remainder.
KamState kam_step(const KamState& state);

struct ReducedPair {
    double E = 0.0;
    TrigPolyMatrix Z;
    Mat2 B = Mat2::Identity();
    double rho_rep = 0.0;   // xi + sum <k_l, omega>/2 reduced to [0, pi)
    double rho_lift = 0.0;  // same sum reduced to [0, 2 pi); e^{i rho_lift} is an eigenvalue of B
    double xi = 0.0;
    std::vector<IVec> history;
    int level = 0;          // 0 when no renormalization happened, else 1 + last resonant step
    double residual = 0.0;
    double det_defect = 0.0;
    std::vector<double> remainder_norms;  // measured ||F_j|| for j = 0 .. J
    std::vector<double> eps;              // eps_j for j = 0 .. J
    AngleKind kind = AngleKind::Elliptic;
    bool ok = true;
    std::string failure;
};

/// Iterates kam_step jmax times from (A_0(E), F_0) and applies the closing transformation that moves
/// the eigenvalues of the final constant from e^{+-i xi} to e^{+-i rho}.
ReducedPair reduce(double E, const PotentialSpec& pot, const Frequency& freq, int jmax = 3,
                   const KamParams& params = {});

/// sup over a 64-point phase sample of ||Z(theta + omega)^{-1} (A_0 + F_0(theta)) Z(theta) - B||.
double conjugation_residual(const ReducedPair& pair, const PotentialSpec& pot, const Frequency& freq,
                            int npoints = 64);

/// psi_n = e^{i n rho} f_n(theta), n in [n_lo, n_hi], with f_n from Z(theta - omega + n omega) and B;
/// multiplied by sin^5(xi) on resonance levels. psi solves the eigenvalue equation of H at phase theta - omega.
std::vector<cd> bloch_wave(const ReducedPair& pair, const Frequency& freq, std::span<const double> theta, long n_lo,
                           long n_hi);

struct BetaTriple {
    double minus = 0.0;  // beta_{n, n-1}
    double diag = 0.0;   // beta_{n, n}
    double plus = 0.0;   // beta_{n, n+1}
};

/// The three beta coefficients at site n; multiplied by sin^10(xi) on resonance levels.
BetaTriple beta_coefficients(const ReducedPair& pair, const Frequency& freq, std::span<const double> theta, long n);

}  // namespace qps
