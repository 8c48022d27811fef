#pragma once

#include <complex>
#include <map>
#include <vector>

#include "qpsim/core.hpp"
#include "qpsim/kam.hpp"

namespace qps {

enum class TransformMode { DeltaApprox, Kam, FreeExact };

const char* to_string(TransformMode mode);

/// Finitely supported sequence q_n.
using FiniteSequence = std::map<long, std::complex<double>>;

struct GridSpec {
    double E_min = -2.2;
    double E_max = 2.2;
    int count = 4001;
    long niter = 100000;               // rotation-number iterations per node
    double drho_floor = 1e-6;          // positivity floor for the centered difference
    double transversality_tol = 0.05;  // allowed shortfall below 1 / (2 sin rho)
    double max_rho_step = 0.1;         // coarser grids are rejected
    int kam_stride = 1;                // kam mode samples every K-th retained node
    int kam_jmax = 3;
    KamParams kam;
    double max_kam_failure = 0.5;      // tolerated fraction of failed reductions
    int threads = 0;
};

struct TransformNode {
    double E = 0.0;
    double rho = 0.0;
    double drho = 0.0;
    double dE = 0.0;                 // quadrature cell width
    int level = 0;                   // resonance level of the reduction (kam mode)
    std::vector<BetaTriple> beta;    // index n + n_max; empty outside kam mode
    std::vector<BetaTriple> dbeta;   // E-derivative of beta by finite differences (kam mode)

    double weight_phi() const { return dE / (kPi * drho); }    // d phi
    double weight_tilde() const { return drho * dE / kPi; }    // d phi tilde
};

struct TransformTable {
    TransformMode mode = TransformMode::DeltaApprox;
    int n_max = 0;
    std::vector<TransformNode> nodes;
    int grid_nodes = 0;              // nodes on the input grid
    int dropped_gap = 0;             // flat rotation number
    int dropped_transversality = 0;  // drho below 1 / (2 sin rho) - tol
    int floored = 0;                 // centered differences repaired to the floor
    int kam_failures = 0;
    int resonant_nodes = 0;          // kam nodes with level >= 1

    /// beta_{n, n + delta} at a node, delta in {-1, 0, 1}.
    double beta(std::size_t node, long n, int delta) const;
    double dbeta(std::size_t node, long n, int delta) const;
    double K(std::size_t node, long n) const;
    double J(std::size_t node, long n) const;
};

/// Table on a uniform E-grid from the numerical rotation number at phase theta.
TransformTable build_table(const PotentialSpec& pot, const Frequency& freq, const Phase& theta, const GridSpec& grid,
                           TransformMode mode, int n_max);

/// V = 0 table with exact rho = arccos(-E / 2) on a rho-uniform grid; each node owns the
/// E-interval between neighbouring rho-midpoints.
TransformTable free_exact_table(int count, int n_max);

struct TransformedState {
    std::vector<std::complex<double>> g1;  // sum q_n K_n
    std::vector<std::complex<double>> g2;  // sum q_n J_n
};

TransformedState apply_transform(const TransformTable& table, const FiniteSequence& q);

/// sqrt of sum (|g1|^2 + |g2|^2) over the d phi weights.
double l2_dphi_norm(const TransformTable& table, const TransformedState& G);
/// Same with the d phi tilde weights.
double l2_dphitilde_norm(const TransformTable& table, const TransformedState& G);

/// ||S q0|| in L^2(d phi).
double slope_predictor(const TransformTable& table, const FiniteSequence& q0);

struct OrthogonalityResult {
    double lemma = 0.0;  // max over shifts of |sum beta beta drho dE - delta delta pi|
    double gram = 0.0;   // |(1/pi) sum (K_m K_n + J_m J_n) drho dE - delta_mn|
};

OrthogonalityResult orthogonality_check(const TransformTable& table, long m, long n);

struct OscillatoryProfile {
    std::vector<int> M;
    std::vector<double> value;
    double exponent = 0.0;  // least-squares slope of log value against log |M|; NaN if undetermined
};

/// |sum beta_{m, m+dm} beta_{n, n+dn} cos(M rho) drho dE| for each M.
OscillatoryProfile oscillatory_probe(const TransformTable& table, const std::vector<int>& Ms, long m = 0, long n = 0,
                                     int dm = 0, int dn = 0);

/// L^2(d phi) norm of (sum q_n dK_n/dE, sum q_n dJ_n/dE) from the dominant terms plus the beta derivatives.
double derivative_norm(const TransformTable& table, const FiniteSequence& q);

}  // namespace qps
