#pragma once

#include <complex>
#include <vector>

#include "qpsim/core.hpp"

namespace qps {

using cd = std::complex<double>;

/// Amplitudes q_n on the window [n_lo, n_lo + amps.size() - 1] together with the model data.
struct WaveState {
    long n_lo = 0;
    std::vector<cd> amps;
    double t = 0.0;
    PotentialSpec pot;
    Frequency freq;
    Phase theta;

    long n_hi() const { return n_lo + static_cast<long>(amps.size()) - 1; }
    std::size_t size() const { return amps.size(); }
    cd at(long n) const;  // zero outside the window
};

namespace initial {
/// e_{n0} on [n0 - half_width, n0 + half_width].
WaveState delta(const PotentialSpec& pot, const Frequency& freq, const Phase& theta, long n0, long half_width);
/// Normalized exp(-(n - c)^2 / (4 w^2)) truncated at |n - c| <= 8 w, on a window of the given half width.
WaveState gaussian(const PotentialSpec& pot, const Frequency& freq, const Phase& theta, double center,
                   double width, long half_width);
/// User-supplied amplitudes starting at n_first, padded by `pad` zeros on both sides.
WaveState from_list(const PotentialSpec& pot, const Frequency& freq, const Phase& theta, long n_first,
                    std::vector<cd> values, long pad);
}  // namespace initial

/// (Hq)_n = -q_{n+1} - q_{n-1} + V(theta + n omega) q_n with Dirichlet truncation at the window edges.
std::vector<cd> apply_hamiltonian(const WaveState& state);

double l2_norm(const WaveState& state);

/// sqrt(sum n^2 |q_n|^2) using absolute site labels.
double diffusion_norm(const WaveState& state);

struct PropagatorOptions {
    int max_order = 2048;
    bool allow_growth = true;
    double boundary_tol = 1e-14;  // tail mass outside the inner 90% that triggers growth
    long growth_margin = 32;
};

struct GrowthEvent {
    double t = 0.0;
    long n_lo = 0;
    long n_hi = 0;
};

struct PropagateInfo {
    int chebyshev_order = 0;
    double spectral_radius = 0.0;
    std::vector<GrowthEvent> growth;
};

/// Number of Chebyshev terms needed for exp(-i z x) on [-1, 1] to reach `tol`; -1 if above max_order.
int chebyshev_order(double z, double tol, int max_order);

/// Advances the state by nsteps * dt with a Chebyshev expansion of exp(-i H dt) on
/// [-2 - eps0, 2 + eps0]. Throws ToleranceUnreachable when tol needs more than max_order terms.
WaveState propagate(const WaveState& state, double dt, long nsteps, double tol,
                    const PropagatorOptions& opts = {}, PropagateInfo* info = nullptr);

struct EvolutionRecord {
    std::vector<double> times;
    std::vector<double> l2;
    std::vector<double> diffusion;
    PotentialSpec pot;
    Frequency freq;
    Phase theta;
    double dt = 0.0;
    double tol = 0.0;
    int chebyshev_order = 0;
    std::vector<GrowthEvent> growth;
    long final_n_lo = 0;
    long final_n_hi = 0;
};

/// Propagates to time T recording norms every `record_every` steps (the initial state included).
EvolutionRecord evolve(const WaveState& init, double T, double dt, long record_every, double tol,
                       const PropagatorOptions& opts = {}, WaveState* final_state = nullptr);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    std::size_t samples = 0;
};

/// Least-squares line through (t, ||q(t)||_D) for t >= t_min_fraction * T; needs >= 10 samples.
SlopeFit fit_slope(const EvolutionRecord& record, double t_min_fraction);

/// max_t ||q(t)||_D - ||q(0)||_D - 2 ||q(0)|| t.
double check_ballistic_bound(const EvolutionRecord& record);

/// max_t | ||q(t)|| - ||q(0)|| |.
double l2_drift(const EvolutionRecord& record);

}  // namespace qps
