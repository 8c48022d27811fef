#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

namespace qps {

using IVec = std::vector<int>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Frequency vector omega in T^d with Diophantine constants (gamma, tau).
struct Frequency {
    std::vector<double> omega;
    double gamma = 0.0;
    double tau = 1.0;

    int dim() const { return static_cast<int>(omega.size()); }

    /// Validating constructor: d >= 1, finite nonzero entries mod 2 pi, gamma > 0, tau > d - 1.
    static Frequency make(std::vector<double> omega, double gamma, double tau);
};

/// Real trigonometric polynomial V(theta) = sum_k c_k exp(i <k, theta>) with c_{-k} = c_k.
struct PotentialSpec {
    int dim = 1;
    std::map<IVec, double> coeffs;
    double radius_r = 1.0;
    double eps0 = 0.0;  // stored bound for |V|_r

    /// Validates symmetry and radius; eps0 defaults to the computed bound and may not undercut it.
    static PotentialSpec make(int dim, std::map<IVec, double> coeffs, double radius_r = 1.0,
                              std::optional<double> eps0 = std::nullopt);

    double coeff_l1() const;          // sum |c_k|, a bound for sup |V| on the real torus
    double computed_bound() const;    // sum |c_k| exp(r |k|)
    int degree() const;               // max |k|_1 over nonzero coefficients
    bool is_zero() const;
};

/// Point of T^d (or (2T)^d when period = 4 pi).
struct Phase {
    std::vector<double> theta;

    static Phase reduced(std::vector<double> theta, double period = kTwoPi);
    int dim() const { return static_cast<int>(theta.size()); }
};

/// Reduce x into [0, period).
double reduce_mod(double x, double period);

/// Distance from x to pi Z, a value in [0, pi/2].
double dist_pi(double x);

/// |k|_1.
int norm1(const IVec& k);

/// <k, omega>.
double dot(const IVec& k, const std::vector<double>& omega);

/// <k> = <k, omega>/2 reduced to [0, pi).
double bracket(const IVec& k, const Frequency& freq);

/// All k in Z^d with 0 < |k|_1 <= kmax, in a fixed lexicographic order.
std::vector<IVec> lattice_shell(int dim, int kmax);

struct MarginResult {
    double margin = 0.0;
    IVec worst_k;
};

/// min over 0 < |k|_1 <= kmax of |k|^tau dist(<k, omega>/2, pi Z).
MarginResult diophantine_margin(const Frequency& freq, int kmax);

double eval_potential(const PotentialSpec& pot, std::span<const double> theta);
inline double eval_potential(const PotentialSpec& pot, const Phase& phase) {
    return eval_potential(pot, phase.theta);
}

/// V(theta0 + n omega) for n = n_lo .. n_hi.
std::vector<double> hull_sequence(const PotentialSpec& pot, const Frequency& freq,
                                  const Phase& theta0, long n_lo, long n_hi);

/// Deterministic phase samples: equispaced 2 pi i / count for d = 1, an additive
/// recurrence with generalized golden ratios for d >= 2.
std::vector<Phase> theta_samples(int dim, int count);

namespace presets {
PotentialSpec zero(int dim = 1);
/// V(theta) = 2 lambda cos theta.
PotentialSpec harper(double lambda, double radius_r = 1.0);
/// V(theta) = 2 lambda (cos theta_1 + cos theta_2).
PotentialSpec two_frequency(double lambda, double radius_r = 1.0);
/// omega = (sqrt 5 - 1) pi.
Frequency golden(double gamma = 0.1, double tau = 2.0);
}  // namespace presets

}  // namespace qps
