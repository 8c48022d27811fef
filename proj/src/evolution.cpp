#include "qpsim/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpsim/error.hpp"

namespace qps {

cd WaveState::at(long n) const {
    if (n < n_lo || n > n_hi()) return 0.0;
    return amps[static_cast<std::size_t>(n - n_lo)];
}

namespace initial {

WaveState delta(const PotentialSpec& pot, const Frequency& freq, const Phase& theta, long n0, long half_width) {
    if (half_width < 1) throw Error(ErrorCode::InvalidArgument, "window half width must be >= 1", "half_width");
    WaveState s{n0 - half_width, std::vector<cd>(static_cast<std::size_t>(2 * half_width + 1), 0.0), 0.0, pot,
                freq, theta};
    s.amps[static_cast<std::size_t>(half_width)] = 1.0;
    return s;
}

WaveState gaussian(const PotentialSpec& pot, const Frequency& freq, const Phase& theta, double center,
                   double width, long half_width) {
    if (!(width > 0.0)) throw Error(ErrorCode::InvalidArgument, "gaussian width must be positive", "width");
    const long c = std::lround(center);
    const long reach = static_cast<long>(std::ceil(8.0 * width));
    if (half_width < reach + 1)
        throw Error(ErrorCode::InvalidArgument, "window too small for the gaussian profile", "half_width");
    WaveState s{c - half_width, std::vector<cd>(static_cast<std::size_t>(2 * half_width + 1), 0.0), 0.0, pot, freq,
                theta};
    double norm2 = 0.0;
    for (long n = c - reach; n <= c + reach; ++n) {
        const double x = (n - center) / width;
        const double v = std::exp(-0.25 * x * x);
        s.amps[static_cast<std::size_t>(n - s.n_lo)] = v;
        norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (cd& a : s.amps) a *= inv;
    return s;
}

WaveState from_list(const PotentialSpec& pot, const Frequency& freq, const Phase& theta, long n_first,
                    std::vector<cd> values, long pad) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "empty amplitude list", "amplitudes");
    if (pad < 1) throw Error(ErrorCode::InvalidArgument, "padding must be >= 1", "pad");
    for (const cd& v : values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw Error(ErrorCode::InvalidArgument, "non-finite amplitude", "amplitudes");
    WaveState s{n_first - pad, std::vector<cd>(values.size() + 2 * static_cast<std::size_t>(pad), 0.0), 0.0, pot,
                freq, theta};
    std::copy(values.begin(), values.end(), s.amps.begin() + pad);
    return s;
}

}  // namespace initial

namespace {

std::vector<double> diagonal_for(const WaveState& s) {
    return hull_sequence(s.pot, s.freq, s.theta, s.n_lo, s.n_hi());
}

void apply_h(const std::vector<double>& diag, const std::vector<cd>& q, std::vector<cd>& out) {
    const std::size_t n = q.size();
    for (std::size_t i = 0; i < n; ++i) {
        cd v = diag[i] * q[i];
        if (i > 0) v -= q[i - 1];
        if (i + 1 < n) v -= q[i + 1];
        out[i] = v;
    }
}

double tail_mass(const std::vector<cd>& q) {
    const std::size_t zone = std::max<std::size_t>(1, q.size() / 20);
    double m = 0.0;
    for (std::size_t i = 0; i < zone && i < q.size(); ++i) {
        m += std::norm(q[i]);
        m += std::norm(q[q.size() - 1 - i]);
    }
    return m;
}

}  // namespace

std::vector<cd> apply_hamiltonian(const WaveState& state) {
    std::vector<cd> out(state.size());
    apply_h(diagonal_for(state), state.amps, out);
    return out;
}

double l2_norm(const WaveState& state) {
    double s = 0.0;
    for (const cd& a : state.amps) s += std::norm(a);
    return std::sqrt(s);
}

double diffusion_norm(const WaveState& state) {
    double s = 0.0;
    for (std::size_t i = 0; i < state.amps.size(); ++i) {
        const double n = static_cast<double>(state.n_lo + static_cast<long>(i));
        s += n * n * std::norm(state.amps[i]);
    }
    return std::sqrt(s);
}

int chebyshev_order(double z, double tol, int max_order) {
    z = std::abs(z);
    if (z == 0.0) return 0;
    // Tail after K is bounded by a geometric series once K + 1 > z.
    for (int k = 0; k <= max_order; ++k) {
        if (k + 2 <= z) continue;
        const double jk1 = std::abs(std::cyl_bessel_j(static_cast<double>(k + 1), z));
        const double ratio = z / (2.0 * (k + 2));
        if (ratio < 1.0 && 2.0 * jk1 / (1.0 - ratio) < tol) return k;
    }
    return -1;
}

WaveState propagate(const WaveState& state, double dt, long nsteps, double tol, const PropagatorOptions& opts,
                    PropagateInfo* info) {
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive", "dt");
    if (nsteps < 0) throw Error(ErrorCode::InvalidArgument, "nsteps must be non-negative", "nsteps");
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive", "tol");
    WaveState s = state;
    if (nsteps == 0) return s;

    const double radius = 2.0 + s.pot.eps0;
    const double z = radius * dt;
    const int order = chebyshev_order(z, tol, opts.max_order);
    if (order < 0)
        throw Error(ErrorCode::ToleranceUnreachable,
                    "tolerance not reachable within the maximum Chebyshev order; reduce dt", "tol");
    std::vector<cd> coef(static_cast<std::size_t>(order) + 1);
    const cd mi(0.0, -1.0);
    cd ipow = 1.0;
    for (int k = 0; k <= order; ++k) {
        const double jk = std::cyl_bessel_j(static_cast<double>(k), z);
        coef[static_cast<std::size_t>(k)] = (k == 0 ? 1.0 : 2.0) * ipow * jk;
        ipow *= mi;
    }
    if (info) {
        info->chebyshev_order = order;
        info->spectral_radius = radius;
    }

    std::vector<double> diag = diagonal_for(s);
    for (double& d : diag) d /= radius;
    const double inv_r = 1.0 / radius;

    std::vector<cd> t_prev, t_cur, t_next, acc;
    for (long step = 0; step < nsteps; ++step) {
        if (opts.allow_growth && tail_mass(s.amps) > opts.boundary_tol) {
            const long grow = static_cast<long>(std::ceil(2.0 * dt * static_cast<double>(nsteps - step))) +
                              opts.growth_margin;
            std::vector<cd> bigger(s.amps.size() + 2 * static_cast<std::size_t>(grow), 0.0);
            std::copy(s.amps.begin(), s.amps.end(), bigger.begin() + grow);
            s.amps.swap(bigger);
            s.n_lo -= grow;
            diag = diagonal_for(s);
            for (double& d : diag) d /= radius;
            if (info) info->growth.push_back({s.t, s.n_lo, s.n_hi()});
        }
        const std::size_t n = s.amps.size();
        t_prev = s.amps;
        t_cur.assign(n, 0.0);
        t_next.assign(n, 0.0);
        acc.assign(n, 0.0);
        // X = H / radius applied through the scaled diagonal and off-diagonal.
        auto apply_x = [&](const std::vector<cd>& q, std::vector<cd>& out) {
            for (std::size_t i = 0; i < n; ++i) {
                cd v = diag[i] * q[i];
                if (i > 0) v -= inv_r * q[i - 1];
                if (i + 1 < n) v -= inv_r * q[i + 1];
                out[i] = v;
            }
        };
        for (std::size_t i = 0; i < n; ++i) acc[i] = coef[0] * t_prev[i];
        if (order >= 1) {
            apply_x(t_prev, t_cur);
            for (std::size_t i = 0; i < n; ++i) acc[i] += coef[1] * t_cur[i];
        }
        for (int k = 2; k <= order; ++k) {
            apply_x(t_cur, t_next);
            const cd c = coef[static_cast<std::size_t>(k)];
            for (std::size_t i = 0; i < n; ++i) {
                t_next[i] = 2.0 * t_next[i] - t_prev[i];
                acc[i] += c * t_next[i];
            }
            std::swap(t_prev, t_cur);
            std::swap(t_cur, t_next);
        }
        s.amps.swap(acc);
        s.t += dt;
    }
    return s;
}

EvolutionRecord evolve(const WaveState& init, double T, double dt, long record_every, double tol,
                       const PropagatorOptions& opts, WaveState* final_state) {
    if (!(T >= 0.0)) throw Error(ErrorCode::InvalidArgument, "T must be non-negative", "T");
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive", "dt");
    if (record_every < 1) throw Error(ErrorCode::InvalidArgument, "record_every must be >= 1", "record_every");
    const long total = std::lround(T / dt);
    if (std::abs(total * dt - T) > 1e-9 * std::max(1.0, T))
        throw Error(ErrorCode::InvalidArgument, "T must be an integer multiple of dt", "T");

    EvolutionRecord rec;
    rec.pot = init.pot;
    rec.freq = init.freq;
    rec.theta = init.theta;
    rec.dt = dt;
    rec.tol = tol;
    WaveState s = init;
    const double t0 = init.t;
    auto record = [&] {
        rec.times.push_back(s.t);
        rec.l2.push_back(l2_norm(s));
        rec.diffusion.push_back(diffusion_norm(s));
    };
    record();
    long done = 0;
    while (done < total) {
        const long chunk = std::min(record_every, total - done);
        PropagateInfo info;
        s = propagate(s, dt, chunk, tol, opts, &info);
        done += chunk;
        s.t = t0 + static_cast<double>(done) * dt;  // avoid drift from repeated addition
        rec.chebyshev_order = info.chebyshev_order;
        rec.growth.insert(rec.growth.end(), info.growth.begin(), info.growth.end());
        record();
    }
    rec.final_n_lo = s.n_lo;
    rec.final_n_hi = s.n_hi();
    if (final_state) *final_state = std::move(s);
    return rec;
}

SlopeFit fit_slope(const EvolutionRecord& record, double t_min_fraction) {
    if (record.times.empty()) throw Error(ErrorCode::TooFewSamples, "empty record", "record");
    if (!(t_min_fraction >= 0.0 && t_min_fraction < 1.0))
        throw Error(ErrorCode::InvalidArgument, "t_min_fraction must lie in [0, 1)", "t_min_fraction");
    const double T = record.times.back();
    const double tmin = t_min_fraction * T;
    double st = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < record.times.size(); ++i)
        if (record.times[i] >= tmin) {
            st += record.times[i];
            sy += record.diffusion[i];
            ++n;
        }
    if (n < 10) throw Error(ErrorCode::TooFewSamples, "fewer than 10 samples in the fit window", "t_min_fraction");
    const double mt = st / static_cast<double>(n), my = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < record.times.size(); ++i)
        if (record.times[i] >= tmin) {
            const double dx = record.times[i] - mt;
            sxx += dx * dx;
            sxy += dx * (record.diffusion[i] - my);
        }
    SlopeFit fit;
    fit.samples = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mt;
    double ssr = 0.0;
    for (std::size_t i = 0; i < record.times.size(); ++i)
        if (record.times[i] >= tmin) {
            const double r = record.diffusion[i] - (fit.intercept + fit.slope * record.times[i]);
            ssr += r * r;
        }
    fit.stderr_slope = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    return fit;
}

double check_ballistic_bound(const EvolutionRecord& record) {
    if (record.times.empty()) return 0.0;
    const double d0 = record.diffusion.front(), n0 = record.l2.front(), t0 = record.times.front();
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < record.times.size(); ++i)
        worst = std::max(worst, record.diffusion[i] - d0 - 2.0 * n0 * (record.times[i] - t0));
    return worst;
}

double l2_drift(const EvolutionRecord& record) {
    double worst = 0.0;
    for (double v : record.l2) worst = std::max(worst, std::abs(v - record.l2.front()));
    return worst;
}

}  // namespace qps
