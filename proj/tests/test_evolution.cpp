#include <doctest.h>

#include <cmath>
#include <random>

#include "qpsim/error.hpp"
#include "qpsim/evolution.hpp"

using namespace qps;

namespace {

const Frequency kGold = presets::golden();
const Phase kZero = Phase::reduced({0.0});

// Independent fine-step RK4 integrator for i dq/dt = H q on a fixed Dirichlet window.
std::vector<cd> rk4(const WaveState& s, double T, int steps) {
    const std::size_t N = s.size();
    const auto V = hull_sequence(s.pot, s.freq, s.theta, s.n_lo, s.n_hi());
    auto rhs = [&](const std::vector<cd>& q) {
        std::vector<cd> out(N);
        for (std::size_t i = 0; i < N; ++i) {
            cd h = V[i] * q[i];
            if (i > 0) h -= q[i - 1];
            if (i + 1 < N) h -= q[i + 1];
            out[i] = cd(0.0, -1.0) * h;
        }
        return out;
    };
    std::vector<cd> q = s.amps;
    const double h = T / steps;
    for (int k = 0; k < steps; ++k) {
        const auto k1 = rhs(q);
        std::vector<cd> tmp(N);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = q[i] + 0.5 * h * k1[i];
        const auto k2 = rhs(tmp);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = q[i] + 0.5 * h * k2[i];
        const auto k3 = rhs(tmp);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = q[i] + h * k3[i];
        const auto k4 = rhs(tmp);
        for (std::size_t i = 0; i < N; ++i) q[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return q;
}

}  // namespace

TEST_CASE("initial states") {
    const auto d = initial::delta(presets::zero(), kGold, kZero, 3, 10);
    CHECK(d.n_lo == -7);
    CHECK(d.n_hi() == 13);
    CHECK(d.at(3) == cd(1.0));
    CHECK(d.at(4) == cd(0.0));
    CHECK(d.at(100) == cd(0.0));
    CHECK(l2_norm(d) == doctest::Approx(1.0));
    CHECK(diffusion_norm(d) == doctest::Approx(3.0));

    const auto g = initial::gaussian(presets::zero(), kGold, kZero, 0.0, 3.0, 60);
    CHECK(l2_norm(g) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(g.at(25)) == 0.0);  // truncated beyond 8 w

    const auto l = initial::from_list(presets::zero(), kGold, kZero, -1, {1.0, cd(0.0, 2.0)}, 4);
    CHECK(l.n_lo == -5);
    CHECK(l.at(0) == cd(0.0, 2.0));
    CHECK(diffusion_norm(l) == doctest::Approx(std::sqrt(1.0 + 0.0)));
}

TEST_CASE("Hamiltonian action") {
    const auto s = initial::delta(presets::harper(0.3), kGold, kZero, 0, 2);
    const auto Hq = apply_hamiltonian(s);
    REQUIRE(Hq.size() == 5u);
    CHECK(Hq[1] == cd(-1.0));
    CHECK(Hq[2].real() == doctest::Approx(0.6));
    CHECK(Hq[3] == cd(-1.0));
    CHECK(Hq[0] == cd(0.0));
}

TEST_CASE("Chebyshev order") {
    CHECK(chebyshev_order(0.0, 1e-13, 100) <= 1);
    CHECK(chebyshev_order(1.0, 1e-13, 2048) > chebyshev_order(0.1, 1e-13, 2048));
    CHECK(chebyshev_order(1e4, 1e-13, 64) == -1);
    CHECK_THROWS_AS(propagate(initial::delta(presets::zero(), kGold, kZero, 0, 10), 1e4, 1, 1e-13,
                              PropagatorOptions{64}),
                    Error);
}

TEST_CASE("free propagation matches Bessel amplitudes") {
    // e^{-iHt} e_0 = i^n J_n(2t) for H = -Delta
    const double t = 10.0;
    const auto s = propagate(initial::delta(presets::zero(), kGold, kZero, 0, 60), 0.5, 20, 1e-13);
    double worst = 0.0;
    for (long n = -40; n <= 40; ++n) {
        const double J = std::cyl_bessel_j(static_cast<double>(std::abs(n)), 2.0 * t);
        worst = std::max(worst, std::abs(std::abs(s.at(n)) - std::abs(J)));
    }
    CHECK(worst < 1e-12);
    const double D2 = std::pow(diffusion_norm(s), 2);
    CHECK(std::abs(D2 - 200.0) / 200.0 < 1e-3);
}

TEST_CASE("Harper propagation matches an RK4 integrator") {
    const auto init = initial::gaussian(presets::harper(0.4), kGold, Phase::reduced({0.7}), 0.0, 2.0, 40);
    const auto cheb = propagate(init, 0.25, 12, 1e-13, PropagatorOptions{2048, false});
    const auto ref = rk4(init, 3.0, 6000);
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(cheb.amps[i] - ref[i]));
    CHECK(worst < 1e-10);
}

TEST_CASE("l2 norm is conserved for random states") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<cd> v(15);
        for (auto& x : v) x = cd(g(rng), g(rng));
        double nrm = 0.0;
        for (auto x : v) nrm += std::norm(x);
        for (auto& x : v) x /= std::sqrt(nrm);
        const auto init = initial::from_list(presets::harper(0.2 * (trial + 1)), kGold, kZero, -7, v, 40);
        const auto rec = evolve(init, 20.0, 0.5, 4, 1e-13);
        CHECK(l2_drift(rec) < 1e-9);
        CHECK(check_ballistic_bound(rec) < 1e-6);
    }
}

TEST_CASE("window grows before mass reaches the boundary") {
    const auto init = initial::delta(presets::zero(), kGold, kZero, 0, 10);
    WaveState fin;
    const auto rec = evolve(init, 30.0, 0.5, 1, 1e-13, {}, &fin);
    CHECK_FALSE(rec.growth.empty());
    CHECK(fin.n_hi() >= 60);
    CHECK(l2_drift(rec) < 1e-9);
    // free diffusion norm is exactly sqrt(2) t
    for (std::size_t i = 0; i < rec.times.size(); ++i)
        REQUIRE(rec.diffusion[i] == doctest::Approx(std::sqrt(2.0) * rec.times[i]).epsilon(1e-9));
}

TEST_CASE("slope fitting and bound checks") {
    EvolutionRecord r;
    for (int i = 0; i <= 20; ++i) {
        r.times.push_back(i);
        r.l2.push_back(1.0);
        r.diffusion.push_back(1.5 * i + 2.0);
    }
    const SlopeFit f = fit_slope(r, 0.5);
    CHECK(f.slope == doctest::Approx(1.5));
    CHECK(f.intercept == doctest::Approx(2.0));
    CHECK(f.samples == 11u);
    CHECK(f.stderr_slope < 1e-12);
    CHECK(check_ballistic_bound(r) == doctest::Approx(0.0));  // attained at t = 0

    EvolutionRecord few;
    for (int i = 0; i < 5; ++i) {
        few.times.push_back(i);
        few.l2.push_back(1.0);
        few.diffusion.push_back(i);
    }
    CHECK_THROWS_AS(fit_slope(few, 0.0), Error);
}

TEST_CASE("free ballistic bound is strict") {
    const auto rec = evolve(initial::delta(presets::zero(), kGold, kZero, 0, 60), 10.0, 0.5, 1, 1e-13);
    CHECK(check_ballistic_bound(rec) <= 0.0);
    // sqrt(2) t - 2 t at t = 10
    CHECK(rec.diffusion.back() - 2.0 * rec.times.back() == doctest::Approx((std::sqrt(2.0) - 2.0) * 10.0));
}
