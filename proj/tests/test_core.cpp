#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "qpsim/core.hpp"
#include "qpsim/error.hpp"

using namespace qps;

namespace {

// Brute-force oracle for min |k|^tau dist(<k, omega>/2, pi Z) in one dimension.
double margin_1d(double omega, double tau, int kmax) {
    double best = INFINITY;
    for (int k = 1; k <= kmax; ++k) {
        const double x = std::fmod(0.5 * k * omega, kPi);
        const double d = std::min(std::abs(x), kPi - std::abs(x));
        best = std::min(best, std::pow(k, tau) * d);
    }
    return best;
}

}  // namespace

TEST_CASE("dist_pi and reduce_mod") {
    CHECK(dist_pi(0.0) == doctest::Approx(0.0));
    CHECK(dist_pi(kPi) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(dist_pi(kPi / 2) == doctest::Approx(kPi / 2));
    CHECK(dist_pi(-0.3) == doctest::Approx(0.3));
    CHECK(dist_pi(3 * kPi + 0.2) == doctest::Approx(0.2));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng);
        const double r = reduce_mod(x, kTwoPi);
        REQUIRE(r >= 0.0);
        REQUIRE(r < kTwoPi);
        REQUIRE(std::abs(std::remainder(r - x, kTwoPi)) < 1e-12);
        REQUIRE(dist_pi(x) <= kPi / 2 + 1e-15);
    }
}

TEST_CASE("lattice shell matches a brute-force enumeration") {
    for (int dim = 1; dim <= 3; ++dim)
        for (int kmax = 1; kmax <= 4; ++kmax) {
            const auto shell = lattice_shell(dim, kmax);
            std::set<IVec> expected;
            IVec k(static_cast<std::size_t>(dim), -kmax);
            while (true) {
                if (norm1(k) > 0 && norm1(k) <= kmax) expected.insert(k);
                std::size_t i = 0;
                while (i < k.size() && k[i] == kmax) k[i++] = -kmax;
                if (i == k.size()) break;
                ++k[i];
            }
            CHECK(std::set<IVec>(shell.begin(), shell.end()) == expected);
            CHECK(shell.size() == expected.size());
        }
    CHECK(lattice_shell(2, 3).size() == 24u);  // 2 K (K + 1)
}

TEST_CASE("bracket is <k, omega>/2 reduced to [0, pi)") {
    const Frequency f = presets::golden();
    for (int k = -5; k <= 5; ++k) {
        const double b = bracket({k}, f);
        CHECK(b >= 0.0);
        CHECK(b < kPi);
        CHECK(dist_pi(b - 0.5 * k * f.omega[0]) < 1e-12);
    }
}

TEST_CASE("Diophantine margin of the golden frequency") {
    const Frequency f = presets::golden(0.1, 2.0);
    const MarginResult m = diophantine_margin(f, 100);
    CHECK(m.margin == doctest::Approx(margin_1d(f.omega[0], 2.0, 100)).epsilon(1e-12));
    CHECK(m.margin >= 0.1);
    REQUIRE(m.worst_k.size() == 1u);
    CHECK(std::pow(std::abs(m.worst_k[0]), 2.0) * dist_pi(0.5 * m.worst_k[0] * f.omega[0]) ==
          doctest::Approx(m.margin));

    const Frequency f2 = Frequency::make({kPi * (std::sqrt(5.0) - 1.0), kPi * std::sqrt(2.0)}, 0.01, 3.0);
    CHECK(diophantine_margin(f2, 50).margin > 0.0);
}

TEST_CASE("margin vanishes for a rational-like frequency") {
    const Frequency f = Frequency::make({kPi}, 0.1, 2.0);
    CHECK(diophantine_margin(f, 4).margin < 1e-12);
}

TEST_CASE("frequency validation") {
    CHECK_THROWS_AS(Frequency::make({}, 0.1, 2.0), Error);
    CHECK_THROWS_AS(Frequency::make({1.0}, 0.0, 2.0), Error);
    CHECK_THROWS_AS(Frequency::make({1.0, 2.0}, 0.1, 0.5), Error);
    CHECK_THROWS_AS(Frequency::make({kTwoPi}, 0.1, 2.0), Error);
    CHECK_NOTHROW(Frequency::make({1.0}, 0.1, 2.0));
}

TEST_CASE("potential validation and bounds") {
    CHECK_THROWS_AS(PotentialSpec::make(1, {{{1}, 0.5}, {{-1}, 0.4}}), Error);
    CHECK_THROWS_AS(PotentialSpec::make(1, {{{1, 0}, 0.5}, {{-1, 0}, 0.5}}), Error);
    CHECK_THROWS_AS(PotentialSpec::make(1, {{{1}, 0.5}, {{-1}, 0.5}}, 1.0, 0.1), Error);

    const PotentialSpec h = presets::harper(0.3, 0.5);
    CHECK(h.degree() == 1);
    CHECK(h.coeff_l1() == doctest::Approx(0.6));
    CHECK(h.computed_bound() == doctest::Approx(0.6 * std::exp(0.5)));
    CHECK(h.eps0 == doctest::Approx(h.computed_bound()));
    CHECK(presets::zero().is_zero());
    CHECK(presets::two_frequency(0.1).dim == 2);
}

TEST_CASE("Harper potential is 2 lambda cos theta") {
    const PotentialSpec h = presets::harper(0.7);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    for (int i = 0; i < 200; ++i) {
        const double t = u(rng);
        REQUIRE(eval_potential(h, std::vector<double>{t}) == doctest::Approx(1.4 * std::cos(t)).epsilon(1e-13));
    }
    const PotentialSpec h2 = presets::two_frequency(0.2);
    CHECK(eval_potential(h2, std::vector<double>{0.3, 1.1}) ==
          doctest::Approx(0.4 * (std::cos(0.3) + std::cos(1.1))));
}

TEST_CASE("hull sequence samples the rotation orbit") {
    const PotentialSpec h = presets::harper(0.5);
    const Frequency f = presets::golden();
    const Phase th = Phase::reduced({0.4});
    const auto hull = hull_sequence(h, f, th, -3, 5);
    REQUIRE(hull.size() == 9u);
    for (long n = -3; n <= 5; ++n)
        CHECK(hull[static_cast<std::size_t>(n + 3)] ==
              doctest::Approx(std::cos(0.4 + n * f.omega[0])).epsilon(1e-12));
}

TEST_CASE("phase samples") {
    const auto s = theta_samples(1, 4);
    REQUIRE(s.size() == 4u);
    for (int i = 0; i < 4; ++i) CHECK(s[static_cast<std::size_t>(i)].theta[0] == doctest::Approx(kTwoPi * i / 4));
    const auto s2 = theta_samples(2, 16);
    REQUIRE(s2.size() == 16u);
    for (const auto& p : s2)
        for (double x : p.theta) {
            CHECK(x >= 0.0);
            CHECK(x < kTwoPi);
        }
    CHECK(Phase::reduced({-0.5}).theta[0] == doctest::Approx(kTwoPi - 0.5));
    CHECK(Phase::reduced({5.0 * kPi}, 4 * kPi).theta[0] == doctest::Approx(kPi));
}
