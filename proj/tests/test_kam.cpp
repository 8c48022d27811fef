#include <doctest.h>

#include <cmath>

#include "qpsim/cocycle.hpp"
#include "qpsim/error.hpp"
#include "qpsim/kam.hpp"

using namespace qps;

namespace {

const Frequency kGold = presets::golden();
constexpr double kLambda = 1e-4;

KamParams half_c() {
    KamParams p;
    p.c = 0.5;
    return p;
}

// Energy whose unperturbed angle arccos(-E/2) equals xi.
double energy_for(double xi) { return -2.0 * std::cos(xi); }

Mat2 quarter_turn() {
    Mat2 A;
    A << 0.0, -1.0, 1.0, 0.0;
    return A;
}

}  // namespace

TEST_CASE("eigen-angle classification and rotation group") {
    Mat2 A;
    A << -0.5, -1.0, 1.0, 0.0;  // E = 0.5
    const auto ea = eigen_angle(A);
    CHECK(ea.kind == AngleKind::Elliptic);
    CHECK(ea.alpha == doctest::Approx(std::acos(-0.25)));
    CHECK(std::abs(ea.signed_alpha) == doctest::Approx(ea.alpha));
    CHECK((elliptic_rotation(A, ea.signed_alpha) - A).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((elliptic_rotation(A, 0.0) - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-15);
    const Mat2 R = elliptic_rotation(A, 0.3) * elliptic_rotation(A, 0.4);
    CHECK((R - elliptic_rotation(A, 0.7)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(elliptic_rotation(A, 1.1).determinant() == doctest::Approx(1.0));
    CHECK(eigenvector_condition(quarter_turn()) == doctest::Approx(1.0));

    Mat2 H;
    H << 3.0, -1.0, 1.0, 0.0;
    CHECK(eigen_angle(H).kind == AngleKind::Hyperbolic);
    Mat2 P;
    P << 2.0, -1.0, 1.0, 0.0;
    CHECK(eigen_angle(P).kind == AngleKind::Parabolic);
}

TEST_CASE("initial state and scale sequence") {
    const auto pot = presets::harper(kLambda);
    const KamParams p = half_c();
    const KamState s0 = kam_initial(energy_for(0.2), pot, kGold, p);
    CHECK(s0.eps == doctest::Approx(pot.eps0));
    CHECK(s0.N == doctest::Approx(4.0 * p.sigma * std::abs(std::log(s0.eps))));
    CHECK(s0.measured <= s0.eps);
    CHECK(s0.xi == doctest::Approx(0.2).epsilon(1e-12));

    const KamState s1 = kam_step(s0);
    CHECK(s1.j == 1);
    CHECK(s1.eps == std::pow(s0.eps, 1.0 + p.sigma));
    CHECK(s1.N == doctest::Approx(16.0 * p.sigma * std::abs(std::log(s1.eps))));
    CHECK(effective_truncation(s0) >= 1.0);

    const KamState free0 = kam_initial(0.5, presets::zero(), kGold, p);
    CHECK(free0.eps == 0.0);
    CHECK(kam_step(free0).measured == 0.0);
}

TEST_CASE("resonance detection") {
    const double eps = 1e-4;
    const double k1 = 0.5 * kGold.omega[0];
    CHECK(detect_resonance(k1, 3.0, eps, kGold, 1.0, 0.5) == std::optional<IVec>(IVec{1}));
    CHECK_FALSE(detect_resonance(k1 + 0.3, 3.0, eps, kGold, 1.0, 0.5).has_value());
    // midway between <1> and <2>, outside both thresholds
    const double mid = 0.5 * (bracket({1}, kGold) + bracket({2}, kGold));
    CHECK_FALSE(detect_resonance(mid, 2.0, eps, kGold, 1.0, 0.5).has_value());
    CHECK_THROWS_AS(detect_resonance(0.0, 3.0, eps, kGold, 0.2, 0.5), Error);
    // a wide threshold catches several k
    CHECK_THROWS_AS(detect_resonance(k1, 3.0, eps, kGold, 1.0, 1.0 / 200), Error);
}

TEST_CASE("homological equation: worst divisor against a brute-force scan") {
    const auto F = TrigPolyMatrix(1, 8);
    const auto hr = homological_solve(quarter_turn(), F, kGold, 20.0, 0.0);
    double expect = INFINITY;
    for (int k = -20; k <= 20; ++k) {
        if (k == 0) continue;
        const double h = 0.5 * k * kGold.omega[0];
        expect = std::min({expect, std::abs(2.0 * std::sin(h)), std::abs(2.0 * std::cos(h))});
    }
    CHECK(hr.worst_divisor == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(homological_solve(quarter_turn(), F, kGold, 20.0, expect * 1.01), Error);
}

TEST_CASE("homological equation: single mode remainder drops quadratically") {
    const Mat2 A = quarter_turn();
    const double delta = 1e-3;
    const auto F = TrigPolyMatrix::from_function(1, 6, [&](std::span<const double> t) {
        Mat2 m;
        m << 0.3, 1.0, -0.2, 0.5;
        return Mat2(delta * std::cos(t[0]) * m);
    });
    const auto hr = homological_solve(A, F, kGold, 3.0, 1e-6);
    const auto yc = hr.Y.coefficients();
    for (std::size_t i = 0; i < hr.Y.size(); ++i) {
        const int j = hr.Y.doubled_mode(i)[0];
        if (j == 2 || j == -2) continue;
        for (const auto& e : yc.entry) REQUIRE(std::abs(e[i]) < 1e-15);
    }
    // Y(theta + omega) A - A Y(theta) = F
    const auto lhs = hr.Y.shifted(kGold.omega) * A - A * hr.Y;
    for (std::size_t i = 0; i < F.size(); ++i) REQUIRE((lhs[i] - F[i]).cwiseAbs().maxCoeff() < 1e-15);

    const auto Z = TrigPolyMatrix::constant(1, 6, Mat2::Identity()) + hr.Y;
    const auto M = Z.shifted(kGold.omega).inverse() * (TrigPolyMatrix::constant(1, 6, A) + F) * Z;
    const Mat2 mean = M.mean();
    double rem = 0.0;
    for (std::size_t i = 0; i < M.size(); ++i) rem = std::max(rem, norm2(M[i] - mean));
    const double div = hr.worst_divisor;
    CHECK(rem <= 10.0 * (F.sup_norm() * F.sup_norm()) / (div * div));
    CHECK(rem < 0.01 * F.sup_norm());
}

TEST_CASE("one step contracts the remainder away from resonances") {
    const auto pot = presets::harper(kLambda);
    for (double xi : {0.15, 0.2, 0.25, 2.9, 3.0}) {
        const KamState s1 = kam_step(kam_initial(energy_for(xi), pot, kGold, half_c()));
        CHECK(s1.history.empty());
        CHECK(s1.measured <= std::pow(kLambda, 1.3));
        CHECK(s1.worst_divisor > 0.0);
    }
}

TEST_CASE("resonant energy triggers one renormalization") {
    const auto pot = presets::harper(kLambda);
    const double xi0 = bracket({1}, kGold) + 0.05;
    const KamState s0 = kam_initial(energy_for(xi0), pot, kGold, half_c());
    const KamState s1 = kam_step(s0);
    REQUIRE(s1.history.size() == 1u);
    CHECK(s1.history[0] == IVec{1});
    CHECK(s1.history_level[0] == 0);
    CHECK(std::abs(s1.xi) <= 2.0 * std::pow(s0.eps, s0.params.sigma));
    CHECK(s1.renormalization_defect < 1e-12);

    const ReducedPair pr = reduce(energy_for(xi0), pot, kGold, 3, half_c());
    REQUIRE(pr.ok);
    CHECK(pr.history.size() == 1u);
    CHECK(pr.level == 1);
    CHECK(std::abs(pr.xi) <= 2.0 * std::pow(s0.eps, s0.params.sigma));
    const double rho = rotation_number(energy_for(xi0), pot, kGold, Phase::reduced({0.0}), 100000).rho;
    CHECK(std::abs(pr.rho_rep - rho) <= 1e-4);
}

TEST_CASE("reduction of non-resonant energies") {
    const auto pot = presets::harper(kLambda);
    for (double xi : {0.15, 0.25, 2.9}) {
        const double E = energy_for(xi);
        const ReducedPair pr = reduce(E, pot, kGold, 3, half_c());
        REQUIRE(pr.ok);
        CHECK(pr.level == 0);
        CHECK(pr.residual <= 10.0 * kLambda * kLambda);
        CHECK(conjugation_residual(pr, pot, kGold) == doctest::Approx(pr.residual).epsilon(1e-6));
        CHECK(pr.det_defect < 1e-10);
        const double rho = rotation_number(E, pot, kGold, Phase::reduced({0.0}), 100000).rho;
        CHECK(std::abs(pr.rho_rep - rho) <= 1e-4);
        CHECK(std::abs(std::remainder(pr.rho_lift - pr.rho_rep, kPi)) < 1e-12);
        // e^{i rho_lift} is an eigenvalue of B
        CHECK(pr.B.trace() == doctest::Approx(2.0 * std::cos(pr.rho_lift)).epsilon(1e-12));
        for (std::size_t j = 1; j < pr.remainder_norms.size(); ++j)
            CHECK(pr.remainder_norms[j] <= pr.remainder_norms[j - 1]);
    }
    CHECK_THROWS_AS(reduce(0.0, pot, kGold, 5), Error);
    const ReducedPair hyp = reduce(3.0, pot, kGold, 2, half_c());
    CHECK_FALSE(hyp.ok);
    CHECK(hyp.kind == AngleKind::Hyperbolic);
}

TEST_CASE("free reduction is exact") {
    const ReducedPair pr = reduce(0.6, presets::zero(), kGold, 3);
    REQUIRE(pr.ok);
    CHECK(pr.residual < 1e-14);
    CHECK(pr.rho_rep == doctest::Approx(std::acos(-0.3)).epsilon(1e-14));
}

TEST_CASE("Bloch waves solve the eigenvalue equation") {
    const auto pot = presets::harper(kLambda);
    const double E = energy_for(0.2);
    const ReducedPair pr = reduce(E, pot, kGold, 3, half_c());
    REQUIRE(pr.ok);
    const std::vector<double> theta{0.4};
    const long lo = -30, hi = 30;
    const auto psi = bloch_wave(pr, kGold, theta, lo, hi);
    REQUIRE(psi.size() == static_cast<std::size_t>(hi - lo + 1));
    double defect = 0.0, size = 0.0;
    for (long n = lo + 1; n < hi; ++n) {
        const auto i = static_cast<std::size_t>(n - lo);
        const double V = eval_potential(pot, std::vector<double>{theta[0] - kGold.omega[0] + n * kGold.omega[0]});
        defect = std::max(defect, std::abs(-psi[i + 1] - psi[i - 1] + V * psi[i] - E * psi[i]));
        size = std::max(size, std::abs(psi[i]));
    }
    CHECK(size > 0.1);
    CHECK(defect <= 10.0 * pr.residual);

    // psi_{n+1}(theta) = e^{i rho} psi_n(theta + omega)
    const std::vector<double> shifted{theta[0] + kGold.omega[0]};
    const auto psi2 = bloch_wave(pr, kGold, shifted, lo, hi);
    const std::complex<double> phase(std::cos(pr.rho_lift), std::sin(pr.rho_lift));
    double cov = 0.0;
    for (long n = lo; n < hi; ++n)
        cov = std::max(cov, std::abs(psi[static_cast<std::size_t>(n + 1 - lo)] - phase * psi2[static_cast<std::size_t>(n - lo)]));
    CHECK(cov < 1e-12);
}

TEST_CASE("beta coefficients stay near the identity") {
    const auto pot = presets::harper(kLambda);
    const std::vector<double> theta{0.0};
    for (double xi : {0.2, 2.9}) {
        const ReducedPair pr = reduce(energy_for(xi), pot, kGold, 3, half_c());
        REQUIRE(pr.ok);
        for (long n = -4; n <= 4; ++n) {
            const BetaTriple b = beta_coefficients(pr, kGold, theta, n);
            CHECK(std::abs(b.diag - 1.0) <= std::pow(kLambda, 0.25));
            CHECK(std::abs(b.minus) <= std::pow(kLambda, 0.25));
            CHECK(std::abs(b.plus) <= std::pow(kLambda, 0.25));
        }
        const BetaTriple b0 = beta_coefficients(pr, kGold, theta, 0);
        CHECK(std::abs(b0.plus - b0.minus) < 1e-14);
    }
    const ReducedPair fr = reduce(0.6, presets::zero(), kGold, 1);
    const BetaTriple bf = beta_coefficients(fr, kGold, theta, 3);
    CHECK(bf.diag == doctest::Approx(1.0));
    CHECK(std::abs(bf.plus) < 1e-14);
}
