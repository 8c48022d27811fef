#include "qpsim/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "qpsim/cocycle.hpp"
#include "qpsim/error.hpp"
#include "qpsim/evolution.hpp"
#include "qpsim/kam.hpp"
#include "qpsim/spectral.hpp"
#include "qpsim/transform.hpp"

namespace qps {

namespace {

struct Outcome {
    bool pass;
    double value;
};

Mat2 free_A(double E) {
    Mat2 m;
    m << -E, -1.0, 1.0, 0.0;
    return m;
}

}  // namespace

std::vector<SelfCheck> run_selftest() {
    const Frequency gold = presets::golden();
    const PotentialSpec zero = presets::zero();
    const Phase origin{{0.0}};
    std::vector<std::pair<std::string, std::function<Outcome()>>> checks;

    checks.emplace_back("margin vanishes for omega = pi", [] {
        const auto m = diophantine_margin(Frequency::make({kPi}, 0.1, 2.0), 2);
        return Outcome{m.margin < 1e-12, m.margin};
    });
    checks.emplace_back("Harper potential at 0 is 2 lambda", [] {
        const double v = eval_potential(presets::harper(0.3), Phase{{0.0}});
        return Outcome{std::abs(v - 0.6) < 1e-15, v};
    });
    checks.emplace_back("Harper potential vanishes at pi/2", [] {
        const double v = eval_potential(presets::harper(0.5), Phase{{kPi / 2}});
        return Outcome{std::abs(v) < 1e-15, v};
    });
    checks.emplace_back("hull of zero potential", [&] {
        double worst = 0.0;
        for (double v : hull_sequence(zero, gold, origin, -5, 5)) worst = std::max(worst, std::abs(v));
        return Outcome{worst == 0.0, worst};
    });
    checks.emplace_back("hull entries 2 lambda cos(n omega)", [&] {
        const auto h = hull_sequence(presets::harper(0.2), gold, origin, 0, 6);
        double worst = 0.0;
        for (int n = 0; n <= 6; ++n) worst = std::max(worst, std::abs(h[static_cast<std::size_t>(n)] - 0.4 * std::cos(n * gold.omega[0])));
        return Outcome{worst < 1e-14, worst};
    });
    checks.emplace_back("free H e_0", [&] {
        const WaveState s = initial::delta(zero, gold, origin, 0, 3);
        const auto h = apply_hamiltonian(s);
        double worst = 0.0;
        for (long n = s.n_lo; n <= s.n_hi(); ++n) {
            const double want = (n == 1 || n == -1) ? -1.0 : 0.0;
            worst = std::max(worst, std::abs(h[static_cast<std::size_t>(n - s.n_lo)] - want));
        }
        return Outcome{worst == 0.0, worst};
    });
    checks.emplace_back("Harper H e_0 diagonal", [&] {
        const WaveState s = initial::delta(presets::harper(0.25), gold, origin, 0, 3);
        const auto h = apply_hamiltonian(s);
        const double d = std::abs(h[3] - 0.5) + std::abs(h[2] + 1.0) + std::abs(h[4] + 1.0);
        return Outcome{d < 1e-15, d};
    });
    checks.emplace_back("diffusion norms of e_0, e_5, symmetric pair", [&] {
        const double a = diffusion_norm(initial::delta(zero, gold, origin, 0, 6));
        const double b = diffusion_norm(initial::delta(zero, gold, origin, 5, 6));
        const double r = 1.0 / std::sqrt(2.0);
        const double c = diffusion_norm(initial::from_list(zero, gold, origin, -1, {r, 0.0, r}, 2));
        const double d = std::abs(a) + std::abs(b - 5.0) + std::abs(c - 1.0);
        return Outcome{d < 1e-14, d};
    });
    checks.emplace_back("zero steps leave the state unchanged", [&] {
        const WaveState s = initial::gaussian(presets::harper(0.1), gold, origin, 0.0, 2.0, 30);
        const WaveState t = propagate(s, 0.5, 0, 1e-12);
        double d = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) d = std::max(d, std::abs(s.amps[i] - t.amps[i]));
        return Outcome{d == 0.0, d};
    });
    checks.emplace_back("slope of an exact line", [&] {
        EvolutionRecord r;
        for (int i = 0; i <= 20; ++i) {
            r.times.push_back(i);
            r.diffusion.push_back(1.5 * i);
            r.l2.push_back(1.0);
        }
        const SlopeFit f = fit_slope(r, 0.0);
        return Outcome{std::abs(f.slope - 1.5) < 1e-12 && f.stderr_slope < 1e-10, f.slope};
    });
    checks.emplace_back("slope of a constant record", [&] {
        EvolutionRecord r;
        for (int i = 0; i <= 20; ++i) {
            r.times.push_back(i);
            r.diffusion.push_back(3.0);
            r.l2.push_back(1.0);
        }
        const SlopeFit f = fit_slope(r, 0.0);
        return Outcome{std::abs(f.slope) < 1e-12, f.slope};
    });
    checks.emplace_back("bound check on a single sample", [&] {
        EvolutionRecord r;
        r.times = {0.0};
        r.diffusion = {2.0};
        r.l2 = {1.0};
        const double v = check_ballistic_bound(r);
        return Outcome{v == 0.0, v};
    });
    checks.emplace_back("transfer matrices at E = 0", [&] {
        const Mat2 a = transfer_matrix(0.0, zero, origin);
        const Mat2 b = transfer_matrix(0.0, presets::harper(1.0), origin);
        Mat2 wa, wb;
        wa << 0, -1, 1, 0;
        wb << 2, -1, 1, 0;
        const double d = (a - wa).norm() + (b - wb).norm();
        return Outcome{d == 0.0, d};
    });
    checks.emplace_back("transfer matrices are unimodular", [&] {
        double worst = 0.0;
        for (double E : {-2.7, -0.3, 0.9, 3.1})
            for (double th : {0.1, 2.0, 5.5})
                worst = std::max(worst, std::abs(transfer_matrix(E, presets::harper(0.7), Phase{{th}}).determinant() - 1.0));
        return Outcome{worst < 1e-14, worst};
    });
    checks.emplace_back("free rotation number at E = 0", [&] {
        const double r = rotation_number(0.0, zero, gold, origin, 10000).rho;
        return Outcome{std::abs(r - kPi / 2) < 1e-3, r};
    });
    checks.emplace_back("free Lyapunov exponent at E = 0", [&] {
        const double l = lyapunov_exponent(0.0, zero, gold, origin, 10000).value;
        return Outcome{l < 1e-3, l};
    });
    checks.emplace_back("free cocycle stays bounded", [&] {
        const std::vector<Phase> ph{origin};
        const double s = boundedness_sup(0.0, zero, gold, ph, 10000);
        return Outcome{s <= 2.0, s};
    });
    checks.emplace_back("one-site truncation", [&] {
        const PotentialSpec p = presets::harper(0.4);
        const auto op = TruncatedOperator::make(p, gold, Phase{{0.3}}, 0, 1);
        const double v = eigen_spectrum(op).values(0);
        return Outcome{std::abs(v - eval_potential(p, Phase{{0.3}})) < 1e-15, v};
    });
    checks.emplace_back("IDS outside the spectrum", [&] {
        const PotentialSpec p = presets::harper(0.3);
        const double lo = ids(-2.0 - p.eps0 - 0.1, p, gold, 50, 2), hi = ids(2.0 + p.eps0 + 0.1, p, gold, 50, 2);
        return Outcome{lo == 0.0 && hi == 1.0, hi - lo};
    });
    checks.emplace_back("free IDS has no interior gaps", [&] {
        std::vector<double> E, rho, err;
        for (int i = 0; i < 39; ++i) E.push_back(-1.9 + 0.1 * i);
        const IdsCurve curve = ids_curve(E, build_staircase(zero, gold, 400, 1, 1));
        for (double e : E) {
            const auto r = rotation_number(e, zero, gold, origin, 10000);
            rho.push_back(r.rho);
            err.push_back(r.error);
        }
        const auto gaps = gap_detect_and_label(curve, rho, err, gold, 5);
        return Outcome{gaps.empty(), static_cast<double>(gaps.size())};
    });
    checks.emplace_back("energies above the spectrum carry label 0", [&] {
        const PotentialSpec p = presets::harper(0.1);
        std::vector<double> E, rho, err;
        for (int i = 0; i < 8; ++i) E.push_back(2.4 + 0.1 * i);
        const IdsCurve curve = ids_curve(E, build_staircase(p, gold, 200, 2, 1));
        for (double e : E) {
            const auto r = rotation_number(e, p, gold, origin, 10000);
            rho.push_back(r.rho);
            err.push_back(r.error);
        }
        const auto gaps = gap_detect_and_label(curve, rho, err, gold, 5);
        const bool ok = gaps.size() == 1 && norm1(gaps[0].label) == 0;
        return Outcome{ok, static_cast<double>(gaps.size())};
    });
    checks.emplace_back("m-functions are Herglotz", [&] {
        double worst = 1.0;
        for (const auto z : {std::complex<double>(0.3, 0.2), std::complex<double>(-1.7, 0.05), std::complex<double>(2.5, 1.0)})
            for (Side s : {Side::Plus, Side::Minus})
                worst = std::min(worst, m_function(z, s, presets::harper(0.4), gold, Phase{{0.7}}, 2000).value.imag());
        return Outcome{worst > 0.0, worst};
    });
    checks.emplace_back("free m-functions agree on both sides", [&] {
        const std::complex<double> z(0.4, 0.3);
        const auto a = m_function(z, Side::Plus, zero, gold, origin, 2000).value;
        const auto b = m_function(z, Side::Minus, zero, gold, origin, 2000).value;
        return Outcome{std::abs(a - b) < 1e-8, std::abs(a - b)};
    });
    checks.emplace_back("Borel transform is Herglotz", [&] {
        const auto m1 = m_function({0.2, 0.1}, Side::Plus, presets::harper(0.3), gold, origin, 2000).value;
        const auto m2 = m_function({0.2, 0.1}, Side::Minus, presets::harper(0.3), gold, origin, 2000).value;
        const double im = borel_transform(m1, m2).value.imag();
        return Outcome{im > 0.0, im};
    });
    checks.emplace_back("Borel transform of m = i", [] {
        const auto v = borel_transform({0.0, 1.0}, {0.0, 1.0}).value;
        return Outcome{std::abs(v - std::complex<double>(0.0, 1.0)) < 1e-15, v.imag()};
    });
    checks.emplace_back("free classical u_2 at E = 0", [] {
        const double u = free_classical_transform(0.0, 2).u;
        return Outcome{std::abs(u) < 1e-15, u};
    });
    checks.emplace_back("phase check at t = 0", [&] {
        const auto op = TruncatedOperator::make(presets::harper(0.2), gold, origin, -10, 21);
        const auto pairs = eigen_spectrum(op, true);
        std::vector<std::complex<double>> q(21, 0.0);
        q[10] = 1.0;
        const double d = eigenbasis_phase_check(op, pairs, q, 0.0);
        return Outcome{d < 1e-14, d};
    });
    checks.emplace_back("eigen-angle classification", [] {
        Mat2 par;
        par << 1.0, 1.0, 0.0, 1.0;
        const auto a = eigen_angle(free_A(0.0));
        const bool ok = a.kind == AngleKind::Elliptic && std::abs(a.alpha - kPi / 2) < 1e-15 &&
                        eigen_angle(free_A(3.0)).kind == AngleKind::Hyperbolic &&
                        eigen_angle(par).kind == AngleKind::Parabolic;
        return Outcome{ok, a.alpha};
    });
    checks.emplace_back("exact resonance is detected", [&] {
        const IVec k{1};
        const auto r = detect_resonance(0.5 * dot(k, gold.omega), 3.0, 1e-4, gold, 1.0, 0.5);
        const auto none = detect_resonance(0.5 * dot(k, gold.omega) + 0.3, 3.0, 1e-4, gold, 1.0, 0.5);
        return Outcome{r && *r == k && !none, r ? static_cast<double>((*r)[0]) : 0.0};
    });
    checks.emplace_back("renormalization by a bracket in pi Z", [&] {
        const Frequency half = Frequency::make({kPi}, 0.1, 2.0);
        const KamState s = kam_initial(0.3, zero, half);
        const KamState r = renormalize(s, IVec{2});
        const double d = dist_pi(r.xi - s.xi);
        return Outcome{d < 1e-12, d};
    });
    checks.emplace_back("renormalized angle with F = 0", [&] {
        KamState s = kam_initial(0.3, zero, gold);
        const KamState r = renormalize(s, IVec{2});
        const double want = s.xi - dot(IVec{2}, gold.omega) / 2;
        const double d = std::abs(std::remainder(r.xi - want, kTwoPi));
        return Outcome{d < 1e-12, d};
    });
    checks.emplace_back("homological equation with F = 0", [&] {
        const TrigPolyMatrix F(1, 6);
        const auto h = homological_solve(free_A(0.0), F, gold, 5.0, 0.0);
        return Outcome{h.Y.sup_norm() == 0.0, h.Y.sup_norm()};
    });
    checks.emplace_back("free KAM step", [&] {
        const KamState s = kam_step(kam_initial(0.5, zero, gold));
        const double d = s.F.sup_norm() + (s.Z.mean() - Mat2::Identity()).norm();
        return Outcome{d == 0.0, d};
    });
    checks.emplace_back("free reduction", [&] {
        const ReducedPair p = reduce(0.5, zero, gold);
        const double d = (p.B - free_A(0.5)).norm() + p.residual;
        return Outcome{p.ok && d < 1e-14, d};
    });
    checks.emplace_back("free Bloch wave", [&] {
        const ReducedPair p = reduce(0.0, zero, gold);
        const std::vector<double> th{0.4};
        const auto psi = bloch_wave(p, gold, th, -6, 6);
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < psi.size(); ++i) worst = std::max(worst, std::abs(-psi[i + 1] - psi[i - 1]));
        return Outcome{worst < 1e-14, worst};
    });
    checks.emplace_back("free beta coefficients", [&] {
        const ReducedPair p = reduce(-0.7, zero, gold);
        const std::vector<double> th{1.1};
        double worst = 0.0;
        for (long n = -3; n <= 3; ++n) {
            const BetaTriple b = beta_coefficients(p, gold, th, n);
            worst = std::max({worst, std::abs(b.diag - 1.0), std::abs(b.plus), std::abs(b.minus)});
        }
        return Outcome{worst < 1e-14, worst};
    });

    const TransformTable free_table = free_exact_table(4000, 6);
    checks.emplace_back("delta table gives sines and cosines", [&] {
        double worst = 0.0;
        for (std::size_t i = 0; i < free_table.nodes.size(); i += 97)
            for (long n = -4; n <= 4; ++n) {
                const double r = free_table.nodes[i].rho;
                worst = std::max({worst, std::abs(free_table.K(i, n) - std::sin(n * r)), std::abs(free_table.J(i, n) - std::cos(n * r))});
            }
        return Outcome{worst < 1e-14, worst};
    });
    checks.emplace_back("transform of e_0 and e_1", [&] {
        const auto g0 = apply_transform(free_table, {{0, 1.0}});
        const auto g1 = apply_transform(free_table, {{1, 1.0}});
        double worst = 0.0;
        for (std::size_t i = 0; i < free_table.nodes.size(); ++i) {
            const double r = free_table.nodes[i].rho;
            worst = std::max({worst, std::abs(g0.g1[i]), std::abs(g0.g2[i] - 1.0), std::abs(g1.g1[i] - std::sin(r)),
                              std::abs(g1.g2[i] - std::cos(r))});
        }
        return Outcome{worst < 1e-14, worst};
    });
    checks.emplace_back("transform is linear", [&] {
        const std::complex<double> a(0.3, -1.2), b(2.0, 0.5);
        const FiniteSequence q{{-2, {0.1, 0.4}}, {1, 1.0}}, p{{0, -0.5}, {3, {0.0, 2.0}}};
        FiniteSequence comb;
        for (const auto& [n, v] : q) comb[n] += a * v;
        for (const auto& [n, v] : p) comb[n] += b * v;
        const auto Gq = apply_transform(free_table, q), Gp = apply_transform(free_table, p), G = apply_transform(free_table, comb);
        double worst = 0.0;
        for (std::size_t i = 0; i < G.g1.size(); ++i)
            worst = std::max({worst, std::abs(G.g1[i] - a * Gq.g1[i] - b * Gp.g1[i]), std::abs(G.g2[i] - a * Gq.g2[i] - b * Gp.g2[i])});
        return Outcome{worst < 1e-13, worst};
    });
    checks.emplace_back("norm of the zero sequence", [&] {
        const double v = l2_dphi_norm(free_table, apply_transform(free_table, {}));
        return Outcome{v == 0.0, v};
    });
    checks.emplace_back("slope predictor scales linearly", [&] {
        const double one = slope_predictor(free_table, {{0, 1.0}, {1, 1.0}});
        const double three = slope_predictor(free_table, {{0, 3.0}, {1, 3.0}});
        return Outcome{std::abs(three - 3.0 * one) < 1e-12, one};
    });
    checks.emplace_back("free orthogonality", [&] {
        double worst = 0.0;
        for (long m = 0; m <= 2; ++m)
            for (long n = 0; n <= 2; ++n) {
                const auto o = orthogonality_check(free_table, m, n);
                worst = std::max({worst, o.lemma, o.gram});
            }
        return Outcome{worst <= 1e-6, worst};
    });
    checks.emplace_back("free oscillatory integrals", [&] {
        const auto p = oscillatory_probe(free_table, {1, 2, 3, 5, 8, -3});
        double worst = 0.0;
        for (double v : p.value) worst = std::max(worst, v);
        return Outcome{worst <= 1e-8 && p.value[2] == p.value[5], worst};
    });
    checks.emplace_back("free derivative norms", [&] {
        double worst = std::abs(derivative_norm(free_table, {{0, 1.0}}));
        for (long n = 1; n <= 5; ++n) worst = std::max(worst, std::abs(derivative_norm(free_table, {{n, 1.0}}) - n));
        return Outcome{worst <= 1e-6, worst};
    });

    std::vector<SelfCheck> out;
    for (const auto& [name, fn] : checks) {
        SelfCheck c{name, false, {}};
        try {
            const Outcome o = fn();
            c.pass = o.pass;
            std::ostringstream os;
            os.precision(6);
            os << "value " << o.value;
            c.detail = os.str();
        } catch (const Error& e) {
            c.detail = std::string(to_string(e.code())) + ": " + e.what();
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace qps
