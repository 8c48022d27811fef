#include "qpsim/commands.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "qpsim/cocycle.hpp"
#include "qpsim/error.hpp"
#include "qpsim/evolution.hpp"
#include "qpsim/io.hpp"
#include "qpsim/kam.hpp"
#include "qpsim/parallel.hpp"
#include "qpsim/selftest.hpp"
#include "qpsim/spectral.hpp"
#include "qpsim/transform.hpp"

namespace qps {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Context {
    const ExperimentConfig& cfg;
    const RunOptions& opts;
    std::ostream& log;
    Provenance prov;

    std::ofstream open(const std::string& name) const {
        const fs::path p = fs::path(opts.out_dir) / name;
        std::ofstream os(p, std::ios::binary);
        if (!os) throw Error(ErrorCode::Io, "cannot write " + p.string(), "out");
        return os;
    }
    void write_json(const std::string& name, const json& j) const {
        auto os = open(name);
        os << j.dump(2) << '\n';
    }
    void note(const std::string& msg) const {
        if (opts.verbose) log << msg << '\n';
    }
};

WaveState initial_state(const ExperimentConfig& cfg) {
    const auto& in = cfg.evolve.initial;
    const long hw = cfg.evolve.half_width;
    if (in.kind == "delta") return initial::delta(cfg.pot, cfg.freq, cfg.theta, in.site, hw);
    if (in.kind == "gaussian") return initial::gaussian(cfg.pot, cfg.freq, cfg.theta, in.center, in.width, hw);
    return initial::from_list(cfg.pot, cfg.freq, cfg.theta, in.first, in.values, hw);
}

EvolutionRecord run_evolution(const Context& c, SlopeFit* fit_out) {
    const auto& e = c.cfg.evolve;
    c.note("evolving to T = " + format_real(e.T));
    EvolutionRecord rec = evolve(initial_state(c.cfg), e.T, e.dt, e.record_every, e.tol);
    const SlopeFit fit = fit_slope(rec, e.fit_fraction);
    {
        auto os = c.open("evolution.csv");
        write_evolution_csv(os, rec, c.prov);
    }
    c.write_json("evolution.json", evolution_sidecar(rec, fit, c.prov));
    if (fit_out) *fit_out = fit;
    return rec;
}

int cmd_evolve(const Context& c) {
    SlopeFit fit;
    const EvolutionRecord rec = run_evolution(c, &fit);
    c.log << "evolve: slope " << format_real(fit.slope) << ", l2 drift " << format_real(l2_drift(rec)) << '\n';
    return 0;
}

int cmd_scan(const Context& c, bool lyapunov, const std::string& file) {
    ScanOptions so;
    so.niter = c.cfg.scan.niter;
    so.sup_nmax = lyapunov ? c.cfg.scan.sup_nmax : 0;
    so.lyapunov = lyapunov;
    so.threads = c.cfg.threads;
    const auto E = c.cfg.scan.grid.energies();
    const auto rows = cocycle_scan(E, c.cfg.pot, c.cfg.freq, c.cfg.theta, so);
    auto os = c.open(file);
    write_cocycle_csv(os, rows, c.prov);
    c.log << file << ": " << rows.size() << " rows, monotonicity excess " << format_real(monotonicity_excess(rows)) << '\n';
    return 0;
}

std::vector<RotationResult> rotation_grid(const Context& c, const std::vector<double>& E, long niter) {
    std::vector<RotationResult> out(E.size());
    parallel_for(E.size(), c.cfg.threads, [&](std::size_t i) {
        out[i] = rotation_number(E[i], c.cfg.pot, c.cfg.freq, c.cfg.theta, niter);
    });
    return out;
}

int cmd_ids(const Context& c) {
    const auto& s = c.cfg.ids;
    const auto E = s.grid.energies();
    const IdsCurve curve = ids_curve(E, build_staircase(c.cfg.pot, c.cfg.freq, s.N, s.theta_count, c.cfg.threads));
    const auto rot = rotation_grid(c, E, s.niter);
    std::vector<double> rho, err;
    double dev = 0.0;
    for (std::size_t i = 0; i < rot.size(); ++i) {
        rho.push_back(rot[i].rho);
        err.push_back(rot[i].error);
        dev = std::max(dev, std::abs(curve.k[i] - rot[i].rho / kPi));
    }
    const auto gaps = gap_detect_and_label(curve, rho, err, c.cfg.freq, s.l_max);
    {
        auto os = c.open("ids.csv");
        write_ids_csv(os, curve, rho, c.prov);
    }
    {
        auto os = c.open("gaps.csv");
        write_gaps_csv(os, gaps, c.cfg.freq.dim(), c.prov);
    }
    c.log << "ids: sup |k - rho/pi| " << format_real(dev) << ", " << gaps.size() << " gaps\n";
    return 0;
}

int cmd_thouless(const Context& c) {
    const auto& s = c.cfg.thouless;
    const auto E = s.grid.energies();
    const IdsCurve curve = ids_curve(E, build_staircase(c.cfg.pot, c.cfg.freq, s.N, s.theta_count, c.cfg.threads));
    std::vector<ThoulessRow> rows(E.size());
    parallel_for(E.size(), c.cfg.threads, [&](std::size_t i) {
        rows[i].E = E[i];
        rows[i].lyapunov = lyapunov_exponent(E[i], c.cfg.pot, c.cfg.freq, c.cfg.theta, s.niter).value;
        rows[i].result = thouless_residual(E[i], curve, rows[i].lyapunov);
    });
    auto os = c.open("thouless.csv");
    write_thouless_csv(os, rows, c.prov);
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, r.result.residual);
    c.log << "thouless: max residual " << format_real(worst) << '\n';
    return 0;
}

int cmd_mfunction(const Context& c) {
    const auto& s = c.cfg.mfunction;
    std::vector<std::complex<double>> zs;
    for (double y : s.im)
        for (double x : s.re.energies()) zs.emplace_back(x, y);
    std::vector<MFunctionRow> rows(zs.size());
    parallel_for(zs.size(), c.cfg.threads, [&](std::size_t i) {
        rows[i].z = zs[i];
        rows[i].plus = m_function(zs[i], Side::Plus, c.cfg.pot, c.cfg.freq, c.cfg.theta, s.depth);
        rows[i].minus = m_function(zs[i], Side::Minus, c.cfg.pot, c.cfg.freq, c.cfg.theta, s.depth);
        rows[i].borel = borel_transform(rows[i].plus.value, rows[i].minus.value);
    });
    auto os = c.open("mfunction.csv");
    write_mfunction_csv(os, rows, c.prov);
    c.log << "mfunction: " << rows.size() << " points\n";
    return 0;
}

int cmd_kam(const Context& c) {
    const auto E = c.cfg.kam.grid.energies();
    std::vector<ReducedPair> pairs(E.size());
    parallel_for(E.size(), c.cfg.threads, [&](std::size_t i) {
        pairs[i] = reduce(E[i], c.cfg.pot, c.cfg.freq, c.cfg.kam.jmax, c.cfg.kam.params);
    });
    json list = json::array();
    int ok = 0;
    for (const auto& p : pairs) {
        list.push_back(reduced_pair_json(p));
        ok += p.ok ? 1 : 0;
    }
    c.write_json("kam.json", json{{"provenance", provenance_json(c.prov)}, {"pairs", list}});
    c.log << "kam: " << ok << " of " << pairs.size() << " reductions succeeded\n";
    return 0;
}

TransformTable make_table(const Context& c) {
    const auto& t = c.cfg.transform;
    if (t.mode == TransformMode::FreeExact) return free_exact_table(t.free_count, t.n_max);
    return build_table(c.cfg.pot, c.cfg.freq, c.cfg.theta, t.grid, t.mode, t.n_max);
}

int cmd_transform(const Context& c) {
    const TransformTable table = make_table(c);
    const auto& t = c.cfg.transform;
    json checks;
    checks["slope_predictor"] = slope_predictor(table, t.q0);
    json orth = json::array();
    const long top = std::min<long>(2, t.n_max);
    for (long m = 0; m <= top; ++m)
        for (long n = 0; n <= top; ++n) {
            const auto o = orthogonality_check(table, m, n);
            orth.push_back({{"m", m}, {"n", n}, {"lemma", o.lemma}, {"gram", o.gram}});
        }
    checks["orthogonality"] = orth;
    std::vector<int> Ms;
    for (int M = 1; M <= 32; ++M) Ms.push_back(M);
    const auto osc = oscillatory_probe(table, Ms);
    checks["oscillatory"] = {{"M", osc.M}, {"value", osc.value},
                             {"exponent", std::isnan(osc.exponent) ? json(nullptr) : json(osc.exponent)}};
    json dn = json::array();
    for (long n = 0; n <= std::min<long>(5, t.n_max); ++n) dn.push_back(derivative_norm(table, {{n, 1.0}}));
    checks["derivative_norm"] = dn;
    c.write_json("transform.json", json{{"provenance", provenance_json(c.prov)},
                                        {"mode", to_string(table.mode)},
                                        {"nodes", table.nodes.size()},
                                        {"grid_nodes", table.grid_nodes},
                                        {"dropped_gap", table.dropped_gap},
                                        {"dropped_transversality", table.dropped_transversality},
                                        {"floored", table.floored},
                                        {"kam_failures", table.kam_failures},
                                        {"resonant_nodes", table.resonant_nodes},
                                        {"checks", checks}});
    auto os = c.open("transform.csv");
    write_transform_csv(os, table, c.prov, table.mode == TransformMode::Kam);
    c.log << "transform: " << table.nodes.size() << " nodes, C = " << format_real(checks["slope_predictor"].get<double>())
          << '\n';
    return 0;
}

int cmd_slope_compare(const Context& c) {
    SlopeFit fit;
    const EvolutionRecord rec = run_evolution(c, &fit);
    const TransformTable table = make_table(c);
    FiniteSequence q0;
    const WaveState init = initial_state(c.cfg);
    for (long n = init.n_lo; n <= init.n_hi(); ++n)
        if (init.at(n) != 0.0) q0[n] = init.at(n);
    SlopeReport rep;
    rep.predicted = slope_predictor(table, q0);
    rep.measured = fit.slope;
    rep.tolerance = c.cfg.slope_tolerance;
    rep.l2_drift = l2_drift(rec);
    rep.bound_excess = check_ballistic_bound(rec);
    rep.nodes = table.nodes.size();
    c.write_json("slope.json", slope_report_json(rep, c.prov));
    c.log << "slope-compare: predicted " << format_real(rep.predicted) << ", measured " << format_real(rep.measured)
          << ", relative error " << format_real(rep.relative_error()) << (rep.pass() ? " (within" : " (outside")
          << " tolerance)\n";
    return 0;
}

int cmd_selftest(const Context& c) {
    const auto results = run_selftest();
    int failed = 0;
    json list = json::array();
    for (const auto& r : results) {
        c.log << (r.pass ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
        failed += r.pass ? 0 : 1;
        list.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    }
    c.write_json("selftest.json", json{{"provenance", provenance_json(c.prov)}, {"checks", list}, {"failed", failed}});
    c.log << results.size() - static_cast<std::size_t>(failed) << " of " << results.size() << " checks passed\n";
    return failed == 0 ? 0 : 1;
}

using Handler = std::function<int(const Context&)>;

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h{
        {"evolve", cmd_evolve},
        {"rotation", [](const Context& c) { return cmd_scan(c, false, "rotation.csv"); }},
        {"lyapunov", [](const Context& c) { return cmd_scan(c, true, "lyapunov.csv"); }},
        {"ids", cmd_ids},
        {"thouless", cmd_thouless},
        {"mfunction", cmd_mfunction},
        {"kam", cmd_kam},
        {"transform", cmd_transform},
        {"slope-compare", cmd_slope_compare},
        {"selftest", cmd_selftest},
    };
    return h;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, _] : handlers()) v.push_back(k);
        return v;
    }();
    return names;
}

int run_command(const std::string& name, const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log) {
    const auto it = handlers().find(name);
    if (it == handlers().end()) throw Error(ErrorCode::InvalidArgument, "unknown subcommand '" + name + "'", "subcommand");
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + opts.out_dir, "out");
    const Context c{cfg, opts, log, Provenance{config_hash(cfg), cfg.seed, kVersion}};
    return it->second(c);
}

}  // namespace qps
