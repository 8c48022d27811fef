#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qpsim/commands.hpp"
#include "qpsim/config.hpp"
#include "qpsim/error.hpp"
#include "qpsim/io.hpp"

using namespace qps;
namespace fs = std::filesystem;

namespace {

std::string error_field(const std::string& yaml) {
    try {
        parse_config(yaml);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Config);
        return e.field();
    }
    return "<no error>";
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qpsim_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("defaults") {
    const auto cfg = parse_config("");
    CHECK(cfg.pot.dim == 1);
    CHECK(cfg.pot.coeffs.at({1}) == doctest::Approx(0.05));
    CHECK(cfg.freq.omega[0] == doctest::Approx(kPi * (std::sqrt(5.0) - 1.0)));
    CHECK(cfg.evolve.T == 50.0);
    CHECK(cfg.ids.grid.count == 201);
    CHECK(cfg.transform.mode == TransformMode::DeltaApprox);
    CHECK(cfg.seed == 1u);
}

TEST_CASE("sections and presets") {
    const auto cfg = parse_config(R"(
seed: 9
threads: 2
potential: {preset: two_frequency, lambda: 0.2}
frequency: {preset: custom, omega: [1.0, 2.5], gamma: 0.01, tau: 3}
theta: [0.1, 0.2]
evolve:
  T: 10
  initial: {kind: list, first: -1, re: [1, 0], im: [0, 1]}
transform: {mode: free-exact, n_max: 3, q0: [{n: 1, re: 0.5, im: 0.5}]}
kam: {jmax: 2, c: 0.75}
)");
    CHECK(cfg.seed == 9u);
    CHECK(cfg.threads == 2);
    CHECK(cfg.pot.dim == 2);
    CHECK(cfg.freq.tau == 3.0);
    CHECK(cfg.theta.theta[1] == doctest::Approx(0.2));
    CHECK(cfg.evolve.initial.values.size() == 2u);
    CHECK(cfg.evolve.initial.values[1] == cd(0.0, 1.0));
    CHECK(cfg.transform.mode == TransformMode::FreeExact);
    CHECK(cfg.transform.q0.at(1) == cd(0.5, 0.5));
    CHECK(cfg.kam.jmax == 2);
    CHECK(cfg.kam.params.c == 0.75);

    const auto custom = parse_config("potential: {preset: custom, dim: 1, coefficients: [{k: [2], c: 0.1}, {k: [-2], c: 0.1}]}");
    CHECK(custom.pot.degree() == 2);
    const auto grid = parse_config("scan: {grid: {values: [0.5, -0.5]}}");
    CHECK(grid.scan.grid.energies() == std::vector<double>{0.5, -0.5});
    CHECK(parse_config("scan: {grid: {E_min: 0, E_max: 1, count: 3}}").scan.grid.energies() ==
          std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("malformed configs name the offending field") {
    CHECK(error_field("potential: {preset: harper, lamda: 0.1}") == "potential.lamda");
    CHECK(error_field("scan: {niter: lots}") == "scan.niter");
    CHECK(error_field("bogus: 1") == "bogus");
    CHECK(error_field("evolve: {T: -1}") == "evolve.T");
    CHECK(error_field("evolve: {initial: {kind: triangle}}") == "evolve.initial.kind");
    CHECK(error_field("kam: {c: 0.2}") == "kam.c");
    CHECK(error_field("frequency: {preset: custom, omega: [1.0, 2.0]}") == "frequency.omega");
    CHECK(error_field("theta: 3") == "theta");
    CHECK(error_field("transform: {mode: fourier}") == "transform.mode");
    CHECK(error_field("ids: {grid: {E_min: 1, E_max: 0}}") == "ids.grid.E_max");
    CHECK(error_field("scan: [1, 2]") == "scan");
    CHECK(error_field("potential: {preset: custom, coefficients: [{k: [1], c: 0.1}]}").rfind("potential", 0) == 0);
    CHECK(error_field("seed: [") == "config");
    CHECK_THROWS_AS(load_config("/nonexistent/qpsim.yaml"), Error);
}

TEST_CASE("config hash") {
    const auto a = parse_config("potential: {preset: harper, lambda: 0.1}\nseed: 3");
    const auto b = parse_config("seed: 3\npotential:\n  lambda: 0.1\n  preset: harper\n");
    const auto c = parse_config("potential: {preset: harper, lambda: 0.1}\nseed: 4");
    const auto d = parse_config("potential: {preset: harper, lambda: 0.2}\nseed: 3");
    CHECK(config_hash(a).size() == 16u);
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
    CHECK(config_hash(a) != config_hash(d));
    CHECK(config_hash(a) == config_hash(parse_config("potential: {preset: harper, lambda: 1.0e-1}\nseed: 3\nthreads: 8")));
}

TEST_CASE("number formatting round-trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(format_real(x)) == x);
    CHECK(format_real(std::nan("")) == "nan");
    CHECK(format_real(-INFINITY) == "-inf");
}

TEST_CASE("CSV writer layout") {
    std::ostringstream os;
    Provenance prov{"00ff", 7};
    {
        CsvWriter w(os, prov, {"a", "b"});
        w.row(std::vector<double>{1.0, 0.5});
        CHECK_THROWS_AS(w.row(std::vector<double>{1.0}), Error);
    }
    const auto out = os.str();
    CHECK(out.find('\r') == std::string::npos);
    const auto ls = lines(out);
    REQUIRE(ls.size() == 5u);
    CHECK(ls[0] == "# config_hash=00ff");
    CHECK(ls[1] == std::string("# version=") + kVersion);
    CHECK(ls[2] == "# seed=7");
    CHECK(ls[3] == "a,b");
    CHECK(ls[4] == "1,0.5");
}

TEST_CASE("cocycle and transform CSV schemas") {
    Provenance prov{"abc", 1};
    std::ostringstream os;
    write_cocycle_csv(os, {{0.0, 1.0, 0.0, 0.0, 0.0, 1.0}}, prov);
    CHECK(lines(os.str())[3] == "E,rho,rho_err,lyap,lyap_err,sup_norm");

    const auto t = free_exact_table(10, 1);
    std::ostringstream ts;
    write_transform_csv(ts, t, prov, true);
    const auto ls = lines(ts.str());
    CHECK(ls[3] == "E,rho,drho,weight,level,beta_-1_m,beta_-1_0,beta_-1_p,beta_0_m,beta_0_0,beta_0_p,beta_1_m,beta_1_0,beta_1_p");
    CHECK(ls.size() == 4u + 10u);
}

TEST_CASE("JSON payloads") {
    const auto e = error_json("config", "bad", "scan.niter");
    CHECK(e["code"] == "config");
    CHECK(e["field"] == "scan.niter");
    CHECK_FALSE(error_json("io", "x", "").contains("field"));

    SlopeReport r;
    r.predicted = 2.0;
    r.measured = 2.05;
    r.tolerance = 0.05;
    const auto j = slope_report_json(r, Provenance{"h", 2});
    CHECK(j["ratio"].get<double>() == doctest::Approx(1.025));
    CHECK(j["pass"].get<bool>());
    CHECK(j["provenance"]["config_hash"] == "h");

    const auto pair = reduce(0.6, presets::zero(), presets::golden(), 1);
    const auto pj = reduced_pair_json(pair);
    CHECK(pj["ok"].get<bool>());
    CHECK(pj["Z_coefficients"].size() == 1u);  // only the mean survives in the free case
    CHECK(pj["B"][0][1].get<double>() == doctest::Approx(-1.0));
}

TEST_CASE("run_command writes artifacts with provenance") {
    auto cfg = parse_config(R"(
seed: 5
potential: {preset: zero}
scan: {grid: {E_min: -1, E_max: 1, count: 5}, niter: 2000, sup_nmax: 10}
evolve: {T: 10, dt: 0.25, half_width: 30}
)");
    const fs::path dir = scratch("run");
    RunOptions opts;
    opts.out_dir = dir.string();
    std::ostringstream log;
    CHECK(run_command("rotation", cfg, opts, log) == 0);
    const auto rot = lines(slurp(dir / "rotation.csv"));
    REQUIRE(rot.size() == 4u + 5u);
    CHECK(rot[0] == "# config_hash=" + config_hash(cfg));
    CHECK(rot[2] == "# seed=5");

    CHECK(run_command("evolve", cfg, opts, log) == 0);
    CHECK(fs::exists(dir / "evolution.csv"));
    const auto side = nlohmann::json::parse(slurp(dir / "evolution.json"));
    CHECK(side["l2_drift"].get<double>() < 1e-9);
    CHECK(side["provenance"]["seed"] == 5);

    CHECK(run_command("selftest", cfg, opts, log) == 0);
    CHECK_THROWS_AS(run_command("bogus", cfg, opts, log), Error);
    CHECK(command_names().size() == 10u);
    fs::remove_all(dir);
}

TEST_CASE("figure inputs carry the documented columns") {
    // ids-staircase, rotation-curve, lyapunov-curve, diffusion-growth and slope-compare inputs
    auto cfg = parse_config(R"(
potential: {preset: zero}
evolve: {T: 20, dt: 0.5, half_width: 40}
scan: {grid: {E_min: -1, E_max: 1, count: 3}, niter: 2000, sup_nmax: 10}
ids: {grid: {E_min: -2.2, E_max: 2.2, count: 11}, N: 100, theta_count: 2, niter: 2000}
transform: {mode: free-exact, free_count: 2000}
)");
    const fs::path dir = scratch("figures");
    RunOptions opts;
    opts.out_dir = dir.string();
    std::ostringstream log;
    for (const char* cmd : {"ids", "lyapunov", "evolve", "slope-compare"}) REQUIRE(run_command(cmd, cfg, opts, log) == 0);
    CHECK(lines(slurp(dir / "ids.csv"))[3] == "E,k,rho_over_pi");
    CHECK(lines(slurp(dir / "gaps.csv"))[3] == "E1,E2,l1,rho,residual");
    CHECK(lines(slurp(dir / "lyapunov.csv"))[3] == "E,rho,rho_err,lyap,lyap_err,sup_norm");
    const auto ev = lines(slurp(dir / "evolution.csv"));
    CHECK(ev[3] == "t,l2,diffusion");
    CHECK(ev.size() == 4u + 41u);
    const auto slope = nlohmann::json::parse(slurp(dir / "slope.json"));
    for (const char* key : {"predicted", "measured", "ratio", "relative_error", "tolerance", "pass", "provenance"})
        CHECK(slope.contains(key));
    CHECK(slope["predicted"].get<double>() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
    CHECK(slope["measured"].get<double>() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-2));
    fs::remove_all(dir);
}
