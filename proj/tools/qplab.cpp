#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "qpsim/commands.hpp"
#include "qpsim/config.hpp"
#include "qpsim/error.hpp"
#include "qpsim/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Numerical experiments for discrete quasi-periodic Schroedinger operators", "qplab"};
    app.set_version_flag("--version", std::string(qps::kVersion));
    app.require_subcommand(1, 1);

    std::string config_path;
    qps::RunOptions opts;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    app.add_option("-c,--config", config_path, "YAML experiment file (defaults apply when omitted)");
    app.add_option("-o,--out", opts.out_dir, "Output directory");
    app.add_option("-j,--threads", threads, "Worker threads (0 = hardware concurrency)");
    app.add_option("--seed", seed, "Seed override");
    app.add_flag("-v,--verbose", opts.verbose, "Print progress detail");
    app.fallthrough();

    for (const auto& name : qps::command_names()) app.add_subcommand(name, "Run the " + name + " experiment");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        qps::ExperimentConfig cfg = config_path.empty() ? qps::parse_config("") : qps::load_config(config_path);
        if (threads) {
            if (*threads < 0) throw qps::Error(qps::ErrorCode::Config, "threads must be non-negative", "threads");
            cfg.threads = *threads;
        }
        if (seed) cfg.seed = *seed;
        return qps::run_command(name, cfg, opts, std::cout);
    } catch (const qps::Error& e) {
        std::cerr << qps::error_json(qps::to_string(e.code()), e.what(), e.field()).dump() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << qps::error_json("Internal", e.what(), "").dump() << '\n';
        return 3;
    }
}
