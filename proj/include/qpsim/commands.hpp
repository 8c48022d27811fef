#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "qpsim/config.hpp"

namespace qps {

struct RunOptions {
    std::string out_dir = ".";
    bool verbose = false;
};

/// Subcommand names accepted by run_command.
const std::vector<std::string>& command_names();

/// Runs one subcommand, writing its artifacts under opts.out_dir and a short summary to `log`.
/// Returns the process exit status; module failures surface as qps::Error.
int run_command(const std::string& name, const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log);

}  // namespace qps
