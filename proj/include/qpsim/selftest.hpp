#pragma once

#include <string>
#include <vector>

namespace qps {

struct SelfCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Closed-form small-instance checks across all modules; each runs in milliseconds.
std::vector<SelfCheck> run_selftest();

}  // namespace qps
