#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpsim/core.hpp"
#include "qpsim/kam.hpp"
#include "qpsim/transform.hpp"

namespace qps {

struct EnergyGrid {
    double E_min = -2.2;
    double E_max = 2.2;
    int count = 41;
    std::vector<double> values;  // explicit list; overrides the range when non-empty

    std::vector<double> energies() const;
};

struct InitialSpec {
    std::string kind = "delta";  // delta | gaussian | list
    long site = 0;
    double center = 0.0;
    double width = 1.0;
    long first = 0;
    std::vector<std::complex<double>> values;
};

struct EvolveConfig {
    double T = 50.0;
    double dt = 0.5;
    long record_every = 1;
    double tol = 1e-13;
    long half_width = 150;
    double fit_fraction = 0.5;
    InitialSpec initial;
};

struct ScanConfig {
    EnergyGrid grid;
    long niter = 100000;
    long sup_nmax = 1000;
};

struct IdsConfig {
    EnergyGrid grid{-2.2, 2.2, 201, {}};
    long N = 2000;
    int theta_count = 16;
    long niter = 100000;
    int l_max = 10;
};

struct ThoulessConfig {
    EnergyGrid grid{-1.9, 1.9, 21, {}};
    long N = 2000;
    int theta_count = 16;
    long niter = 100000;
};

struct MFunctionConfig {
    EnergyGrid re{-3.0, 3.0, 31, {}};
    std::vector<double> im{0.5, 0.1, 0.01};
    long depth = 4000;
};

struct KamConfig {
    EnergyGrid grid{-1.9, 1.9, 11, {}};
    int jmax = 3;
    KamParams params;
};

struct TransformConfig {
    TransformMode mode = TransformMode::DeltaApprox;
    int n_max = 6;
    int free_count = 4000;  // nodes of the exact free table
    GridSpec grid;
    FiniteSequence q0{{0, 1.0}};
};

struct ExperimentConfig {
    PotentialSpec pot;
    Frequency freq;
    Phase theta;
    std::uint64_t seed = 1;
    int threads = 0;
    EvolveConfig evolve;
    ScanConfig scan;
    IdsConfig ids;
    ThoulessConfig thouless;
    MFunctionConfig mfunction;
    KamConfig kam;
    TransformConfig transform;
    double slope_tolerance = 0.05;  // relative, used by slope-compare
    std::string canonical;          // normalized text the hash is taken from
};

/// Parses YAML text; unknown keys and malformed values raise Config errors naming the field path.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace qps
