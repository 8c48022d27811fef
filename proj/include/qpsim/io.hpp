#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpsim/cocycle.hpp"
#include "qpsim/evolution.hpp"
#include "qpsim/kam.hpp"
#include "qpsim/spectral.hpp"
#include "qpsim/transform.hpp"

namespace qps {

inline constexpr const char* kVersion = "0.1.0";

/// Stamped into every output file.
struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version = kVersion;
};

/// 17 significant digits, round-trip exact.
std::string format_real(double x);

/// Comma-separated rows with LF endings, preceded by `# key=value` provenance lines and a header row.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, const Provenance& prov, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void row(const std::vector<std::string>& cells);

private:
    std::ostream& os_;
    std::size_t width_;
};

void write_evolution_csv(std::ostream& os, const EvolutionRecord& rec, const Provenance& prov);
void write_cocycle_csv(std::ostream& os, const std::vector<CocycleRow>& rows, const Provenance& prov);
void write_ids_csv(std::ostream& os, const IdsCurve& curve, const std::vector<double>& rho, const Provenance& prov);
void write_gaps_csv(std::ostream& os, const std::vector<GapRecord>& gaps, int dim, const Provenance& prov);
void write_transform_csv(std::ostream& os, const TransformTable& table, const Provenance& prov, bool with_beta);

struct ThoulessRow {
    double E = 0.0;
    double lyapunov = 0.0;
    ThoulessResult result;
};
void write_thouless_csv(std::ostream& os, const std::vector<ThoulessRow>& rows, const Provenance& prov);

struct MFunctionRow {
    std::complex<double> z;
    MFunctionResult plus;
    MFunctionResult minus;
    BorelResult borel;
};
void write_mfunction_csv(std::ostream& os, const std::vector<MFunctionRow>& rows, const Provenance& prov);

nlohmann::json provenance_json(const Provenance& prov);
/// Run metadata that accompanies the evolution CSV.
nlohmann::json evolution_sidecar(const EvolutionRecord& rec, const SlopeFit& fit, const Provenance& prov);
/// Reduction summary with the significant Fourier coefficients of Z (|c| > coeff_cut).
nlohmann::json reduced_pair_json(const ReducedPair& pair, double coeff_cut = 1e-12);

struct SlopeReport {
    double predicted = 0.0;
    double measured = 0.0;
    double tolerance = 0.0;
    double l2_drift = 0.0;
    double bound_excess = 0.0;
    std::size_t nodes = 0;

    double ratio() const { return measured / predicted; }
    double relative_error() const { return std::abs(measured - predicted) / predicted; }
    bool pass() const { return relative_error() <= tolerance; }
};
nlohmann::json slope_report_json(const SlopeReport& rep, const Provenance& prov);

/// {code, message, field?}
nlohmann::json error_json(const std::string& code, const std::string& message, const std::string& field);

}  // namespace qps
