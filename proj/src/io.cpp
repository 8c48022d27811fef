#include "qpsim/io.hpp"

#include <cmath>
#include <cstdio>

#include "qpsim/error.hpp"

namespace qps {

using nlohmann::json;

std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

CsvWriter::CsvWriter(std::ostream& os, const Provenance& prov, const std::vector<std::string>& header)
    : os_(os), width_(header.size()) {
    os_ << "# config_hash=" << prov.config_hash << '\n';
    os_ << "# version=" << prov.version << '\n';
    os_ << "# seed=" << prov.seed << '\n';
    row(header);
}

void CsvWriter::row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_real(v));
    row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error(ErrorCode::DimensionMismatch, "CSV row width differs from the header", "row");
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
    if (!os_) throw Error(ErrorCode::Io, "write failed", "csv");
}

void write_evolution_csv(std::ostream& os, const EvolutionRecord& rec, const Provenance& prov) {
    CsvWriter w(os, prov, {"t", "l2", "diffusion"});
    for (std::size_t i = 0; i < rec.times.size(); ++i) w.row({rec.times[i], rec.l2[i], rec.diffusion[i]});
}

void write_cocycle_csv(std::ostream& os, const std::vector<CocycleRow>& rows, const Provenance& prov) {
    CsvWriter w(os, prov, {"E", "rho", "rho_err", "lyap", "lyap_err", "sup_norm"});
    for (const auto& r : rows) w.row({r.E, r.rho, r.rho_err, r.lyap, r.lyap_err, r.sup_norm});
}

void write_ids_csv(std::ostream& os, const IdsCurve& curve, const std::vector<double>& rho, const Provenance& prov) {
    if (rho.size() != curve.E.size()) throw Error(ErrorCode::DimensionMismatch, "rotation numbers do not match the curve", "rho");
    CsvWriter w(os, prov, {"E", "k", "rho_over_pi"});
    for (std::size_t i = 0; i < curve.E.size(); ++i) w.row({curve.E[i], curve.k[i], rho[i] / kPi});
}

void write_gaps_csv(std::ostream& os, const std::vector<GapRecord>& gaps, int dim, const Provenance& prov) {
    std::vector<std::string> header{"E1", "E2"};
    for (int i = 0; i < dim; ++i) header.push_back("l" + std::to_string(i + 1));
    header.push_back("rho");
    header.push_back("residual");
    CsvWriter w(os, prov, header);
    for (const auto& g : gaps) {
        std::vector<std::string> cells{format_real(g.E1), format_real(g.E2)};
        for (int i = 0; i < dim; ++i)
            cells.push_back(std::to_string(i < static_cast<int>(g.label.size()) ? g.label[static_cast<std::size_t>(i)] : 0));
        cells.push_back(format_real(g.rho));
        cells.push_back(format_real(g.residual));
        w.row(cells);
    }
}

void write_transform_csv(std::ostream& os, const TransformTable& table, const Provenance& prov, bool with_beta) {
    std::vector<std::string> header{"E", "rho", "drho", "weight", "level"};
    if (with_beta)
        for (long n = -table.n_max; n <= table.n_max; ++n)
            for (const char* tag : {"m", "0", "p"}) header.push_back("beta_" + std::to_string(n) + "_" + tag);
    CsvWriter w(os, prov, header);
    for (std::size_t i = 0; i < table.nodes.size(); ++i) {
        const auto& node = table.nodes[i];
        std::vector<double> v{node.E, node.rho, node.drho, node.weight_phi(), static_cast<double>(node.level)};
        if (with_beta)
            for (long n = -table.n_max; n <= table.n_max; ++n)
                for (int d = -1; d <= 1; ++d) v.push_back(table.beta(i, n, d));
        w.row(v);
    }
}

void write_thouless_csv(std::ostream& os, const std::vector<ThoulessRow>& rows, const Provenance& prov) {
    CsvWriter w(os, prov, {"E", "lyap", "integral", "residual", "ill_conditioned"});
    for (const auto& r : rows)
        w.row({r.E, r.lyapunov, r.result.integral, r.result.residual, r.result.ill_conditioned ? 1.0 : 0.0});
}

void write_mfunction_csv(std::ostream& os, const std::vector<MFunctionRow>& rows, const Provenance& prov) {
    CsvWriter w(os, prov,
                {"re_z", "im_z", "re_m_plus", "im_m_plus", "re_m_minus", "im_m_minus", "re_M", "im_M", "change",
                 "converged", "near_singular"});
    for (const auto& r : rows)
        w.row({r.z.real(), r.z.imag(), r.plus.value.real(), r.plus.value.imag(), r.minus.value.real(),
               r.minus.value.imag(), r.borel.value.real(), r.borel.value.imag(), std::max(r.plus.change, r.minus.change),
               (r.plus.converged && r.minus.converged) ? 1.0 : 0.0, r.borel.near_singular ? 1.0 : 0.0});
}

json provenance_json(const Provenance& prov) {
    return json{{"config_hash", prov.config_hash}, {"version", prov.version}, {"seed", prov.seed}};
}

json evolution_sidecar(const EvolutionRecord& rec, const SlopeFit& fit, const Provenance& prov) {
    json growth = json::array();
    for (const auto& g : rec.growth) growth.push_back({{"t", g.t}, {"n_lo", g.n_lo}, {"n_hi", g.n_hi}});
    return json{{"provenance", provenance_json(prov)},
                {"dt", rec.dt},
                {"tol", rec.tol},
                {"chebyshev_order", rec.chebyshev_order},
                {"samples", rec.times.size()},
                {"final_window", {rec.final_n_lo, rec.final_n_hi}},
                {"growth", growth},
                {"l2_drift", l2_drift(rec)},
                {"ballistic_bound_excess", check_ballistic_bound(rec)},
                {"slope", {{"value", fit.slope}, {"intercept", fit.intercept}, {"stderr", fit.stderr_slope},
                           {"samples", fit.samples}}}};
}

json reduced_pair_json(const ReducedPair& pair, double coeff_cut) {
    json history = json::array();
    for (const auto& k : pair.history) history.push_back(k);
    json coeffs = json::array();
    const auto c = pair.Z.coefficients();
    for (std::size_t i = 0; i < pair.Z.size(); ++i) {
        double m = 0.0;
        for (const auto& e : c.entry) m = std::max(m, std::abs(e[i]));
        if (m <= coeff_cut) continue;
        std::vector<double> mode;
        for (int j : pair.Z.doubled_mode(i)) mode.push_back(0.5 * j);
        json entries = json::array();
        for (const auto& e : c.entry) entries.push_back({e[i].real(), e[i].imag()});
        coeffs.push_back({{"mode", mode}, {"Z", entries}});
    }
    return json{{"E", pair.E},
                {"ok", pair.ok},
                {"failure", pair.failure},
                {"kind", to_string(pair.kind)},
                {"rho_rep", pair.rho_rep},
                {"rho_lift", pair.rho_lift},
                {"xi", pair.xi},
                {"level", pair.level},
                {"history", history},
                {"residual", pair.residual},
                {"det_defect", pair.det_defect},
                {"remainder_norms", pair.remainder_norms},
                {"eps", pair.eps},
                {"B", {{pair.B(0, 0), pair.B(0, 1)}, {pair.B(1, 0), pair.B(1, 1)}}},
                {"Z_coefficients", coeffs}};
}

json slope_report_json(const SlopeReport& rep, const Provenance& prov) {
    return json{{"provenance", provenance_json(prov)},
                {"predicted", rep.predicted},
                {"measured", rep.measured},
                {"ratio", rep.ratio()},
                {"relative_error", rep.relative_error()},
                {"tolerance", rep.tolerance},
                {"pass", rep.pass()},
                {"l2_drift", rep.l2_drift},
                {"ballistic_bound_excess", rep.bound_excess},
                {"transform_nodes", rep.nodes}};
}

json error_json(const std::string& code, const std::string& message, const std::string& field) {
    json j{{"code", code}, {"message", message}};
    if (!field.empty()) j["field"] = field;
    return j;
}

}  // namespace qps
