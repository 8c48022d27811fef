#include "qpsim/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpsim/cocycle.hpp"
#include "qpsim/error.hpp"
#include "qpsim/parallel.hpp"

namespace qps {

namespace {

double pick(const BetaTriple& b, int delta) {
    switch (delta) {
        case -1: return b.minus;
        case 0: return b.diag;
        case 1: return b.plus;
        default: throw Error(ErrorCode::InvalidArgument, "beta shift must be -1, 0 or 1", "delta");
    }
}

void check_support(const TransformTable& table, const FiniteSequence& q) {
    for (const auto& [n, v] : q)
        if (std::abs(n) > table.n_max)
            throw Error(ErrorCode::InvalidArgument,
                        "sequence support " + std::to_string(n) + " exceeds the table range " + std::to_string(table.n_max), "q");
}

}  // namespace

const char* to_string(TransformMode mode) {
    switch (mode) {
        case TransformMode::DeltaApprox: return "delta-approx";
        case TransformMode::Kam: return "kam";
        case TransformMode::FreeExact: return "free-exact";
    }
    return "unknown";
}

double TransformTable::beta(std::size_t node, long n, int delta) const {
    if (std::abs(n) > n_max) throw Error(ErrorCode::InvalidArgument, "site outside the table range", "n");
    if (delta < -1 || delta > 1) throw Error(ErrorCode::InvalidArgument, "beta shift must be -1, 0 or 1", "delta");
    if (mode != TransformMode::Kam) return delta == 0 ? 1.0 : 0.0;
    return pick(nodes[node].beta[static_cast<std::size_t>(n + n_max)], delta);
}

double TransformTable::dbeta(std::size_t node, long n, int delta) const {
    if (std::abs(n) > n_max) throw Error(ErrorCode::InvalidArgument, "site outside the table range", "n");
    if (mode != TransformMode::Kam) return 0.0;
    return pick(nodes[node].dbeta[static_cast<std::size_t>(n + n_max)], delta);
}

double TransformTable::K(std::size_t node, long n) const {
    double s = 0.0;
    for (int d = -1; d <= 1; ++d) s += beta(node, n, d) * std::sin(static_cast<double>(n + d) * nodes[node].rho);
    return s;
}

double TransformTable::J(std::size_t node, long n) const {
    double s = 0.0;
    for (int d = -1; d <= 1; ++d) s += beta(node, n, d) * std::cos(static_cast<double>(n + d) * nodes[node].rho);
    return s;
}

TransformTable build_table(const PotentialSpec& pot, const Frequency& freq, const Phase& theta, const GridSpec& grid,
                           TransformMode mode, int n_max) {
    if (mode == TransformMode::FreeExact)
        throw Error(ErrorCode::InvalidArgument, "the exact free table has its own constructor", "mode");
    if (grid.count < 5) throw Error(ErrorCode::TooFewSamples, "transform grid needs at least 5 nodes", "count");
    if (!(grid.E_max > grid.E_min)) throw Error(ErrorCode::InvalidArgument, "empty energy window", "E_max");
    if (n_max < 0) throw Error(ErrorCode::InvalidArgument, "n_max must be non-negative", "n_max");
    if (grid.kam_stride < 1) throw Error(ErrorCode::InvalidArgument, "kam stride must be positive", "kam_stride");

    const auto count = static_cast<std::size_t>(grid.count);
    const double h = (grid.E_max - grid.E_min) / (grid.count - 1);
    std::vector<double> E(count), rho(count), err(count);
    for (std::size_t i = 0; i < count; ++i) E[i] = grid.E_min + h * static_cast<double>(i);
    parallel_for(count, grid.threads, [&](std::size_t i) {
        const RotationResult r = rotation_number(E[i], pot, freq, theta, grid.niter);
        rho[i] = r.rho;
        err[i] = r.error;
    });
    for (std::size_t i = 0; i + 1 < count; ++i)
        if (std::abs(rho[i + 1] - rho[i]) > grid.max_rho_step)
            throw Error(ErrorCode::TooFewSamples, "rotation number jumps by more than the allowed step; refine the grid",
                        "count");
    const double flat = 2.0 * *std::max_element(err.begin(), err.end()) + 1e-9;

    TransformTable table;
    table.mode = mode;
    table.n_max = n_max;
    table.grid_nodes = grid.count;
    std::vector<TransformNode> retained;
    for (std::size_t i = 0; i < count; ++i) {
        if (i == 0 || i + 1 == count) {
            ++table.dropped_gap;
            continue;
        }
        const double step = rho[i + 1] - rho[i - 1];
        if (std::abs(step) <= flat) {
            ++table.dropped_gap;
            continue;
        }
        double d = step / (2.0 * h);
        if (d < grid.drho_floor) {
            d = grid.drho_floor;
            ++table.floored;
        }
        const double s = std::sin(rho[i]);
        if (s <= 0.0 || d < 1.0 / (2.0 * s) - grid.transversality_tol) {
            ++table.dropped_transversality;
            continue;
        }
        TransformNode node;
        node.E = E[i];
        node.rho = rho[i];
        node.drho = d;
        node.dE = h;
        retained.push_back(std::move(node));
    }

    if (mode == TransformMode::DeltaApprox) {
        table.nodes = std::move(retained);
        return table;
    }

    // kam mode: every K-th retained node stands for the K cells that follow it
    const auto K = static_cast<std::size_t>(grid.kam_stride);
    std::vector<TransformNode> sampled;
    for (std::size_t i = 0; i < retained.size(); i += K) {
        TransformNode node = retained[i];
        node.dE = 0.0;
        for (std::size_t t = i; t < std::min(i + K, retained.size()); ++t) node.dE += retained[t].dE;
        sampled.push_back(std::move(node));
    }
    std::vector<char> good(sampled.size(), 0);
    parallel_for(sampled.size(), grid.threads, [&](std::size_t i) {
        TransformNode& node = sampled[i];
        const ReducedPair pair = reduce(node.E, pot, freq, grid.kam_jmax, grid.kam);
        if (!pair.ok) return;
        node.level = pair.level;
        node.beta.resize(static_cast<std::size_t>(2 * n_max + 1));
        for (long n = -n_max; n <= n_max; ++n)
            node.beta[static_cast<std::size_t>(n + n_max)] = beta_coefficients(pair, freq, theta.theta, n);
        good[i] = 1;
    });
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        if (good[i]) {
            if (sampled[i].level >= 1) ++table.resonant_nodes;
            table.nodes.push_back(std::move(sampled[i]));
        } else {
            ++table.kam_failures;
        }
    }
    if (!sampled.empty() && static_cast<double>(table.kam_failures) > grid.max_kam_failure * static_cast<double>(sampled.size()))
        throw Error(ErrorCode::NonConvergence,
                    "reduction failed at " + std::to_string(table.kam_failures) + " of " + std::to_string(sampled.size()) +
                        " nodes",
                    "max_kam_failure");

    // beta derivatives; one-sided across gaps
    const double span_max = 3.0 * static_cast<double>(K) * h;
    auto& nodes = table.nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        nodes[i].dbeta.assign(nodes[i].beta.size(), BetaTriple{});
        const bool has_lo = i > 0 && nodes[i].E - nodes[i - 1].E <= span_max;
        const bool has_hi = i + 1 < nodes.size() && nodes[i + 1].E - nodes[i].E <= span_max;
        if (!has_lo && !has_hi) continue;
        const TransformNode& lo = has_lo ? nodes[i - 1] : nodes[i];
        const TransformNode& hi = has_hi ? nodes[i + 1] : nodes[i];
        const double dE = hi.E - lo.E;
        for (std::size_t t = 0; t < nodes[i].beta.size(); ++t) {
            nodes[i].dbeta[t].minus = (hi.beta[t].minus - lo.beta[t].minus) / dE;
            nodes[i].dbeta[t].diag = (hi.beta[t].diag - lo.beta[t].diag) / dE;
            nodes[i].dbeta[t].plus = (hi.beta[t].plus - lo.beta[t].plus) / dE;
        }
    }
    return table;
}

TransformTable free_exact_table(int count, int n_max) {
    if (count < 2) throw Error(ErrorCode::TooFewSamples, "free table needs at least 2 nodes", "count");
    if (n_max < 0) throw Error(ErrorCode::InvalidArgument, "n_max must be non-negative", "n_max");
    TransformTable table;
    table.mode = TransformMode::FreeExact;
    table.n_max = n_max;
    table.grid_nodes = count;
    const double h = kPi / count;
    for (int i = 0; i < count; ++i) {
        const double r = (i + 0.5) * h;
        TransformNode node;
        node.rho = r;
        node.E = -2.0 * std::cos(r);
        node.drho = 1.0 / (2.0 * std::sin(r));
        node.dE = 4.0 * std::sin(r) * std::sin(0.5 * h);
        table.nodes.push_back(node);
    }
    return table;
}

TransformedState apply_transform(const TransformTable& table, const FiniteSequence& q) {
    check_support(table, q);
    TransformedState G;
    G.g1.assign(table.nodes.size(), 0.0);
    G.g2.assign(table.nodes.size(), 0.0);
    for (std::size_t i = 0; i < table.nodes.size(); ++i)
        for (const auto& [n, v] : q) {
            G.g1[i] += v * table.K(i, n);
            G.g2[i] += v * table.J(i, n);
        }
    return G;
}

double l2_dphi_norm(const TransformTable& table, const TransformedState& G) {
    if (G.g1.size() != table.nodes.size() || G.g2.size() != table.nodes.size())
        throw Error(ErrorCode::DimensionMismatch, "transformed state does not match the table", "G");
    double s = 0.0;
    for (std::size_t i = 0; i < table.nodes.size(); ++i)
        s += (std::norm(G.g1[i]) + std::norm(G.g2[i])) * table.nodes[i].weight_phi();
    return std::sqrt(s);
}

double l2_dphitilde_norm(const TransformTable& table, const TransformedState& G) {
    if (G.g1.size() != table.nodes.size() || G.g2.size() != table.nodes.size())
        throw Error(ErrorCode::DimensionMismatch, "transformed state does not match the table", "G");
    double s = 0.0;
    for (std::size_t i = 0; i < table.nodes.size(); ++i)
        s += (std::norm(G.g1[i]) + std::norm(G.g2[i])) * table.nodes[i].weight_tilde();
    return std::sqrt(s);
}

double slope_predictor(const TransformTable& table, const FiniteSequence& q0) {
    return l2_dphi_norm(table, apply_transform(table, q0));
}

OrthogonalityResult orthogonality_check(const TransformTable& table, long m, long n) {
    OrthogonalityResult out;
    for (int dm = -1; dm <= 1; ++dm)
        for (int dn = -1; dn <= 1; ++dn) {
            double s = 0.0;
            for (std::size_t i = 0; i < table.nodes.size(); ++i)
                s += table.beta(i, m, dm) * table.beta(i, n, dn) * table.nodes[i].drho * table.nodes[i].dE;
            const double target = (dm == 0 && dn == 0) ? kPi : 0.0;
            out.lemma = std::max(out.lemma, std::abs(s - target));
        }
    double g = 0.0;
    for (std::size_t i = 0; i < table.nodes.size(); ++i)
        g += (table.K(i, m) * table.K(i, n) + table.J(i, m) * table.J(i, n)) * table.nodes[i].drho * table.nodes[i].dE;
    out.gram = std::abs(g / kPi - (m == n ? 1.0 : 0.0));
    return out;
}

OscillatoryProfile oscillatory_probe(const TransformTable& table, const std::vector<int>& Ms, long m, long n, int dm,
                                     int dn) {
    OscillatoryProfile out;
    std::vector<double> lx, ly;
    for (int M : Ms) {
        if (M == 0) throw Error(ErrorCode::InvalidArgument, "oscillation index must be nonzero", "M");
        double s = 0.0;
        for (std::size_t i = 0; i < table.nodes.size(); ++i)
            s += table.beta(i, m, dm) * table.beta(i, n, dn) * std::cos(M * table.nodes[i].rho) * table.nodes[i].drho *
                 table.nodes[i].dE;
        out.M.push_back(M);
        out.value.push_back(std::abs(s));
        if (std::abs(s) > 1e-14) {
            lx.push_back(std::log(std::abs(static_cast<double>(M))));
            ly.push_back(std::log(std::abs(s)));
        }
    }
    out.exponent = std::numeric_limits<double>::quiet_NaN();
    if (lx.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= static_cast<double>(lx.size());
        my /= static_cast<double>(lx.size());
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        if (sxx > 0) out.exponent = sxy / sxx;
    }
    return out;
}

double derivative_norm(const TransformTable& table, const FiniteSequence& q) {
    check_support(table, q);
    double s = 0.0;
    for (std::size_t i = 0; i < table.nodes.size(); ++i) {
        const TransformNode& node = table.nodes[i];
        std::complex<double> dK = 0.0, dJ = 0.0;
        for (const auto& [n, v] : q) {
            double k = 0.0, j = 0.0;
            for (int d = -1; d <= 1; ++d) {
                const double nd = static_cast<double>(n + d);
                const double b = table.beta(i, n, d), db = table.dbeta(i, n, d);
                k += node.drho * nd * b * std::cos(nd * node.rho) + db * std::sin(nd * node.rho);
                j += -node.drho * nd * b * std::sin(nd * node.rho) + db * std::cos(nd * node.rho);
            }
            dK += v * k;
            dJ += v * j;
        }
        s += (std::norm(dK) + std::norm(dJ)) * node.weight_phi();
    }
    return std::sqrt(s);
}

}  // namespace qps
