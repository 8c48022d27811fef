#include "qpsim/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "qpsim/error.hpp"

namespace qps {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
    throw Error(ErrorCode::Config, msg, field);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Typed access to one YAML mapping with its dotted path for messages.
class Section {
public:
    Section(YAML::Node node, std::string path, std::set<std::string> allowed)
        : node_(std::move(node)), path_(std::move(path)) {
        present_ = node_ && !node_.IsNull();
        if (!present_) return;
        if (!node_.IsMap()) fail(path_.empty() ? "config" : path_, "expected a mapping");
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key)) fail(join(path_, key), "unknown key");
        }
    }

    bool has(const std::string& key) const { return present_ && node_[key] && !node_[key].IsNull(); }
    YAML::Node raw(const std::string& key) const { return has(key) ? node_[key] : YAML::Node(); }
    std::string field(const std::string& key) const { return join(path_, key); }

    Section sub(const std::string& key, std::set<std::string> allowed) const {
        return Section(raw(key), field(key), std::move(allowed));
    }

    template <class T>
    void get(const std::string& key, T& out) const {
        if (!has(key)) return;
        try {
            out = node_[key].as<T>();
        } catch (const YAML::Exception&) {
            fail(field(key), "malformed value");
        }
    }

    template <class T>
    void get_vector(const std::string& key, std::vector<T>& out) const {
        if (!has(key)) return;
        const YAML::Node n = node_[key];
        if (!n.IsSequence()) fail(field(key), "expected a list");
        std::vector<T> v;
        try {
            for (const auto& x : n) v.push_back(x.as<T>());
        } catch (const YAML::Exception&) {
            fail(field(key), "malformed list entry");
        }
        out = std::move(v);
    }

private:
    YAML::Node node_;
    std::string path_;
    bool present_ = false;
};

void require(bool ok, const std::string& field, const std::string& msg) {
    if (!ok) fail(field, msg);
}

void read_grid(const Section& parent, const std::string& key, EnergyGrid& g) {
    const Section s = parent.sub(key, {"E_min", "E_max", "count", "values"});
    s.get("E_min", g.E_min);
    s.get("E_max", g.E_max);
    s.get("count", g.count);
    s.get_vector("values", g.values);
    if (g.values.empty()) {
        require(g.count >= 1, s.field("count"), "count must be positive");
        require(g.count == 1 || g.E_max > g.E_min, s.field("E_max"), "E_max must exceed E_min");
    }
}

PotentialSpec read_potential(const Section& root) {
    const Section s = root.sub("potential", {"preset", "lambda", "radius", "eps0", "dim", "coefficients"});
    std::string preset = "harper";
    double lambda = 0.05, radius = 1.0;
    s.get("preset", preset);
    s.get("lambda", lambda);
    s.get("radius", radius);
    std::optional<double> eps0;
    if (s.has("eps0")) {
        double e = 0.0;
        s.get("eps0", e);
        eps0 = e;
    }
    try {
        if (preset == "zero") {
            int dim = 1;
            s.get("dim", dim);
            return presets::zero(dim);
        }
        if (preset == "harper") {
            PotentialSpec p = presets::harper(lambda, radius);
            return eps0 ? PotentialSpec::make(p.dim, p.coeffs, radius, eps0) : p;
        }
        if (preset == "two_frequency") {
            PotentialSpec p = presets::two_frequency(lambda, radius);
            return eps0 ? PotentialSpec::make(p.dim, p.coeffs, radius, eps0) : p;
        }
        if (preset == "custom") {
            int dim = 1;
            s.get("dim", dim);
            const YAML::Node list = s.raw("coefficients");
            require(list && list.IsSequence(), s.field("coefficients"), "custom potential needs a coefficient list");
            std::map<IVec, double> coeffs;
            int idx = 0;
            for (const auto& entry : list) {
                const Section e(entry, s.field("coefficients") + "[" + std::to_string(idx++) + "]", {"k", "c"});
                IVec k;
                double c = 0.0;
                e.get_vector("k", k);
                e.get("c", c);
                require(static_cast<int>(k.size()) == dim, e.field("k"), "k must have dim entries");
                coeffs[k] = c;
            }
            return PotentialSpec::make(dim, std::move(coeffs), radius, eps0);
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Config) throw;
        fail(s.field(e.field().empty() ? "preset" : e.field()), e.what());
    }
    fail(s.field("preset"), "unknown potential preset '" + preset + "'");
}

Frequency read_frequency(const Section& root) {
    const Section s = root.sub("frequency", {"preset", "omega", "gamma", "tau"});
    double gamma = 0.1, tau = 2.0;
    s.get("gamma", gamma);
    s.get("tau", tau);
    std::vector<double> omega;
    s.get_vector("omega", omega);
    std::string preset = omega.empty() ? "golden" : "custom";
    s.get("preset", preset);
    try {
        if (preset == "golden") return presets::golden(gamma, tau);
        if (preset == "custom") return Frequency::make(omega, gamma, tau);
    } catch (const Error& e) {
        fail(s.field(e.field().empty() ? "omega" : e.field()), e.what());
    }
    fail(s.field("preset"), "unknown frequency preset '" + preset + "'");
}

InitialSpec read_initial(const Section& parent) {
    const Section s = parent.sub("initial", {"kind", "site", "center", "width", "first", "re", "im"});
    InitialSpec in;
    s.get("kind", in.kind);
    s.get("site", in.site);
    s.get("center", in.center);
    s.get("width", in.width);
    s.get("first", in.first);
    std::vector<double> re, im;
    s.get_vector("re", re);
    s.get_vector("im", im);
    require(in.kind == "delta" || in.kind == "gaussian" || in.kind == "list", s.field("kind"),
            "initial kind must be delta, gaussian or list");
    if (in.kind == "list") {
        require(!re.empty(), s.field("re"), "list initial state needs amplitudes");
        require(im.empty() || im.size() == re.size(), s.field("im"), "im must match re in length");
        for (std::size_t i = 0; i < re.size(); ++i) in.values.emplace_back(re[i], im.empty() ? 0.0 : im[i]);
    }
    require(in.width > 0.0, s.field("width"), "width must be positive");
    return in;
}

KamParams read_kam_params(const Section& s, KamParams p) {
    s.get("sigma", p.sigma);
    s.get("c", p.c);
    s.get("grid_exp", p.grid_exp);
    s.get("n_floor", p.n_floor);
    s.get("max_condition", p.max_condition);
    require(p.c >= 0.5 && p.c <= 1.0, s.field("c"), "c must lie in [1/2, 1]");
    require(p.sigma > 0.0 && p.sigma < 1.0, s.field("sigma"), "sigma must lie in (0, 1)");
    require(p.grid_exp >= 3 && p.grid_exp <= 12, s.field("grid_exp"), "grid_exp must lie in [3, 12]");
    return p;
}

// Key-sorted JSON image of the YAML tree with numeric scalars normalized, so that key order,
// flow style and number spelling do not change the hash.
nlohmann::json to_canonical(const YAML::Node& n) {
    if (n.IsMap()) {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& kv : n) j[kv.first.as<std::string>()] = to_canonical(kv.second);
        return j;
    }
    if (n.IsSequence()) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& x : n) j.push_back(to_canonical(x));
        return j;
    }
    if (n.IsScalar()) {
        const std::string text = n.Scalar();
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used == text.size()) return v;
        } catch (const std::exception&) {
        }
        return text;
    }
    return nullptr;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::vector<double> EnergyGrid::energies() const {
    if (!values.empty()) return values;
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = count == 1 ? E_min : E_min + (E_max - E_min) * i / (count - 1);
    return out;
}

ExperimentConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        fail("config", std::string("YAML syntax error: ") + e.what());
    }
    if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    const Section top(root, "",
                      {"seed", "threads", "potential", "frequency", "theta", "evolve", "scan", "ids", "thouless",
                       "mfunction", "kam", "transform", "slope_compare"});

    ExperimentConfig cfg;
    top.get("seed", cfg.seed);
    top.get("threads", cfg.threads);
    cfg.pot = read_potential(top);
    cfg.freq = read_frequency(top);
    require(cfg.pot.dim == cfg.freq.dim(), "frequency.omega", "frequency dimension must match the potential");
    std::vector<double> theta(static_cast<std::size_t>(cfg.pot.dim), 0.0);
    top.get_vector("theta", theta);
    require(static_cast<int>(theta.size()) == cfg.pot.dim, "theta", "theta must have one entry per frequency");
    cfg.theta = Phase::reduced(theta);

    {
        const Section s = top.sub("evolve", {"T", "dt", "record_every", "tol", "half_width", "fit_fraction", "initial"});
        auto& e = cfg.evolve;
        s.get("T", e.T);
        s.get("dt", e.dt);
        s.get("record_every", e.record_every);
        s.get("tol", e.tol);
        s.get("half_width", e.half_width);
        s.get("fit_fraction", e.fit_fraction);
        e.initial = read_initial(s);
        require(e.T > 0.0, s.field("T"), "T must be positive");
        require(e.dt > 0.0, s.field("dt"), "dt must be positive");
        require(e.record_every >= 1, s.field("record_every"), "record_every must be positive");
        require(e.tol > 0.0 && e.tol < 1.0, s.field("tol"), "tol must lie in (0, 1)");
        require(e.half_width >= 1, s.field("half_width"), "half_width must be positive");
        require(e.fit_fraction > 0.0 && e.fit_fraction < 1.0, s.field("fit_fraction"), "fit_fraction must lie in (0, 1)");
    }
    {
        const Section s = top.sub("scan", {"grid", "niter", "sup_nmax"});
        read_grid(s, "grid", cfg.scan.grid);
        s.get("niter", cfg.scan.niter);
        s.get("sup_nmax", cfg.scan.sup_nmax);
        require(cfg.scan.niter >= 2, s.field("niter"), "niter must be at least 2");
        require(cfg.scan.sup_nmax >= 0, s.field("sup_nmax"), "sup_nmax must be non-negative");
    }
    {
        const Section s = top.sub("ids", {"grid", "N", "theta_count", "niter", "l_max"});
        read_grid(s, "grid", cfg.ids.grid);
        s.get("N", cfg.ids.N);
        s.get("theta_count", cfg.ids.theta_count);
        s.get("niter", cfg.ids.niter);
        s.get("l_max", cfg.ids.l_max);
        require(cfg.ids.N >= 2, s.field("N"), "N must be at least 2");
        require(cfg.ids.theta_count >= 1, s.field("theta_count"), "theta_count must be positive");
        require(cfg.ids.l_max >= 0, s.field("l_max"), "l_max must be non-negative");
    }
    {
        const Section s = top.sub("thouless", {"grid", "N", "theta_count", "niter"});
        read_grid(s, "grid", cfg.thouless.grid);
        s.get("N", cfg.thouless.N);
        s.get("theta_count", cfg.thouless.theta_count);
        s.get("niter", cfg.thouless.niter);
        require(cfg.thouless.N >= 2, s.field("N"), "N must be at least 2");
        require(cfg.thouless.theta_count >= 1, s.field("theta_count"), "theta_count must be positive");
    }
    {
        const Section s = top.sub("mfunction", {"re", "im", "depth"});
        read_grid(s, "re", cfg.mfunction.re);
        s.get_vector("im", cfg.mfunction.im);
        s.get("depth", cfg.mfunction.depth);
        for (double y : cfg.mfunction.im) require(y > 0.0, s.field("im"), "imaginary parts must be positive");
        require(cfg.mfunction.depth >= 2, s.field("depth"), "depth must be at least 2");
    }
    {
        const Section s = top.sub("kam", {"grid", "jmax", "sigma", "c", "grid_exp", "n_floor", "max_condition"});
        read_grid(s, "grid", cfg.kam.grid);
        s.get("jmax", cfg.kam.jmax);
        cfg.kam.params = read_kam_params(s, cfg.kam.params);
        require(cfg.kam.jmax >= 0 && cfg.kam.jmax <= 4, s.field("jmax"), "jmax must lie in [0, 4]");
    }
    {
        const Section s = top.sub("transform", {"mode", "n_max", "free_count", "E_min", "E_max", "count", "niter",
                                                "transversality_tol", "kam_stride", "kam_jmax", "max_kam_failure",
                                                "kam", "q0"});
        auto& t = cfg.transform;
        std::string mode = "delta-approx";
        s.get("mode", mode);
        if (mode == "delta-approx")
            t.mode = TransformMode::DeltaApprox;
        else if (mode == "kam")
            t.mode = TransformMode::Kam;
        else if (mode == "free-exact")
            t.mode = TransformMode::FreeExact;
        else
            fail(s.field("mode"), "mode must be delta-approx, kam or free-exact");
        s.get("n_max", t.n_max);
        s.get("free_count", t.free_count);
        s.get("E_min", t.grid.E_min);
        s.get("E_max", t.grid.E_max);
        s.get("count", t.grid.count);
        s.get("niter", t.grid.niter);
        s.get("transversality_tol", t.grid.transversality_tol);
        s.get("kam_stride", t.grid.kam_stride);
        s.get("kam_jmax", t.grid.kam_jmax);
        s.get("max_kam_failure", t.grid.max_kam_failure);
        t.grid.kam = read_kam_params(s.sub("kam", {"sigma", "c", "grid_exp", "n_floor", "max_condition"}), t.grid.kam);
        if (s.has("q0")) {
            const YAML::Node list = s.raw("q0");
            require(list.IsSequence(), s.field("q0"), "q0 must be a list of {n, re, im}");
            t.q0.clear();
            int idx = 0;
            for (const auto& entry : list) {
                const Section e(entry, s.field("q0") + "[" + std::to_string(idx++) + "]", {"n", "re", "im"});
                long n = 0;
                double re = 0.0, im = 0.0;
                e.get("n", n);
                e.get("re", re);
                e.get("im", im);
                t.q0[n] += std::complex<double>(re, im);
            }
        }
        require(t.n_max >= 0, s.field("n_max"), "n_max must be non-negative");
        require(t.free_count >= 2, s.field("free_count"), "free_count must be at least 2");
        require(t.grid.count >= 5, s.field("count"), "count must be at least 5");
        require(t.grid.E_max > t.grid.E_min, s.field("E_max"), "E_max must exceed E_min");
        require(t.grid.kam_stride >= 1, s.field("kam_stride"), "kam_stride must be positive");
        for (const auto& [n, v] : t.q0)
            require(std::abs(n) <= t.n_max, s.field("q0"), "q0 support exceeds n_max");
    }
    {
        const Section s = top.sub("slope_compare", {"tolerance"});
        s.get("tolerance", cfg.slope_tolerance);
        require(cfg.slope_tolerance > 0.0, s.field("tolerance"), "tolerance must be positive");
    }
    cfg.transform.grid.threads = cfg.threads;

    nlohmann::json canon = to_canonical(root);
    canon.erase("seed");
    canon.erase("threads");
    cfg.canonical = canon.dump();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read config file " + path, "config");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::uint64_t h = fnv1a(cfg.canonical + "\nseed=" + std::to_string(cfg.seed));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace qps
