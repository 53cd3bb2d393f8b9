#include "hd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hd {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

bool parse_number(const std::string& s, double& out) {
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end != nullptr && *end == '\0' && !s.empty();
}

ConfigTable::Value parse_value(const std::string& raw, const std::string& where) {
    const std::string v = trim(raw);
    if (v.empty()) throw ConfigError(where, "empty value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw ConfigError(where, "unterminated string");
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']') throw ConfigError(where, "unterminated array");
        std::string body = v.substr(1, v.size() - 2);
        std::vector<double> nums;
        std::vector<std::string> strs;
        bool as_string = false;
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            if (item.front() == '"') {
                if (item.size() < 2 || item.back() != '"')
                    throw ConfigError(where, "bad string array element");
                strs.push_back(item.substr(1, item.size() - 2));
                as_string = true;
            } else {
                double d;
                if (!parse_number(item, d))
                    throw ConfigError(where, "bad numeric array element '" + item + "'");
                nums.push_back(d);
            }
        }
        if (as_string) {
            if (!nums.empty()) throw ConfigError(where, "mixed array types");
            return strs;
        }
        return nums;
    }
    double d;
    if (parse_number(v, d)) return d;
    throw ConfigError(where, "cannot parse value '" + v + "' (strings need quotes)");
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

} // namespace

ConfigTable ConfigTable::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
}

ConfigTable ConfigTable::parse_text(const std::string& text, const std::string& origin) {
    ConfigTable t;
    std::string section;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where, "empty section name");
            t.sections_[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(where, "empty key");
        if (section.empty()) throw ConfigError(where, "key outside any [section]");
        t.sections_[section][key] = parse_value(line.substr(eq + 1), where + " (" + key + ")");
    }
    return t;
}

void ConfigTable::apply_env_overrides() {
    for (auto& [sec, keys] : sections_) {
        for (auto& [key, value] : keys) {
            const std::string name = "HD_" + upper(sec) + "_" + upper(key);
            if (const char* env = std::getenv(name.c_str()))
                value = parse_value(env, "env " + name);
        }
    }
}

void ConfigTable::apply_override(const std::string& spec) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos)
        throw ConfigError(spec, "override must look like section.key=value");
    const std::string path = trim(spec.substr(0, eq));
    const std::size_t dot = path.find('.');
    if (dot == std::string::npos)
        throw ConfigError(spec, "override key must be section.key");
    sections_[path.substr(0, dot)][path.substr(dot + 1)] =
        parse_value(spec.substr(eq + 1), "override " + path);
}

const ConfigTable::Value* ConfigTable::find(const std::string& sec,
                                            const std::string& key) const {
    auto s = sections_.find(sec);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    return &k->second;
}

bool ConfigTable::has(const std::string& sec, const std::string& key) const {
    return find(sec, key) != nullptr;
}
bool ConfigTable::has_section(const std::string& sec) const {
    return sections_.count(sec) > 0;
}

std::string ConfigTable::get_str(const std::string& sec, const std::string& key) const {
    const Value* v = find(sec, key);
    if (!v) throw ConfigError(sec + "." + key, "missing required key");
    if (const auto* s = std::get_if<std::string>(v)) return *s;
    throw ConfigError(sec + "." + key, "expected a string");
}
std::string ConfigTable::get_str(const std::string& sec, const std::string& key,
                                 const std::string& fallback) const {
    return has(sec, key) ? get_str(sec, key) : fallback;
}
double ConfigTable::get_num(const std::string& sec, const std::string& key) const {
    const Value* v = find(sec, key);
    if (!v) throw ConfigError(sec + "." + key, "missing required key");
    if (const auto* d = std::get_if<double>(v)) return *d;
    throw ConfigError(sec + "." + key, "expected a number");
}
double ConfigTable::get_num(const std::string& sec, const std::string& key,
                            double fallback) const {
    return has(sec, key) ? get_num(sec, key) : fallback;
}
bool ConfigTable::get_bool(const std::string& sec, const std::string& key,
                           bool fallback) const {
    const Value* v = find(sec, key);
    if (!v) return fallback;
    if (const auto* b = std::get_if<bool>(v)) return *b;
    throw ConfigError(sec + "." + key, "expected true or false");
}
std::vector<double> ConfigTable::get_list(const std::string& sec,
                                          const std::string& key) const {
    const Value* v = find(sec, key);
    if (!v) throw ConfigError(sec + "." + key, "missing required key");
    if (const auto* l = std::get_if<std::vector<double>>(v)) return *l;
    if (const auto* d = std::get_if<double>(v)) return {*d};
    throw ConfigError(sec + "." + key, "expected a numeric array");
}
std::vector<double> ConfigTable::get_list(const std::string& sec, const std::string& key,
                                          const std::vector<double>& fallback) const {
    return has(sec, key) ? get_list(sec, key) : fallback;
}

// ---- schema -----------------------------------------------------------------

namespace {

LambdaRule parse_lambda(const std::string& s) {
    if (s == "ldp") return LambdaRule::ldp;
    if (s == "clt") return LambdaRule::clt;
    if (s == "power") return LambdaRule::power;
    throw ConfigError("integrator.lambda", "unknown rule '" + s + "'");
}

} // namespace

RunConfig load_run_config(const ConfigTable& t) {
    RunConfig c;
    c.schema = t.get_str("meta", "schema");
    if (c.schema != "hd-run/1")
        throw ConfigError("meta.schema", "unsupported schema '" + c.schema + "'");

    if (!t.has_section("domain")) throw ConfigError("domain", "missing section");
    c.L = t.get_num("domain", "L");
    c.depth = t.get_num("domain", "depth");
    c.nx = static_cast<int>(t.get_num("domain", "nx"));
    c.ny = static_cast<int>(t.get_num("domain", "ny"));
    c.nz = static_cast<int>(t.get_num("domain", "nz"));

    c.params.mu_v = t.get_num("physics", "mu_v", 1.0);
    c.params.nu_v = t.get_num("physics", "nu_v", 1.0);
    c.params.mu_T = t.get_num("physics", "mu_t", 1.0);
    c.params.nu_T = t.get_num("physics", "nu_t", 1.0);
    c.params.f_cor = t.get_num("physics", "f_cor", 0.0);
    c.params.beta_T_g = t.get_num("physics", "beta_t_g", 0.0);
    c.params.alpha = t.get_num("physics", "alpha", 0.0);

    c.forcing_family = t.get_str("forcing", "family", "none");
    c.forcing_amp_v = t.get_num("forcing", "amp_v", 0.0);
    c.forcing_amp_T = t.get_num("forcing", "amp_t", 0.0);
    c.forcing_omega = t.get_num("forcing", "omega", 0.0);
    c.forcing_mode_x = static_cast<int>(t.get_num("forcing", "mode_x", 1));
    c.forcing_mode_y = static_cast<int>(t.get_num("forcing", "mode_y", 0));

    c.noise.m = static_cast<int>(t.get_num("noise", "m", 8));
    c.noise.a = t.get_list("noise", "a", {1.0});
    c.noise.b = t.get_list("noise", "b", {0.0});
    c.noise.c = t.get_list("noise", "c", {0.0});
    c.noise.envelope_strength = t.get_num("noise", "envelope", 0.3);
    c.budget.C = t.get_num("noise", "budget_c", 10.0);
    c.budget.eta0 = t.get_num("noise", "budget_eta0", 0.1);
    c.budget.eta1 = t.get_num("noise", "budget_eta1", 0.1);
    c.budget.eta2 = t.get_num("noise", "budget_eta2", 0.5);
    c.budget.eta3 = t.get_num("noise", "budget_eta3", 0.1);
    c.budget.gamma = t.get_num("noise", "budget_gamma", 0.1);

    c.init_family = t.get_str("initial", "family", "rest");
    c.init_amp = t.get_num("initial", "amp", 1.0);
    c.init_mode_x = static_cast<int>(t.get_num("initial", "mode_x", 1));
    c.init_mode_y = static_cast<int>(t.get_num("initial", "mode_y", 0));
    c.init_zmode = static_cast<int>(t.get_num("initial", "zmode", 0));
    c.init_kmax = static_cast<int>(t.get_num("initial", "kmax", 4));
    c.init_zmodes = static_cast<int>(t.get_num("initial", "zmodes", 3));

    c.integ.dt = t.get_num("integrator", "dt", 1e-2);
    c.integ.t_end = t.get_num("integrator", "t_end", 1.0);
    c.integ.eps = t.get_num("integrator", "eps", 0.0);
    c.integ.lambda_rule = parse_lambda(t.get_str("integrator", "lambda", "power"));
    c.integ.lambda_power = t.get_num("integrator", "lambda_power", 0.25);
    c.integ.store_stride = static_cast<int>(t.get_num("integrator", "store_stride", 1));
    c.integ.blowup_threshold = t.get_num("integrator", "blowup_threshold", 1e8);
    c.integ.diag = t.get_str("integrator", "diag", "full") == "light" ? DiagLevel::light
                                                                      : DiagLevel::full;
    c.integ.stopping_p = t.get_num("integrator", "stopping_p", 2.0);
    c.integ.terms.advection = t.get_bool("integrator", "advection", true);
    c.integ.terms.pressure = t.get_bool("integrator", "pressure", true);
    c.integ.terms.coriolis = t.get_bool("integrator", "coriolis", true);
    c.integ.terms.forcing = t.get_bool("integrator", "forcing", true);

    if (!t.has_section("experiment")) throw ConfigError("experiment", "missing section");
    c.exp.kind = t.get_str("experiment", "kind");
    static const std::vector<std::string> kinds = {
        "deterministic", "stochastic", "skeleton-ldp", "skeleton-mdp", "clt",
        "rate-ldp", "rate-mdp", "mc-scaling", "verify"};
    if (std::find(kinds.begin(), kinds.end(), c.exp.kind) == kinds.end())
        throw ConfigError("experiment.kind", "unknown experiment '" + c.exp.kind + "'");

    c.exp.control_const = t.get_list("experiment", "control_const", {});
    c.exp.control_cells = static_cast<int>(t.get_num("experiment", "control_cells", 8));
    c.exp.eps_list = t.get_list("experiment", "eps_list", {1e-2, 1e-3, 1e-4});
    c.exp.n_paths = static_cast<long>(t.get_num("experiment", "n_paths", 100));
    c.exp.target_scale = t.get_num("experiment", "target_scale", 1.0);
    c.exp.target_href = t.get_list("experiment", "target_href", {});
    c.exp.radius = t.get_num("experiment", "radius", 0.0);
    c.exp.penalty_rho = t.get_num("experiment", "penalty_rho", 1e8);
    c.exp.cg_tol = t.get_num("experiment", "cg_tol", 1e-12);
    c.exp.endpoint_tol = t.get_num("experiment", "endpoint_tol", 1e-5);
    c.exp.gn_max_iter = static_cast<int>(t.get_num("experiment", "gn_max_iter", 25));
    c.exp.event_coeff = t.get_num("experiment", "event_coeff", 0.0);
    c.exp.event_mode_x = static_cast<int>(t.get_num("experiment", "event_mode_x", 1));
    c.exp.event_mode_y = static_cast<int>(t.get_num("experiment", "event_mode_y", 0));
    c.exp.event_delta = t.get_num("experiment", "event_delta", 0.1);
    c.exp.rate_compare = t.get_bool("experiment", "rate_compare", true);
    c.exp.n_samples = static_cast<int>(t.get_num("experiment", "n_samples", 100));
    if (t.has("experiment", "suites")) {
        const ConfigTable::Value* v = nullptr;
        v = t.has("experiment", "suites") ? &t.sections().at("experiment").at("suites")
                                          : nullptr;
        if (const auto* l = std::get_if<std::vector<std::string>>(v))
            c.exp.suites = *l;
        else
            throw ConfigError("experiment.suites", "expected a string array");
    } else {
        c.exp.suites = {"identities", "anisotropic", "b", "gronwall"};
    }

    c.out_dir = t.get_str("output", "dir", "out");
    c.write_snapshots = t.get_bool("output", "snapshots", false);
    c.snapshot_stride = static_cast<int>(t.get_num("output", "snapshot_stride", 10));

    c.seed = static_cast<std::uint64_t>(t.get_num("run", "seed", 1));
    c.workers = static_cast<unsigned>(t.get_num("run", "workers", 0));

    c.tol_projection = t.get_num("tolerances", "projection_residual", 1e-10);
    c.tol_roundtrip = t.get_num("tolerances", "transform_roundtrip", 1e-12);
    c.tol_identity = t.get_num("tolerances", "identity", 1e-8);

    // construction-time invariants surface as config errors with a field path
    try {
        c.make_grid();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("domain", e.what());
    }
    try {
        c.params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("physics", e.what());
    }
    try {
        c.integ.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("integrator", e.what());
    }
    return c;
}

State RunConfig::make_initial(const GridPtr& g) const {
    if (init_family == "rest") return State(g);
    if (init_family == "thermal_mode") {
        State u(g);
        u.T = init_amp * mode_field(g, init_mode_x, init_mode_y, 0.0, init_zmode);
        return project_H(band_limit(u));
    }
    if (init_family == "random")
        return project_H(init_amp * synth_state(g, seed, 0xa11ce, init_kmax, init_zmodes));
    throw ConfigError("initial.family", "unknown family '" + init_family + "'");
}

Forcing RunConfig::make_forcing(const GridPtr& g) const {
    Forcing f;
    if (forcing_family == "none") return f;
    if (forcing_family != "steady" && forcing_family != "oscillating")
        throw ConfigError("forcing.family", "unknown family '" + forcing_family + "'");
    State base(g);
    base.v.c1 = forcing_amp_v * mode_field(g, forcing_mode_x, forcing_mode_y, 0.4, 0);
    base.v.c2 = forcing_amp_v * mode_field(g, forcing_mode_y, forcing_mode_x, 1.3, 1);
    base.T = forcing_amp_T * mode_field(g, forcing_mode_x, forcing_mode_y, 2.1, 1);
    f.base = project_H(band_limit(base));
    f.omega = forcing_family == "oscillating" ? forcing_omega : 0.0;
    return f;
}

} // namespace hd
