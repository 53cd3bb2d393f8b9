#pragma once

#include "hd/deviations.hpp"
#include "hd/dynamics.hpp"
#include "hd/noise.hpp"
#include "hd/verify.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace hd {

// Configuration error carrying the offending field path; the CLI maps these
// to exit code 2.
struct ConfigError : std::runtime_error {
    std::string path;
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), path(std::move(field)) {}
};

// Minimal key-table config format: [section] headers, key = value lines with
// strings, numbers, booleans and single-line arrays, # comments.
class ConfigTable {
public:
    using Value = std::variant<std::string, double, bool, std::vector<double>,
                               std::vector<std::string>>;

    static ConfigTable parse_file(const std::string& path);
    static ConfigTable parse_text(const std::string& text, const std::string& origin);

    // HD_<SECTION>_<KEY> environment variables override parsed keys
    void apply_env_overrides();
    // "section.key=value" command-line override; may introduce new keys
    void apply_override(const std::string& spec);

    bool has(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;

    std::string get_str(const std::string& sec, const std::string& key) const;
    std::string get_str(const std::string& sec, const std::string& key,
                        const std::string& fallback) const;
    double get_num(const std::string& sec, const std::string& key) const;
    double get_num(const std::string& sec, const std::string& key, double fallback) const;
    bool get_bool(const std::string& sec, const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& sec, const std::string& key) const;
    std::vector<double> get_list(const std::string& sec, const std::string& key,
                                 const std::vector<double>& fallback) const;

    const std::map<std::string, std::map<std::string, Value>>& sections() const {
        return sections_;
    }

private:
    std::map<std::string, std::map<std::string, Value>> sections_;
    const Value* find(const std::string& sec, const std::string& key) const;
};

// ---- resolved run configuration ------------------------------------------------

struct ExperimentSpec {
    std::string kind;   // deterministic | stochastic | skeleton-ldp | skeleton-mdp |
                        // clt | rate-ldp | rate-mdp | mc-scaling | verify

    // controlled runs
    std::vector<double> control_const;
    int control_cells = 8;

    // studies
    std::vector<double> eps_list;
    long n_paths = 100;

    // rate problems
    double target_scale = 1.0;
    std::vector<double> target_href;
    double radius = 0.0;
    double penalty_rho = 1e8;
    double cg_tol = 1e-12;
    double endpoint_tol = 1e-5;
    int gn_max_iter = 25;

    // mc-scaling event: center = deterministic endpoint + coeff * T-mode
    double event_coeff = 0.0;
    int event_mode_x = 1, event_mode_y = 0;
    double event_delta = 0.1;
    bool rate_compare = true;

    // verify
    int n_samples = 100;
    std::vector<std::string> suites;   // identities | anisotropic | b | gronwall
};

struct RunConfig {
    std::string schema;
    double L = 6.283185307179586, depth = 1.0;
    int nx = 16, ny = 16, nz = 9;

    PhysicalParams params;

    std::string forcing_family = "none";   // none | steady | oscillating
    double forcing_amp_v = 0.0, forcing_amp_T = 0.0, forcing_omega = 0.0;
    int forcing_mode_x = 1, forcing_mode_y = 0;

    SpectralNoiseParams noise;
    NoiseBudget budget;

    std::string init_family = "rest";      // rest | thermal_mode | random
    double init_amp = 1.0;
    int init_mode_x = 1, init_mode_y = 0, init_zmode = 0;
    int init_kmax = 4, init_zmodes = 3;

    IntegratorConfig integ;

    ExperimentSpec exp;

    std::string out_dir = "out";
    bool write_snapshots = false;
    int snapshot_stride = 10;

    std::uint64_t seed = 1;
    unsigned workers = 0;

    double tol_projection = 1e-10;
    double tol_roundtrip = 1e-12;
    double tol_identity = 1e-8;

    GridPtr make_grid() const { return Grid::make(L, depth, nx, ny, nz); }
    State make_initial(const GridPtr& g) const;
    Forcing make_forcing(const GridPtr& g) const;
};

RunConfig load_run_config(const ConfigTable& t);

} // namespace hd
