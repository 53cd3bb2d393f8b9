#include "hd/run.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>

int main(int argc, char** argv) {
    CLI::App app{"hd - stochastic 3D primitive equations deviation laboratory"};
    app.require_subcommand(1);

    CLI::App* run = app.add_subcommand("run", "execute one configured experiment");
    std::string config_path;
    std::string experiment, out_dir;
    long long seed = -1;
    int workers = -1;
    std::vector<std::string> overrides;
    run->add_option("config", config_path, "run configuration file")->required();
    run->add_option("--experiment", experiment, "override experiment.kind");
    run->add_option("--seed", seed, "override run.seed");
    run->add_option("--workers", workers, "worker threads (default: logical cores)");
    run->add_option("--out", out_dir, "override output.dir");
    run->add_option("--set", overrides, "section.key=value overrides")->take_all();

    CLI11_PARSE(app, argc, argv);

    try {
        hd::ConfigTable table = hd::ConfigTable::parse_file(config_path);
        table.apply_env_overrides();
        for (const auto& o : overrides) table.apply_override(o);
        if (!experiment.empty()) table.apply_override("experiment.kind=\"" + experiment + "\"");
        if (seed >= 0) table.apply_override("run.seed=" + std::to_string(seed));
        if (workers >= 0) table.apply_override("run.workers=" + std::to_string(workers));
        if (!out_dir.empty()) table.apply_override("output.dir=\"" + out_dir + "\"");

        const hd::RunConfig cfg = hd::load_run_config(table);
        const hd::RunResult res = hd::run_experiment(cfg);
        if (res.exit_code == 0) {
            std::printf("ok: artifacts in %s\n", res.run_dir.c_str());
        } else {
            std::fprintf(stderr, "error (%d): %s\n", res.exit_code, res.message.c_str());
        }
        return res.exit_code;
    } catch (const hd::ConfigError& e) {
        std::fprintf(stderr, "config error at %s: %s\n", e.path.c_str(), e.what());
        return 2;
    } catch (const hd::BlowUpError& e) {
        std::fprintf(stderr, "blow-up: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
