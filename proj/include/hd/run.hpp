#pragma once

#include "hd/config.hpp"

#include <filesystem>
#include <string>

namespace hd {

inline constexpr const char* kVersion = "hd 0.1.0";

struct RunResult {
    int exit_code = 0;                  // 0 ok, 2 config, 3 blow-up
    std::filesystem::path run_dir;
    std::string message;
};

// Executes the configured experiment and writes its artifacts into a fresh
// subdirectory of out_root. Identical (config, seed, version) produce
// byte-identical CSV/JSON artifacts; only the directory name varies.
RunResult run_experiment(const RunConfig& cfg);

} // namespace hd
