#pragma once

#include "hd/dynamics.hpp"
#include "hd/field.hpp"

#include <filesystem>
#include <string>

namespace hd {

// Field snapshot: 64-byte header (magic "HDFLD1\0\0", u32 nx, ny, nz, ncomp,
// repr, reserved, f64 L, depth, zero padding), then ncomp flat little-endian
// f64 arrays indexed i + nx*(j + ny*k). repr 0 = physical grid values.
void write_snapshot(const std::filesystem::path& file, const State& u);
void write_snapshot(const std::filesystem::path& file, const ScalarField& f);
State read_state_snapshot(const std::filesystem::path& file);

// one JSON object per line: {"step":..,"time":..,<diagnostics>}
void write_trajectory_ndjson(const std::filesystem::path& file, const Trajectory& tr);

// deterministic float formatting shared by every artifact writer
std::string fmt_double(double v);

} // namespace hd
