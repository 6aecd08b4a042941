#pragma once

// Field dumps: one CSV per field (index columns per axis, then re/im or value)
// plus a sidecar JSON with the grid metadata.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "bohmlab/grid.hpp"

namespace bohmlab {

nlohmann::json grid_to_json(const Grid& grid);
Grid grid_from_json(const nlohmann::json& j);

/// Writes `<stem>.csv` and `<stem>.json`. Spinor fields get re0,im0,re1,im1 columns.
void write_field(const std::filesystem::path& stem, const ComplexField& field, const nlohmann::json& metadata = {});
void write_field(const std::filesystem::path& stem, const RealField& field, const nlohmann::json& metadata = {});
void write_wave_function(const std::filesystem::path& stem, const WaveFunction& psi);

/// Reads back a wave-function dump written by write_wave_function.
WaveFunction read_wave_function(const std::filesystem::path& stem);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace bohmlab
