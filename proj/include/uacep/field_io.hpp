#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "uacep/ep_solver.hpp"
#include "uacep/grid.hpp"

namespace uacep {

// Standalone per-vertex LAT file (.lat): u32 little-endian header length,
// UTF-8 JSON header, then vertex_count float32 little-endian values with
// never-activated vertices stored as -1.
void write_lat_file(const std::filesystem::path& path, const LatField& lat, const nlohmann::json& extra = {});
LatField read_lat_file(const std::filesystem::path& path, nlohmann::json* header = nullptr);

// Grid file (.grid): same layout; header carries channels/height/width and
// channel names, followed by the float32 data and one mask byte per cell.
void write_grid_file(const std::filesystem::path& path, const GridField& grid);
GridField read_grid_file(const std::filesystem::path& path);

}  // namespace uacep
