#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "uacep/grid.hpp"
#include "uacep/mesh.hpp"
#include "uacep/parallel.hpp"

namespace uacep {

inline constexpr double kBarycentricTol = 1e-9;

// How one grid cell centre is served: barycentric weights inside a triangle's
// uac image, or the nearest vertex in uac space.
struct CellSample {
  std::int32_t triangle = -1;   // -1: nearest-vertex branch
  std::int32_t vertices[3] = {0, 0, 0};
  double weights[3] = {1.0, 0.0, 0.0};
};

// Cell-to-mesh lookup for one mesh and resolution, reusable across fields.
class GridSampler {
 public:
  GridSampler(const SurfaceMesh& mesh, int res, Backend backend = Backend::serial);

  int res() const { return res_; }
  const std::vector<CellSample>& cells() const { return cells_; }
  std::vector<std::uint8_t> coverage() const;

  GridField apply(const VertexField& field, Backend backend = Backend::serial) const;

 private:
  int res_;
  std::size_t vertex_count_;
  std::vector<CellSample> cells_;
};

namespace kernels {

// Cell location over all res*res centres. Each cell is independent.
void locate_cells_serial(const SurfaceMesh& mesh, int res, std::vector<CellSample>& cells);
void locate_cells_omp(const SurfaceMesh& mesh, int res, std::vector<CellSample>& cells);

}  // namespace kernels

GridField project_to_grid(const SurfaceMesh& mesh, const VertexField& field, int res = kGridRes,
                          Backend backend = Backend::serial);

// Canonical ten-channel model input.
inline const std::vector<std::string>& input_channel_names() {
  static const std::vector<std::string> names = {"x",       "y",    "z",       "fibre_x", "fibre_y",
                                                 "fibre_z", "area", "sigma_l", "sigma_t", "pacing"};
  return names;
}
inline constexpr int kInputChannels = 10;

using ChannelSet = std::set<std::string>;

// Channel groups accepted in a mask in addition to single channel names.
ChannelSet expand_channel_names(const ChannelSet& names);

// enabled: channels to keep (nullopt keeps all). Disabled channels are zero
// filled; the tensor shape never changes.
GridField assemble_input(const SurfaceMesh& mesh, double sigma_l, double sigma_t, const GridField& pacing_grid,
                         int res = kGridRes, const std::optional<ChannelSet>& enabled = std::nullopt,
                         Backend backend = Backend::serial);

GridField assemble_input(const SurfaceMesh& mesh, const GridSampler& sampler, double sigma_l, double sigma_t,
                         const GridField& pacing_grid, const std::optional<ChannelSet>& enabled = std::nullopt);

void apply_channel_mask(GridField& input, const ChannelSet& enabled);

}  // namespace uacep
