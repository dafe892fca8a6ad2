#include "uacep/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uacep/error.hpp"

namespace uacep {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Triangles bucketed by the grid cells their uac bounding box touches.
// Inverted or flat images are left out so they fall through to the
// nearest-vertex branch.
struct Buckets {
  int res;
  std::vector<std::vector<std::int32_t>> bins;

  Buckets(const SurfaceMesh& mesh, int r) : res(r), bins(static_cast<std::size_t>(r) * static_cast<std::size_t>(r)) {
    const auto& uac = *mesh.uac;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
      const auto& tri = mesh.triangles[t];
      const Vec2& a = uac[static_cast<std::size_t>(tri[0])];
      const Vec2& b = uac[static_cast<std::size_t>(tri[1])];
      const Vec2& c = uac[static_cast<std::size_t>(tri[2])];
      if (!(cross2(b - a, c - a) > 0.0)) continue;
      const double lo_a = std::min({a.x(), b.x(), c.x()}) - kBarycentricTol;
      const double hi_a = std::max({a.x(), b.x(), c.x()}) + kBarycentricTol;
      const double lo_b = std::min({a.y(), b.y(), c.y()}) - kBarycentricTol;
      const double hi_b = std::max({a.y(), b.y(), c.y()}) + kBarycentricTol;
      const int j0 = cell_floor(lo_a), j1 = cell_floor(hi_a);
      const int i0 = cell_floor(lo_b), i1 = cell_floor(hi_b);
      for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j) bins[static_cast<std::size_t>(i * res + j)].push_back(static_cast<std::int32_t>(t));
    }
  }

  int cell_floor(double x) const { return std::clamp(static_cast<int>(std::floor(x * res)), 0, res - 1); }
};

Vec2 cell_centre(int i, int j, int res) { return {(j + 0.5) / res, (i + 0.5) / res}; }

CellSample locate_one(const SurfaceMesh& mesh, const Buckets& buckets, int i, int j) {
  const int res = buckets.res;
  const Vec2 p = cell_centre(i, j, res);
  const auto& uac = *mesh.uac;
  CellSample s;
  for (auto t : buckets.bins[static_cast<std::size_t>(i * res + j)]) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const Vec2& a = uac[static_cast<std::size_t>(tri[0])];
    const Vec2& b = uac[static_cast<std::size_t>(tri[1])];
    const Vec2& c = uac[static_cast<std::size_t>(tri[2])];
    const double det = cross2(b - a, c - a);
    double w0 = cross2(b - p, c - p) / det;
    double w1 = cross2(c - p, a - p) / det;
    double w2 = cross2(a - p, b - p) / det;
    if (w0 < -kBarycentricTol || w1 < -kBarycentricTol || w2 < -kBarycentricTol) continue;
    // Clip the tolerance band so the result is a convex combination.
    w0 = std::max(w0, 0.0);
    w1 = std::max(w1, 0.0);
    w2 = std::max(w2, 0.0);
    const double total = w0 + w1 + w2;
    s.triangle = t;
    s.vertices[0] = tri[0];
    s.vertices[1] = tri[1];
    s.vertices[2] = tri[2];
    s.weights[0] = w0 / total;
    s.weights[1] = w1 / total;
    s.weights[2] = w2 / total;
    return s;
  }
  double best = std::numeric_limits<double>::infinity();
  std::int32_t best_v = 0;
  for (std::size_t v = 0; v < uac.size(); ++v) {
    const double d = (uac[v] - p).squaredNorm();
    if (d < best) {
      best = d;
      best_v = static_cast<std::int32_t>(v);
    }
  }
  s.vertices[0] = best_v;
  return s;
}

void require_uac(const SurfaceMesh& mesh) {
  if (!mesh.uac) throw ValidationError("projection requires uac coordinates on the mesh");
}

}  // namespace

namespace kernels {

void locate_cells_serial(const SurfaceMesh& mesh, int res, std::vector<CellSample>& cells) {
  require_uac(mesh);
  const Buckets buckets(mesh, res);
  cells.resize(static_cast<std::size_t>(res) * static_cast<std::size_t>(res));
  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j) cells[static_cast<std::size_t>(i * res + j)] = locate_one(mesh, buckets, i, j);
}

void locate_cells_omp(const SurfaceMesh& mesh, int res, std::vector<CellSample>& cells) {
  require_uac(mesh);
  const Buckets buckets(mesh, res);
  cells.resize(static_cast<std::size_t>(res) * static_cast<std::size_t>(res));
  const int total = res * res;
#pragma omp parallel for schedule(dynamic, 16)
  for (int k = 0; k < total; ++k) cells[static_cast<std::size_t>(k)] = locate_one(mesh, buckets, k / res, k % res);
}

}  // namespace kernels

GridSampler::GridSampler(const SurfaceMesh& mesh, int res, Backend backend) : res_(res), vertex_count_(mesh.vertex_count()) {
  if (res < 1) throw ValidationError("grid resolution must be positive");
  if (backend == Backend::openmp)
    kernels::locate_cells_omp(mesh, res, cells_);
  else
    kernels::locate_cells_serial(mesh, res, cells_);
}

std::vector<std::uint8_t> GridSampler::coverage() const {
  std::vector<std::uint8_t> mask(cells_.size());
  for (std::size_t k = 0; k < cells_.size(); ++k) mask[k] = cells_[k].triangle >= 0 ? 1 : 0;
  return mask;
}

GridField GridSampler::apply(const VertexField& field, Backend backend) const {
  if (field.size() != vertex_count_) throw ValidationError("projection: field length does not match vertex count");
  std::vector<std::string> names;
  if (field.components == 1) {
    names.push_back(field.name);
  } else {
    for (const char* axis : {"_x", "_y", "_z"}) names.push_back(field.name + axis);
  }
  GridField grid = GridField::zeros(field.components, res_, res_, std::move(names));
  grid.mask = coverage();

  const int total = res_ * res_;
  const std::size_t plane = grid.plane_size();
  auto cell_value = [&](int k, int comp) {
    const CellSample& s = cells_[static_cast<std::size_t>(k)];
    if (s.triangle < 0) return field(static_cast<std::size_t>(s.vertices[0]), comp);
    double acc = 0.0;
    for (int q = 0; q < 3; ++q)
      if (s.weights[q] != 0.0) acc += s.weights[q] * field(static_cast<std::size_t>(s.vertices[q]), comp);
    return acc;
  };
  float* out = grid.data.data();
  if (backend == Backend::openmp) {
#pragma omp parallel for schedule(static)
    for (int k = 0; k < total; ++k)
      for (int c = 0; c < field.components; ++c)
        out[static_cast<std::size_t>(c) * plane + static_cast<std::size_t>(k)] = static_cast<float>(cell_value(k, c));
  } else {
    for (int k = 0; k < total; ++k)
      for (int c = 0; c < field.components; ++c)
        out[static_cast<std::size_t>(c) * plane + static_cast<std::size_t>(k)] = static_cast<float>(cell_value(k, c));
  }
  return grid;
}

GridField project_to_grid(const SurfaceMesh& mesh, const VertexField& field, int res, Backend backend) {
  require_uac(mesh);
  return GridSampler(mesh, res, backend).apply(field, backend);
}

ChannelSet expand_channel_names(const ChannelSet& names) {
  ChannelSet out;
  const auto& canonical = input_channel_names();
  for (const auto& name : names) {
    if (name == "xyz" || name == "coords") {
      out.insert({"x", "y", "z"});
    } else if (name == "fibre" || name == "fibres") {
      out.insert({"fibre_x", "fibre_y", "fibre_z"});
    } else if (name == "sigma" || name == "conductivity") {
      out.insert({"sigma_l", "sigma_t"});
    } else if (std::find(canonical.begin(), canonical.end(), name) != canonical.end()) {
      out.insert(name);
    } else {
      throw ValidationError("unknown input channel '" + name + "'");
    }
  }
  return out;
}

void apply_channel_mask(GridField& input, const ChannelSet& enabled) {
  const ChannelSet keep = expand_channel_names(enabled);
  for (int c = 0; c < input.channels; ++c) {
    if (keep.contains(input.channel_names[static_cast<std::size_t>(c)])) continue;
    auto plane = input.channel(c);
    std::fill(plane.begin(), plane.end(), 0.0f);
  }
}

GridField assemble_input(const SurfaceMesh& mesh, const GridSampler& sampler, double sigma_l, double sigma_t,
                         const GridField& pacing_grid, const std::optional<ChannelSet>& enabled) {
  const int res = sampler.res();
  if (!(sigma_l > 0.0) || !(sigma_t > 0.0)) throw ValidationError("assemble_input: conductivities must be positive");
  if (pacing_grid.channels != 1 || pacing_grid.height != res || pacing_grid.width != res)
    throw ValidationError("assemble_input: pacing grid must be 1x" + std::to_string(res) + "x" + std::to_string(res));
  for (float p : pacing_grid.data)
    if (!(p >= 0.0f) || !std::isfinite(p)) throw ValidationError("assemble_input: pacing values must be finite and >= 0");

  GridField input = GridField::zeros(kInputChannels, res, res, input_channel_names());
  input.mask = sampler.coverage();

  const GridField xyz = sampler.apply(vertex_positions(mesh));
  const GridField fibre = sampler.apply(fibres_to_vertices(mesh));
  for (int c = 0; c < 3; ++c) {
    std::copy(xyz.channel(c).begin(), xyz.channel(c).end(), input.channel(c).begin());
    std::copy(fibre.channel(c).begin(), fibre.channel(c).end(), input.channel(3 + c).begin());
  }
  const auto fill = [&](int c, double value) {
    auto plane = input.channel(c);
    std::fill(plane.begin(), plane.end(), static_cast<float>(value));
  };
  fill(6, surface_area(mesh));
  fill(7, sigma_l);
  fill(8, sigma_t);
  std::copy(pacing_grid.data.begin(), pacing_grid.data.end(), input.channel(9).begin());

  if (enabled) apply_channel_mask(input, *enabled);
  return input;
}

GridField assemble_input(const SurfaceMesh& mesh, double sigma_l, double sigma_t, const GridField& pacing_grid, int res,
                         const std::optional<ChannelSet>& enabled, Backend backend) {
  require_uac(mesh);
  const GridSampler sampler(mesh, res, backend);
  return assemble_input(mesh, sampler, sigma_l, sigma_t, pacing_grid, enabled);
}

}  // namespace uacep
