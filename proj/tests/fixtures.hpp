#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "uacep/grid.hpp"
#include "uacep/mesh.hpp"

namespace fixtures {

using uacep::SurfaceMesh;
using uacep::Vec3;

inline Vec3 any_tangent(const SurfaceMesh& m, std::size_t t) {
  const auto& tri = m.triangles[t];
  return (m.vertices[static_cast<std::size_t>(tri[1])] - m.vertices[static_cast<std::size_t>(tri[0])]).normalized();
}

inline void fill_edge_fibres(SurfaceMesh& m) {
  m.fibres.resize(m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) m.fibres[t] = any_tangent(m, t);
}

// Subdivided icosahedron projected onto a sphere of the given radius.
inline SurfaceMesh icosphere(int level, double radius) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                         {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  std::vector<uacep::Triangle> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& x : v) x.normalize();
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = mid.find(key); it != mid.end()) return it->second;
      v.push_back((v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]).normalized());
      return mid[key] = static_cast<int>(v.size()) - 1;
    };
    std::vector<uacep::Triangle> next;
    for (const auto& t : f) {
      const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  SurfaceMesh m;
  for (auto& x : v) m.vertices.push_back(radius * x);
  m.triangles = f;
  fill_edge_fibres(m);
  return m;
}

// Keeps triangles with centroid z > 0 and compacts the vertex list. The
// sphere is tilted first so that no centroid lies on the cut plane; the
// icosphere is centrally symmetric, so exactly half of it survives.
inline SurfaceMesh upper_hemisphere(const SurfaceMesh& input) {
  const uacep::Mat3 tilt = (Eigen::AngleAxisd(0.3, Vec3::UnitX()) * Eigen::AngleAxisd(0.2, Vec3::UnitY())).toRotationMatrix();
  SurfaceMesh sphere = input;
  for (auto& v : sphere.vertices) v = tilt * v;
  for (auto& f : sphere.fibres) f = tilt * f;
  SurfaceMesh m;
  std::vector<int> remap(sphere.vertices.size(), -1);
  for (std::size_t t = 0; t < sphere.triangles.size(); ++t) {
    const auto& tri = sphere.triangles[t];
    Vec3 c = Vec3::Zero();
    for (int k = 0; k < 3; ++k) c += sphere.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
    if (c.z() <= 0.0) continue;
    uacep::Triangle out{};
    for (int k = 0; k < 3; ++k) {
      auto& r = remap[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
      if (r < 0) {
        r = static_cast<int>(m.vertices.size());
        m.vertices.push_back(sphere.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])]);
      }
      out[static_cast<std::size_t>(k)] = r;
    }
    m.triangles.push_back(out);
  }
  fill_edge_fibres(m);
  return m;
}

// Open cylinder cut along the seam theta = 0: column 0 and column n_theta
// coincide in space but are distinct vertices. Landmarks: left/right are the
// two seam sides, bottom/top the end rings.
inline SurfaceMesh seamed_cylinder(int n_theta, int n_z, double radius, double height) {
  SurfaceMesh m;
  const int cols = n_theta + 1;
  for (int k = 0; k < n_z; ++k)
    for (int j = 0; j < cols; ++j) {
      const double th = 2.0 * std::numbers::pi * j / n_theta;
      m.vertices.emplace_back(radius * std::cos(th), radius * std::sin(th), height * k / (n_z - 1));
    }
  auto id = [&](int j, int k) { return k * cols + j; };
  for (int k = 0; k + 1 < n_z; ++k)
    for (int j = 0; j < n_theta; ++j) {
      m.triangles.push_back({id(j, k), id(j + 1, k), id(j + 1, k + 1)});
      m.triangles.push_back({id(j, k), id(j + 1, k + 1), id(j, k + 1)});
    }
  fill_edge_fibres(m);
  for (int k = 0; k < n_z; ++k) {
    m.landmarks["left"].push_back(id(0, k));
    m.landmarks["right"].push_back(id(n_theta, k));
  }
  for (int j = 0; j < cols; ++j) {
    m.landmarks["bottom"].push_back(id(j, 0));
    m.landmarks["top"].push_back(id(j, n_z - 1));
  }
  return m;
}

inline uacep::Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

// Relabels triangles by perm (new index k holds old triangle perm[k]).
inline SurfaceMesh permute_triangles(const SurfaceMesh& m, const std::vector<std::size_t>& perm) {
  SurfaceMesh out = m;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    out.triangles[k] = m.triangles[perm[k]];
    out.fibres[k] = m.fibres[perm[k]];
  }
  return out;
}

// Relabels vertices: new vertex k is old vertex perm[k].
inline SurfaceMesh permute_vertices(const SurfaceMesh& m, const std::vector<std::size_t>& perm) {
  SurfaceMesh out = m;
  std::vector<std::int32_t> inverse(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    out.vertices[k] = m.vertices[perm[k]];
    if (m.uac) (*out.uac)[k] = (*m.uac)[perm[k]];
    inverse[perm[k]] = static_cast<std::int32_t>(k);
  }
  for (auto& t : out.triangles)
    for (auto& v : t) v = inverse[static_cast<std::size_t>(v)];
  for (auto& [name, path] : out.landmarks)
    for (auto& v : path) v = inverse[static_cast<std::size_t>(v)];
  return out;
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

inline uacep::GridField grid_from(const std::vector<std::vector<double>>& rows) {
  const int h = static_cast<int>(rows.size()), w = static_cast<int>(rows.front().size());
  auto g = uacep::GridField::zeros(1, h, w, {"u"});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) g(0, i, j) = static_cast<float>(rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  return g;
}

inline uacep::GridField random_grid(int h, int w, std::mt19937_64& rng, double lo = 0.0, double hi = 100.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  auto g = uacep::GridField::zeros(1, h, w, {"u"});
  for (auto& x : g.data) x = static_cast<float>(u(rng));
  return g;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("uacep-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures

#include "uacep/latd.hpp"
#include "uacep/projection.hpp"

namespace fixtures {

// Record with random but valid tensors; no simulation involved.
inline uacep::SampleRecord synthetic_record(std::mt19937_64& rng, std::int64_t job_id) {
  using namespace uacep;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SampleRecord r;
  r.input = GridField::zeros(kInputChannels, kGridRes, kGridRes, input_channel_names());
  for (auto& x : r.input.data) x = static_cast<float>(u(rng) * 20.0 - 10.0);
  r.meta.sigma_l = 0.1 + 0.3 * u(rng);
  r.meta.sigma_t = r.meta.sigma_l / 5.0;
  for (auto& x : r.input.channel(7)) x = static_cast<float>(r.meta.sigma_l);
  for (auto& x : r.input.channel(8)) x = static_cast<float>(r.meta.sigma_t);
  r.target = GridField::zeros(1, kGridRes, kGridRes, {"lat"});
  for (auto& x : r.target.data) x = static_cast<float>(u(rng) * 300.0);
  r.target.data[7] = -1.0f;
  r.meta.job_id = job_id;
  r.meta.mesh_id = "mesh" + std::to_string(job_id % 3);
  r.meta.cohort_tag = "A";
  r.meta.site_name = "LAA";
  r.meta.sample_index = static_cast<int>(job_id);
  r.meta.seed = 42;
  r.meta.solver_config_hash = "0123456789abcdef";
  r.meta.max_lat_ms = 300.0;
  r.meta.surface_area_mm2 = 100.0;
  return r;
}

}  // namespace fixtures
