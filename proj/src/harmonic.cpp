#include "uacep/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "uacep/error.hpp"
#include "uacep/log.hpp"

namespace uacep {

namespace {

double cotangent(const Vec3& apex, const Vec3& p, const Vec3& q) {
  const Vec3 e1 = p - apex;
  const Vec3 e2 = q - apex;
  return e1.dot(e2) / e1.cross(e2).norm();
}

}  // namespace

CsrMatrix cotangent_laplacian(const SurfaceMesh& mesh) {
  std::vector<Triplet> trips;
  trips.reserve(mesh.triangle_count() * 9);
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const auto apex = tri[k];
      const auto i = tri[(k + 1) % 3];
      const auto j = tri[(k + 2) % 3];
      const double w = 0.5 * cotangent(mesh.vertices[static_cast<std::size_t>(apex)],
                                       mesh.vertices[static_cast<std::size_t>(i)],
                                       mesh.vertices[static_cast<std::size_t>(j)]);
      trips.push_back({i, j, -w});
      trips.push_back({j, i, -w});
      trips.push_back({i, i, w});
      trips.push_back({j, j, w});
    }
  }
  return CsrMatrix::from_triplets(static_cast<std::int32_t>(mesh.vertex_count()), std::move(trips));
}

VertexField solve_harmonic(const LaplaceProblem& problem) {
  if (problem.mesh == nullptr) throw ValidationError("solve_harmonic: no mesh");
  const SurfaceMesh& mesh = *problem.mesh;
  const auto n = static_cast<std::int32_t>(mesh.vertex_count());
  if (problem.dirichlet.empty()) throw ValidationError("solve_harmonic: insufficient constraints (none given)");
  for (const auto& [v, value] : problem.dirichlet) {
    if (v < 0 || v >= n) throw ValidationError("solve_harmonic: constrained vertex " + std::to_string(v) + " out of range");
    if (!(value >= 0.0 && value <= 1.0))
      throw ValidationError("solve_harmonic: boundary value for vertex " + std::to_string(v) + " outside [0,1]");
  }

  std::vector<double> field(static_cast<std::size_t>(n), 0.0);
  std::vector<std::int32_t> free_index(static_cast<std::size_t>(n), -1);
  std::int32_t n_free = 0;
  double mean_bc = 0.0;
  for (const auto& [v, value] : problem.dirichlet) {
    field[static_cast<std::size_t>(v)] = value;
    mean_bc += value;
  }
  mean_bc /= static_cast<double>(problem.dirichlet.size());
  for (std::int32_t v = 0; v < n; ++v)
    if (!problem.dirichlet.contains(v)) free_index[static_cast<std::size_t>(v)] = n_free++;
  if (n_free == 0) return VertexField("harmonic", 1, std::move(field));

  // Eliminate constrained rows/columns: K_ff x_f = -K_fc x_c.
  const CsrMatrix k = cotangent_laplacian(mesh);
  std::vector<Triplet> trips;
  std::vector<double> rhs(static_cast<std::size_t>(n_free), 0.0);
  for (std::int32_t r = 0; r < n; ++r) {
    const auto fr = free_index[static_cast<std::size_t>(r)];
    if (fr < 0) continue;
    for (auto p = k.row_ptr[static_cast<std::size_t>(r)]; p < k.row_ptr[static_cast<std::size_t>(r) + 1]; ++p) {
      const auto c = k.col_idx[static_cast<std::size_t>(p)];
      const double value = k.values[static_cast<std::size_t>(p)];
      const auto fc = free_index[static_cast<std::size_t>(c)];
      if (fc >= 0)
        trips.push_back({fr, fc, value});
      else
        rhs[static_cast<std::size_t>(fr)] -= value * field[static_cast<std::size_t>(c)];
    }
  }
  const CsrMatrix reduced = CsrMatrix::from_triplets(n_free, std::move(trips));

  std::vector<double> x(static_cast<std::size_t>(n_free), mean_bc);
  CgOptions opts;
  opts.rel_tol = kHarmonicRelTol;
  opts.max_iterations = 10 * n;
  if (std::sqrt(dot(rhs, rhs)) == 0.0) {
    // Homogeneous data: the unique solution is zero.
    std::fill(x.begin(), x.end(), 0.0);
  } else {
    solve_cg(reduced, rhs, x, opts);
  }

  for (std::int32_t v = 0; v < n; ++v) {
    const auto f = free_index[static_cast<std::size_t>(v)];
    if (f >= 0) field[static_cast<std::size_t>(v)] = x[static_cast<std::size_t>(f)];
  }
  return VertexField("harmonic", 1, std::move(field));
}

namespace {

const std::vector<std::int32_t>& landmark(const SurfaceMesh& mesh, const std::string& name) {
  auto it = mesh.landmarks.find(name);
  if (it == mesh.landmarks.end() || it->second.empty())
    throw ValidationError("assign_uac: missing landmark path '" + name + "'");
  return it->second;
}

VertexField solve_between(const SurfaceMesh& mesh, const std::string& zero_side, const std::string& one_side) {
  LaplaceProblem problem{&mesh, {}};
  for (auto v : landmark(mesh, zero_side)) problem.dirichlet[v] = 0.0;
  for (auto v : landmark(mesh, one_side)) {
    auto [it, inserted] = problem.dirichlet.emplace(v, 1.0);
    if (!inserted && it->second != 1.0)
      throw ValidationError("assign_uac: vertex " + std::to_string(v) + " lies on both '" + zero_side + "' and '" +
                            one_side + "'");
  }
  return solve_harmonic(problem);
}

}  // namespace

SurfaceMesh assign_uac(const SurfaceMesh& mesh) {
  const VertexField alpha = solve_between(mesh, "left", "right");
  const VertexField beta = solve_between(mesh, "bottom", "top");
  if (mesh.uac) log::warn("assign_uac: overwriting existing uac coordinates");

  SurfaceMesh out = mesh;
  std::vector<Vec2> uac(mesh.vertex_count());
  for (std::size_t v = 0; v < uac.size(); ++v)
    uac[v] = Vec2(std::clamp(alpha(v), 0.0, 1.0), std::clamp(beta(v), 0.0, 1.0));
  out.uac = std::move(uac);
  return out;
}

}  // namespace uacep
