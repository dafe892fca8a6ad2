#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uacep {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Triangle = std::array<std::int32_t, 3>;

inline constexpr double kDegenerateAreaTol = 1e-12;  // mm^2
inline constexpr double kFibreTol = 1e-6;

// Triangulated surface in mm. Fibres are stored per triangle; standardized
// coordinates (alpha, beta) per vertex once assigned.
struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Vec3> fibres;
  std::optional<std::vector<Vec2>> uac;
  std::map<std::string, std::vector<std::int32_t>> landmarks;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
  bool has_uac() const { return uac.has_value(); }
};

// Per-vertex scalar (components == 1) or 3-vector (components == 3) field,
// stored vertex-major.
struct VertexField {
  std::string name;
  int components = 1;
  std::vector<double> values;

  VertexField() = default;
  VertexField(std::string n, int comps, std::vector<double> vals);

  std::size_t size() const { return values.size() / static_cast<std::size_t>(components); }
  double operator()(std::size_t vertex, int comp = 0) const {
    return values[vertex * static_cast<std::size_t>(components) + static_cast<std::size_t>(comp)];
  }
};

// Throws ValidationError describing the first violated invariant.
void validate(const SurfaceMesh& mesh);

SurfaceMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const SurfaceMesh& mesh, const std::filesystem::path& path);
SurfaceMesh mesh_from_json_text(const std::string& text);
std::string mesh_to_json_text(const SurfaceMesh& mesh);

// Planar nx-by-ny vertex grid in z = 0 spanning [0,lx] x [0,ly], uniform
// fibres at fibre_angle from the x axis, uac = (x/lx, y/ly), and boundary
// landmark paths left/right/bottom/top.
SurfaceMesh make_sheet(int nx, int ny, double lx, double ly, double fibre_angle);

double triangle_area(const SurfaceMesh& mesh, std::size_t t);
Vec3 triangle_unit_normal(const SurfaceMesh& mesh, std::size_t t);
double surface_area(const SurfaceMesh& mesh);

// Area-weighted nodal fibre directions, unit length. Fibres are treated as a
// line field: each contribution is sign-aligned with the vertex's reference
// triangle before summation.
VertexField fibres_to_vertices(const SurfaceMesh& mesh);

VertexField vertex_positions(const SurfaceMesh& mesh);

// Rigid or similarity transform x -> scale * R x + t (fibres rotated by R).
SurfaceMesh transformed(const SurfaceMesh& mesh, const Mat3& rotation, const Vec3& translation,
                        double scale = 1.0);
SurfaceMesh scaled(const SurfaceMesh& mesh, double factor);

// Vertex -> incident triangles in compressed form. Incident lists are in
// ascending triangle index.
struct VertexTriangleAdjacency {
  std::vector<std::int32_t> offsets;
  std::vector<std::int32_t> triangles;

  std::span<const std::int32_t> incident(std::size_t v) const {
    return {triangles.data() + offsets[v], triangles.data() + offsets[v + 1]};
  }
};

VertexTriangleAdjacency build_adjacency(const SurfaceMesh& mesh);

}  // namespace uacep
