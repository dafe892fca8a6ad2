#include "uacep/mesh.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "uacep/error.hpp"

namespace uacep {

using nlohmann::json;

VertexField::VertexField(std::string n, int comps, std::vector<double> vals)
    : name(std::move(n)), components(comps), values(std::move(vals)) {
  if (components != 1 && components != 3)
    throw ValidationError("vertex field '" + name + "': components must be 1 or 3");
  if (values.size() % static_cast<std::size_t>(components) != 0)
    throw ValidationError("vertex field '" + name + "': value count not a multiple of components");
}

namespace {

std::string tri_label(std::size_t t) { return "triangle " + std::to_string(t); }

Vec3 raw_cross(const SurfaceMesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Vec3& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
  const Vec3& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
  const Vec3& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
  return (b - a).cross(c - a);
}

// Union-find over vertices for the connectivity check.
struct DisjointSet {
  std::vector<std::int32_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::int32_t find(std::int32_t x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

double triangle_area(const SurfaceMesh& mesh, std::size_t t) { return 0.5 * raw_cross(mesh, t).norm(); }

Vec3 triangle_unit_normal(const SurfaceMesh& mesh, std::size_t t) { return raw_cross(mesh, t).normalized(); }

double surface_area(const SurfaceMesh& mesh) {
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) total += triangle_area(mesh, t);
  return total;
}

void validate(const SurfaceMesh& mesh) {
  const std::size_t nv = mesh.vertex_count();
  const std::size_t nt = mesh.triangle_count();
  if (nv < 3 || nt < 1) throw ValidationError("mesh needs at least 3 vertices and 1 triangle");
  for (std::size_t v = 0; v < nv; ++v)
    if (!mesh.vertices[v].allFinite()) throw ValidationError("vertex " + std::to_string(v) + " is not finite");

  for (std::size_t t = 0; t < nt; ++t) {
    for (auto idx : mesh.triangles[t])
      if (idx < 0 || static_cast<std::size_t>(idx) >= nv)
        throw ValidationError(tri_label(t) + " has out-of-range vertex index " + std::to_string(idx));
    const double area = triangle_area(mesh, t);
    if (!(area > kDegenerateAreaTol))
      throw ValidationError(tri_label(t) + " is degenerate (area " + std::to_string(area) + " mm^2)");
  }

  if (mesh.fibres.size() != nt)
    throw ValidationError("fibre count " + std::to_string(mesh.fibres.size()) + " != triangle count " +
                          std::to_string(nt));
  for (std::size_t t = 0; t < nt; ++t) {
    const Vec3& f = mesh.fibres[t];
    if (!f.allFinite() || std::abs(f.norm() - 1.0) > kFibreTol)
      throw ValidationError("fibre of " + tri_label(t) + " is not unit length");
    if (std::abs(f.dot(triangle_unit_normal(mesh, t))) > kFibreTol)
      throw ValidationError("fibre of " + tri_label(t) + " is not tangent to the triangle");
  }

  if (mesh.uac) {
    if (mesh.uac->size() != nv) throw ValidationError("uac count does not match vertex count");
    for (std::size_t v = 0; v < nv; ++v) {
      const Vec2& c = (*mesh.uac)[v];
      if (!(c.x() >= 0.0 && c.x() <= 1.0 && c.y() >= 0.0 && c.y() <= 1.0))
        throw ValidationError("uac of vertex " + std::to_string(v) + " outside [0,1]^2");
    }
  }

  for (const auto& [name, path] : mesh.landmarks)
    for (auto idx : path)
      if (idx < 0 || static_cast<std::size_t>(idx) >= nv)
        throw ValidationError("landmark '" + name + "' has out-of-range vertex index " + std::to_string(idx));

  // Edge multiplicity: each undirected edge in at most two triangles.
  std::unordered_map<std::uint64_t, int> edge_count;
  edge_count.reserve(nt * 3);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      auto a = static_cast<std::uint64_t>(tri[k]);
      auto b = static_cast<std::uint64_t>(tri[(k + 1) % 3]);
      if (a == b) throw ValidationError(tri_label(t) + " repeats a vertex");
      if (a > b) std::swap(a, b);
      if (++edge_count[(a << 32) | b] > 2)
        throw ValidationError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                              ") shared by more than two triangles");
    }
  }

  DisjointSet sets(nv);
  std::vector<char> referenced(nv, 0);
  for (const auto& tri : mesh.triangles) {
    sets.unite(tri[0], tri[1]);
    sets.unite(tri[1], tri[2]);
    for (auto idx : tri) referenced[static_cast<std::size_t>(idx)] = 1;
  }
  for (std::size_t v = 0; v < nv; ++v) {
    if (!referenced[v]) throw ValidationError("vertex " + std::to_string(v) + " is not used by any triangle");
    if (sets.find(static_cast<std::int32_t>(v)) != 0) throw ValidationError("mesh is not connected");
  }
}

// ---------------------------------------------------------------------------
// JSON I/O

namespace {

template <int N>
Eigen::Matrix<double, N, 1> read_row(const json& row, const char* what, std::size_t i) {
  if (!row.is_array() || row.size() != N)
    throw ParseError(std::string(what) + "[" + std::to_string(i) + "] must have " + std::to_string(N) + " entries");
  Eigen::Matrix<double, N, 1> out;
  for (int k = 0; k < N; ++k) {
    if (!row[static_cast<std::size_t>(k)].is_number())
      throw ParseError(std::string(what) + "[" + std::to_string(i) + "] has a non-numeric entry");
    out[k] = row[static_cast<std::size_t>(k)].get<double>();
    if (!std::isfinite(out[k])) throw ParseError(std::string(what) + " contains a non-finite value");
  }
  return out;
}

const json& require_array(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_array()) throw ParseError(std::string("mesh file: missing array '") + key + "'");
  return *it;
}

}  // namespace

SurfaceMesh mesh_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("mesh file: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("mesh file: top level must be an object");

  SurfaceMesh mesh;
  const json& verts = require_array(doc, "vertices");
  mesh.vertices.reserve(verts.size());
  for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.push_back(read_row<3>(verts[i], "vertices", i));

  const json& tris = require_array(doc, "triangles");
  mesh.triangles.reserve(tris.size());
  for (std::size_t i = 0; i < tris.size(); ++i) {
    const json& row = tris[i];
    if (!row.is_array() || row.size() != 3) throw ParseError("triangles[" + std::to_string(i) + "] must have 3 entries");
    Triangle tri{};
    for (std::size_t k = 0; k < 3; ++k) {
      if (!row[k].is_number_integer()) throw ParseError("triangles[" + std::to_string(i) + "] has a non-integer index");
      const auto idx = row[k].get<std::int64_t>();
      if (idx < 0 || idx > INT32_MAX) throw ValidationError("triangles[" + std::to_string(i) + "] index out of range");
      tri[k] = static_cast<std::int32_t>(idx);
    }
    mesh.triangles.push_back(tri);
  }

  const json& fibres = require_array(doc, "fibres");
  mesh.fibres.reserve(fibres.size());
  for (std::size_t i = 0; i < fibres.size(); ++i) mesh.fibres.push_back(read_row<3>(fibres[i], "fibres", i));

  if (auto it = doc.find("uac"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("mesh file: 'uac' must be an array");
    std::vector<Vec2> uac;
    uac.reserve(it->size());
    for (std::size_t i = 0; i < it->size(); ++i) uac.push_back(read_row<2>((*it)[i], "uac", i));
    mesh.uac = std::move(uac);
  }

  if (auto it = doc.find("landmarks"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) throw ParseError("mesh file: 'landmarks' must be an object");
    for (const auto& [name, path] : it->items()) {
      if (!path.is_array()) throw ParseError("landmark '" + name + "' must be an index list");
      std::vector<std::int32_t> ids;
      for (const auto& idx : path) {
        if (!idx.is_number_integer()) throw ParseError("landmark '" + name + "' has a non-integer index");
        const auto value = idx.get<std::int64_t>();
        if (value < 0 || value > INT32_MAX) throw ValidationError("landmark '" + name + "' index out of range");
        ids.push_back(static_cast<std::int32_t>(value));
      }
      mesh.landmarks.emplace(name, std::move(ids));
    }
  }

  validate(mesh);
  return mesh;
}

std::string mesh_to_json_text(const SurfaceMesh& mesh) {
  json doc;
  auto& verts = doc["vertices"] = json::array();
  for (const auto& p : mesh.vertices) verts.push_back({p.x(), p.y(), p.z()});
  auto& tris = doc["triangles"] = json::array();
  for (const auto& t : mesh.triangles) tris.push_back({t[0], t[1], t[2]});
  auto& fibres = doc["fibres"] = json::array();
  for (const auto& f : mesh.fibres) fibres.push_back({f.x(), f.y(), f.z()});
  if (mesh.uac) {
    auto& uac = doc["uac"] = json::array();
    for (const auto& c : *mesh.uac) uac.push_back({c.x(), c.y()});
  }
  if (!mesh.landmarks.empty()) {
    auto& lm = doc["landmarks"] = json::object();
    for (const auto& [name, path] : mesh.landmarks) lm[name] = path;
  }
  return doc.dump();
}

SurfaceMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open mesh file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return mesh_from_json_text(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_mesh(const SurfaceMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write mesh file " + path.string());
  out << mesh_to_json_text(mesh) << '\n';
  if (!out) throw RuntimeFailure("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

SurfaceMesh make_sheet(int nx, int ny, double lx, double ly, double fibre_angle) {
  if (nx < 2 || ny < 2) throw ValidationError("make_sheet: nx and ny must be >= 2");
  if (!(lx > 0.0) || !(ly > 0.0)) throw ValidationError("make_sheet: lx and ly must be positive");

  SurfaceMesh mesh;
  const auto id = [nx](int i, int j) { return static_cast<std::int32_t>(j * nx + i); };
  std::vector<Vec2> uac;
  mesh.vertices.reserve(static_cast<std::size_t>(nx * ny));
  uac.reserve(static_cast<std::size_t>(nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double a = static_cast<double>(i) / (nx - 1);
      const double b = static_cast<double>(j) / (ny - 1);
      mesh.vertices.emplace_back(a * lx, b * ly, 0.0);
      uac.emplace_back(a, b);
    }
  }
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  const Vec3 fibre(std::cos(fibre_angle), std::sin(fibre_angle), 0.0);
  mesh.fibres.assign(mesh.triangles.size(), fibre.normalized());
  mesh.uac = std::move(uac);

  auto& left = mesh.landmarks["left"];
  auto& right = mesh.landmarks["right"];
  for (int j = 0; j < ny; ++j) {
    left.push_back(id(0, j));
    right.push_back(id(nx - 1, j));
  }
  auto& bottom = mesh.landmarks["bottom"];
  auto& top = mesh.landmarks["top"];
  for (int i = 0; i < nx; ++i) {
    bottom.push_back(id(i, 0));
    top.push_back(id(i, ny - 1));
  }
  return mesh;
}

VertexTriangleAdjacency build_adjacency(const SurfaceMesh& mesh) {
  VertexTriangleAdjacency adj;
  adj.offsets.assign(mesh.vertex_count() + 1, 0);
  for (const auto& tri : mesh.triangles)
    for (auto v : tri) ++adj.offsets[static_cast<std::size_t>(v) + 1];
  std::partial_sum(adj.offsets.begin(), adj.offsets.end(), adj.offsets.begin());
  adj.triangles.resize(static_cast<std::size_t>(adj.offsets.back()));
  std::vector<std::int32_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
    for (auto v : mesh.triangles[t]) adj.triangles[static_cast<std::size_t>(cursor[static_cast<std::size_t>(v)]++)] =
        static_cast<std::int32_t>(t);
  return adj;
}

VertexField fibres_to_vertices(const SurfaceMesh& mesh) {
  const auto adj = build_adjacency(mesh);

  // Canonical triangle key (sorted vertex triple) fixes the summation order
  // and the reference triangle independently of how triangles are numbered.
  std::vector<Triangle> keys(mesh.triangle_count());
  for (std::size_t t = 0; t < keys.size(); ++t) {
    keys[t] = mesh.triangles[t];
    std::sort(keys[t].begin(), keys[t].end());
  }
  std::vector<double> areas(mesh.triangle_count());
  for (std::size_t t = 0; t < areas.size(); ++t) areas[t] = triangle_area(mesh, t);

  std::vector<double> out(mesh.vertex_count() * 3, 0.0);
  std::vector<std::int32_t> order;
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    const auto inc = adj.incident(v);
    if (inc.empty()) continue;
    order.assign(inc.begin(), inc.end());
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
      const auto& ka = keys[static_cast<std::size_t>(a)];
      const auto& kb = keys[static_cast<std::size_t>(b)];
      return ka != kb ? ka < kb : a < b;
    });
    const Vec3& reference = mesh.fibres[static_cast<std::size_t>(order.front())];
    Vec3 sum = Vec3::Zero();
    for (auto t : order) {
      const Vec3& f = mesh.fibres[static_cast<std::size_t>(t)];
      const double sign = f.dot(reference) < 0.0 ? -1.0 : 1.0;
      sum += (sign * areas[static_cast<std::size_t>(t)]) * f;
    }
    const double norm = sum.norm();
    const Vec3 dir = norm > 0.0 ? Vec3(sum / norm) : reference;
    for (int k = 0; k < 3; ++k) out[v * 3 + static_cast<std::size_t>(k)] = dir[k];
  }
  return VertexField("fibre", 3, std::move(out));
}

VertexField vertex_positions(const SurfaceMesh& mesh) {
  std::vector<double> out;
  out.reserve(mesh.vertex_count() * 3);
  for (const auto& p : mesh.vertices) out.insert(out.end(), {p.x(), p.y(), p.z()});
  return VertexField("position", 3, std::move(out));
}

SurfaceMesh transformed(const SurfaceMesh& mesh, const Mat3& rotation, const Vec3& translation, double scale) {
  SurfaceMesh out = mesh;
  for (auto& p : out.vertices) p = scale * (rotation * p) + translation;
  for (auto& f : out.fibres) f = rotation * f;
  return out;
}

SurfaceMesh scaled(const SurfaceMesh& mesh, double factor) {
  return transformed(mesh, Mat3::Identity(), Vec3::Zero(), factor);
}

}  // namespace uacep
