#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "uacep/error.hpp"
#include "uacep/mesh.hpp"

using namespace uacep;

namespace {

const char* kSquare = R"({
  "vertices": [[0,0,0],[1,0,0],[1,1,0],[0,1,0]],
  "triangles": [[0,1,2],[0,2,3]],
  "fibres": [[1,0,0],[1,0,0]]
})";

// Two equal-area triangles sharing vertex 0, both in z = 0.
SurfaceMesh fan(const Vec3& f0, const Vec3& f1) {
  SurfaceMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.fibres = {f0, f1};
  return m;
}

}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("minimal square file loads") {
    const SurfaceMesh m = mesh_from_json_text(kSquare);
    CHECK(m.vertex_count() == 4);
    CHECK(m.triangle_count() == 2);
    CHECK_FALSE(m.has_uac());
    CHECK(surface_area(m) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("out-of-range triangle index is rejected") {
    std::string text = kSquare;
    text.replace(text.find("[0,2,3]"), 7, "[0,2,99]");
    CHECK_THROWS_AS(mesh_from_json_text(text), ValidationError);
  }

  TEST_CASE("malformed documents raise ParseError") {
    CHECK_THROWS_AS(mesh_from_json_text("{not json"), ParseError);
    CHECK_THROWS_AS(mesh_from_json_text("[]"), ParseError);
    CHECK_THROWS_AS(mesh_from_json_text(R"({"vertices": [[0,0]], "triangles": [], "fibres": []})"), ParseError);
    CHECK_THROWS_AS(mesh_from_json_text(R"({"vertices": [], "fibres": []})"), ParseError);
  }

  TEST_CASE("21x21 sheet survives a file round trip") {
    const auto dir = fixtures::temp_dir("mesh-rt");
    const SurfaceMesh sheet = make_sheet(21, 21, 1.0, 1.0, 0.3);
    save_mesh(sheet, dir / "sheet.json");
    const SurfaceMesh back = load_mesh(dir / "sheet.json");
    CHECK(back.vertex_count() == 441);
    CHECK(back.triangle_count() == 2 * 20 * 20);
    REQUIRE(back.has_uac());
    for (std::size_t v = 0; v < sheet.vertex_count(); ++v) {
      CHECK(back.vertices[v] == sheet.vertices[v]);
      CHECK((*back.uac)[v] == (*sheet.uac)[v]);
    }
    for (std::size_t t = 0; t < sheet.triangle_count(); ++t) {
      CHECK(back.triangles[t] == sheet.triangles[t]);
      CHECK(back.fibres[t] == sheet.fibres[t]);
    }
    CHECK(back.landmarks == sheet.landmarks);
  }

  TEST_CASE("load_mesh reports missing files") {
    CHECK_THROWS_AS(load_mesh("/nonexistent/mesh.json"), ValidationError);
  }

  TEST_CASE("make_sheet examples") {
    const SurfaceMesh tiny = make_sheet(2, 2, 1, 1, 0);
    CHECK(tiny.vertex_count() == 4);
    CHECK(tiny.triangle_count() == 2);
    for (const auto& f : tiny.fibres) CHECK((f - Vec3(1, 0, 0)).norm() == 0.0);

    CHECK(surface_area(make_sheet(21, 21, 10, 10, 0)) == doctest::Approx(100.0).epsilon(1e-13));

    const SurfaceMesh rotated = make_sheet(21, 21, 10, 10, std::numbers::pi / 2);
    for (const auto& f : rotated.fibres) CHECK((f - Vec3(0, 1, 0)).norm() < 1e-15);

    const SurfaceMesh s = make_sheet(5, 3, 8, 2, 0);
    for (std::size_t v = 0; v < s.vertex_count(); ++v) {
      CHECK(s.vertices[v].z() == 0.0);
      CHECK((*s.uac)[v].x() == doctest::Approx(s.vertices[v].x() / 8));
      CHECK((*s.uac)[v].y() == doctest::Approx(s.vertices[v].y() / 2));
    }
    CHECK(s.landmarks.at("left").size() == 3);
    CHECK(s.landmarks.at("bottom").size() == 5);
    for (auto v : s.landmarks.at("right")) CHECK(s.vertices[static_cast<std::size_t>(v)].x() == 8.0);
    for (auto v : s.landmarks.at("top")) CHECK(s.vertices[static_cast<std::size_t>(v)].y() == 2.0);

    CHECK_THROWS_AS(make_sheet(1, 4, 1, 1, 0), ValidationError);
    CHECK_THROWS_AS(make_sheet(4, 4, 0, 1, 0), ValidationError);
  }

  TEST_CASE("surface area examples") {
    const SurfaceMesh unit = make_sheet(11, 11, 1, 1, 0);
    CHECK(surface_area(unit) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(surface_area(scaled(unit, 2.0)) == doctest::Approx(4.0).epsilon(1e-13));
  }

  TEST_CASE("hemisphere area converges to 2 pi r^2") {
    const SurfaceMesh hemi = fixtures::upper_hemisphere(fixtures::icosphere(3, 10.0));
    REQUIRE_NOTHROW(validate(hemi));
    CHECK(hemi.triangle_count() == 640);
    const double exact = 2.0 * std::numbers::pi * 100.0;
    CHECK(std::abs(surface_area(hemi) - exact) / exact < 0.02);
  }

  TEST_CASE("area is invariant under rigid motion and scales with k^2") {
    std::mt19937_64 rng(11);
    const SurfaceMesh hemi = fixtures::upper_hemisphere(fixtures::icosphere(2, 7.0));
    const double a0 = surface_area(hemi);
    for (int trial = 0; trial < 10; ++trial) {
      const SurfaceMesh moved = transformed(hemi, fixtures::random_rotation(rng), fixtures::random_vec(rng, 100.0));
      CHECK(std::abs(surface_area(moved) - a0) / a0 < 1e-10);
      const double k = 0.5 + trial * 0.37;
      CHECK(std::abs(surface_area(scaled(hemi, k)) - k * k * a0) / (k * k * a0) < 1e-10);
    }
  }

  TEST_CASE("fibres_to_vertices examples") {
    const VertexField same = fibres_to_vertices(fan({1, 0, 0}, {1, 0, 0}));
    CHECK(same(0, 0) == doctest::Approx(1.0));
    CHECK(same(0, 1) == doctest::Approx(0.0));

    const VertexField mixed = fibres_to_vertices(fan({1, 0, 0}, {0, 1, 0}));
    CHECK(mixed(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(mixed(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(mixed(0, 2) == 0.0);
    // Vertex 1 only touches the first triangle.
    CHECK(mixed(1, 0) == 1.0);
    CHECK(mixed(3, 1) == 1.0);

    const SurfaceMesh sheet = make_sheet(9, 7, 3, 2, 0.4);
    const VertexField f = fibres_to_vertices(sheet);
    for (std::size_t v = 0; v < sheet.vertex_count(); ++v)
      for (int c = 0; c < 3; ++c) CHECK(f(v, c) == doctest::Approx(sheet.fibres[0][c]).epsilon(1e-14));
  }

  TEST_CASE("antiparallel fibres do not cancel") {
    const VertexField f = fibres_to_vertices(fan({1, 0, 0}, {-1, 0, 0}));
    CHECK(std::abs(f(0, 0)) == doctest::Approx(1.0));
    CHECK(f(0, 1) == doctest::Approx(0.0));
  }

  TEST_CASE("vertex fibres are unit length on curved meshes") {
    std::mt19937_64 rng(5);
    SurfaceMesh hemi = fixtures::upper_hemisphere(fixtures::icosphere(3, 10.0));
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    for (std::size_t t = 0; t < hemi.triangle_count(); ++t) {
      const Vec3 n = triangle_unit_normal(hemi, t);
      const Vec3 e1 = fixtures::any_tangent(hemi, t);
      const Vec3 e2 = n.cross(e1);
      const double a = ang(rng);
      hemi.fibres[t] = std::cos(a) * e1 + std::sin(a) * e2;
    }
    REQUIRE_NOTHROW(validate(hemi));
    const VertexField f = fibres_to_vertices(hemi);
    for (std::size_t v = 0; v < hemi.vertex_count(); ++v) {
      const double n = std::sqrt(f(v, 0) * f(v, 0) + f(v, 1) * f(v, 1) + f(v, 2) * f(v, 2));
      CHECK(std::abs(n - 1.0) < 1e-6);
    }
  }

  TEST_CASE("fibres_to_vertices is equivariant under triangle reordering") {
    std::mt19937_64 rng(17);
    SurfaceMesh hemi = fixtures::upper_hemisphere(fixtures::icosphere(2, 5.0));
    const VertexField ref = fibres_to_vertices(hemi);
    for (int trial = 0; trial < 5; ++trial) {
      const auto perm = fixtures::shuffled_indices(hemi.triangle_count(), rng);
      const VertexField got = fibres_to_vertices(fixtures::permute_triangles(hemi, perm));
      CHECK(std::memcmp(got.values.data(), ref.values.data(), ref.values.size() * sizeof(double)) == 0);
    }
  }

  TEST_CASE("validation rejects each broken invariant") {
    SurfaceMesh ok = make_sheet(3, 3, 1, 1, 0);
    REQUIRE_NOTHROW(validate(ok));

    SurfaceMesh m = ok;
    m.vertices[4] = m.vertices[0];  // collapses triangles around the centre
    CHECK_THROWS_AS(validate(m), ValidationError);

    m = ok;
    m.fibres[0] = {2, 0, 0};
    CHECK_THROWS_AS(validate(m), ValidationError);

    m = ok;
    m.fibres[0] = Vec3(1, 0, 1e-3).normalized();
    CHECK_THROWS_AS(validate(m), ValidationError);

    m = ok;
    (*m.uac)[0] = {1.5, 0.0};
    CHECK_THROWS_AS(validate(m), ValidationError);

    m = ok;
    m.vertices[0].x() = std::nan("");
    CHECK_THROWS_AS(validate(m), ValidationError);

    m = ok;
    m.landmarks["left"].push_back(1000);
    CHECK_THROWS_AS(validate(m), ValidationError);

    m = ok;
    m.fibres.pop_back();
    CHECK_THROWS_AS(validate(m), ValidationError);

    // Three triangles on edge (0,1).
    m = ok;
    m.vertices.push_back({0.5, -1.0, 0.0});
    m.vertices.push_back({0.5, -0.5, 1.0});
    m.uac.reset();
    m.triangles.push_back({0, 1, 9});
    m.triangles.push_back({0, 1, 10});
    m.fibres.push_back({1, 0, 0});
    m.fibres.push_back({1, 0, 0});
    CHECK_THROWS_AS(validate(m), ValidationError);

    // Two disjoint squares.
    SurfaceMesh two = mesh_from_json_text(kSquare);
    for (int k = 0; k < 4; ++k) two.vertices.push_back(two.vertices[static_cast<std::size_t>(k)] + Vec3(5, 0, 0));
    two.triangles.push_back({4, 5, 6});
    two.triangles.push_back({4, 6, 7});
    two.fibres.push_back({1, 0, 0});
    two.fibres.push_back({1, 0, 0});
    CHECK_THROWS_AS(validate(two), ValidationError);

    // Unreferenced vertex.
    m = mesh_from_json_text(kSquare);
    m.vertices.push_back({3, 3, 0});
    CHECK_THROWS_AS(validate(m), ValidationError);
  }

  TEST_CASE("adjacency lists incident triangles in ascending order") {
    const SurfaceMesh s = make_sheet(4, 4, 1, 1, 0);
    const auto adj = build_adjacency(s);
    std::size_t total = 0;
    for (std::size_t v = 0; v < s.vertex_count(); ++v) {
      const auto inc = adj.incident(v);
      total += inc.size();
      for (std::size_t k = 1; k < inc.size(); ++k) CHECK(inc[k - 1] < inc[k]);
      for (auto t : inc) {
        const auto& tri = s.triangles[static_cast<std::size_t>(t)];
        CHECK(std::find(tri.begin(), tri.end(), static_cast<std::int32_t>(v)) != tri.end());
      }
    }
    CHECK(total == 3 * s.triangle_count());
  }
}
