#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "uacep/error.hpp"
#include "uacep/pacing.hpp"

using namespace uacep;

namespace {

PacingSite with_points(std::vector<Vec2> pts) {
  PacingSite s;
  s.name = "test";
  for (std::size_t k = 0; k < pts.size(); ++k) s.vertex_ids.push_back(static_cast<std::int32_t>(k));
  s.uac_points = std::move(pts);
  return s;
}

std::size_t nonzero_cells(const GridField& g) {
  std::size_t n = 0;
  for (float x : g.data) n += x != 0.0f;
  return n;
}

}  // namespace

TEST_SUITE("pacing") {
  TEST_CASE("box holding one vertex centres on it") {
    const SurfaceMesh m = make_sheet(11, 11, 10.0, 10.0, 0.0);
    const PacingSite s = resolve_site(m, "one", {0.48, 0.52, 0.28, 0.32}, 1.5);
    CHECK((s.centre - Vec3(5.0, 3.0, 0.0)).norm() < 1e-12);
    // Vertices at distance 0 and 1 mm are inside, the diagonal ones (1.41) too.
    CHECK(s.vertex_ids.size() == 9);
    CHECK(s.uac_points.size() == s.vertex_ids.size());
  }

  TEST_CASE("two in-box vertices: midpoint centre, both stimulated") {
    SurfaceMesh m;
    m.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 5, 0}};
    m.triangles = {{0, 1, 2}};
    m.fibres = {{1, 0, 0}};
    m.uac = std::vector<Vec2>{{0.1, 0.1}, {0.2, 0.1}, {0.1, 0.9}};
    const PacingSite s = resolve_site(m, "pair", {0.0, 0.3, 0.0, 0.2}, 2.0);
    CHECK((s.centre - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK(s.vertex_ids == std::vector<std::int32_t>{0, 1});
  }

  TEST_CASE("whole-sheet box gives a disc of radius 2 mm") {
    const SurfaceMesh m = make_sheet(101, 101, 10.0, 10.0, 0.0);
    const PacingSite s = resolve_site(m, "all", {0, 1, 0, 1}, 2.0);
    CHECK((s.centre - Vec3(5, 5, 0)).norm() < 1e-9);
    const double fraction = static_cast<double>(s.vertex_ids.size()) / static_cast<double>(m.vertex_count());
    const double expected = 4.0 * std::numbers::pi / 100.0;
    CHECK(std::abs(fraction - expected) / expected < 0.15);
    for (auto v : s.vertex_ids) CHECK((m.vertices[static_cast<std::size_t>(v)] - s.centre).norm() <= 2.0);
  }

  TEST_CASE("resolution errors name the site") {
    const SurfaceMesh m = make_sheet(5, 5, 4.0, 4.0, 0.0);
    try {
      (void)resolve_site(m, "LAA", {0.3, 0.4, 0.3, 0.4}, 2.0);
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("LAA") != std::string::npos);
    }
    CHECK_THROWS_AS(resolve_site(m, "r", {0, 1, 0, 1}, 0.0), ValidationError);
    CHECK_THROWS_AS(resolve_site(m, "b", {0.5, 0.2, 0, 1}, 1.0), ValidationError);
    CHECK_THROWS_AS(resolve_site(m, "b", {0, 1.2, 0, 1}, 1.0), ValidationError);
  }

  TEST_CASE("pacing_to_grid examples") {
    const GridField one = pacing_to_grid(with_points({{0.5, 0.5}}), 50);
    CHECK(one(0, 25, 25) == 1.0f);
    CHECK(nonzero_cells(one) == 1);

    const GridField same = pacing_to_grid(with_points({{0.101, 0.201}, {0.109, 0.209}}), 50);
    CHECK(same(0, 10, 5) == 1.0f);
    CHECK(nonzero_cells(same) == 1);

    const GridField spread = pacing_to_grid(with_points({{0.01, 0.01}, {0.51, 0.01}, {0.01, 0.51}, {0.99, 0.99}}), 50);
    CHECK(nonzero_cells(spread) == 4);
    CHECK(spread(0, 0, 0) == 0.25f);
    CHECK(spread(0, 49, 49) == 0.25f);
    CHECK(spread(0, 25, 0) == 0.25f);

    const GridField corner = pacing_to_grid(with_points({{1.0, 1.0}}), 50);
    CHECK(corner(0, 49, 49) == 1.0f);

    CHECK_THROWS_AS(pacing_to_grid(PacingSite{}, 50), ValidationError);
  }

  TEST_CASE("rasterized pacing is non-negative and sums to one") {
    const SurfaceMesh m = make_sheet(41, 41, 20.0, 20.0, 0.0);
    for (const auto& def : default_sites()) {
      const GridField g = pacing_to_grid(resolve_site(m, def), kGridRes);
      double sum = 0.0;
      for (float x : g.data) {
        CHECK(x >= 0.0f);
        sum += x;
      }
      CHECK(std::abs(sum - 1.0) < 1e-6);
    }
  }

  TEST_CASE("resolve_site ignores vertex ordering") {
    std::mt19937_64 rng(8);
    const SurfaceMesh m = make_sheet(21, 21, 10.0, 10.0, 0.0);
    const UacBox box{0.2, 0.45, 0.6, 0.8};
    const PacingSite ref = resolve_site(m, "s", box, 2.0);
    const auto perm = fixtures::shuffled_indices(m.vertex_count(), rng);
    const PacingSite got = resolve_site(fixtures::permute_vertices(m, perm), "s", box, 2.0);
    std::set<std::size_t> a, b;
    for (auto v : ref.vertex_ids) a.insert(static_cast<std::size_t>(v));
    for (auto v : got.vertex_ids) b.insert(perm[static_cast<std::size_t>(v)]);
    CHECK(a == b);
    CHECK((ref.centre - got.centre).norm() < 1e-12);
  }

  TEST_CASE("translating the mesh translates the centre") {
    const SurfaceMesh m = make_sheet(21, 21, 10.0, 10.0, 0.0);
    const Vec3 shift(3.5, -2.0, 7.25);
    const PacingSite a = resolve_site(m, "s", {0.6, 0.8, 0.1, 0.3}, 2.0);
    const PacingSite b = resolve_site(transformed(m, Mat3::Identity(), shift), "s", {0.6, 0.8, 0.1, 0.3}, 2.0);
    CHECK((b.centre - (a.centre + shift)).norm() < 1e-12);
    CHECK(a.vertex_ids == b.vertex_ids);
  }

  TEST_CASE("default site table") {
    const auto sites = default_sites();
    std::set<std::string> names;
    for (const auto& s : sites) {
      names.insert(s.name);
      CHECK_NOTHROW(s.box.check());
      CHECK(s.radius == 2.0);
    }
    CHECK(names == std::set<std::string>{"CS", "LAA", "LIPV", "LSPV", "RIPV", "RSPV", "Roof"});
  }

  TEST_CASE("site table JSON round trip and validation") {
    const auto sites = default_sites();
    const auto back = sites_from_json_text(sites_to_json_text(sites));
    REQUIRE(back.size() == sites.size());
    for (std::size_t k = 0; k < sites.size(); ++k) {
      CHECK(back[k].name == sites[k].name);
      CHECK(back[k].box.alpha_min == sites[k].box.alpha_min);
      CHECK(back[k].box.beta_max == sites[k].box.beta_max);
      CHECK(back[k].radius == sites[k].radius);
    }
    const auto custom = sites_from_json_text(R"({"X": {"uac_box": [0.1, 0.2, 0.3, 0.4]}})");
    CHECK(custom.front().radius == kDefaultPacingRadius);
    CHECK_THROWS_AS(sites_from_json_text(R"({"X": {"uac_box": [0.1, 0.2, 0.3, 0.4], "colour": 1}})"), ValidationError);
    CHECK_THROWS_AS(sites_from_json_text(R"({"X": {"uac_box": [0.1, 0.2, 0.3]}})"), ParseError);
    CHECK_THROWS_AS(sites_from_json_text(R"({"X": {"uac_box": [0.3, 0.2, 0.3, 0.4]}})"), ValidationError);
    CHECK_THROWS_AS(sites_from_json_text(R"({"X": {"uac_box": [0.1, 0.2, 0.3, 0.4], "radius": -1}})"), ValidationError);
    CHECK_THROWS_AS(sites_from_json_text("{}"), ValidationError);
    CHECK_THROWS_AS(sites_from_json_text("[1,2"), ParseError);
  }
}
