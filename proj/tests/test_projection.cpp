#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "fixtures.hpp"
#include "uacep/error.hpp"
#include "uacep/pacing.hpp"
#include "uacep/projection.hpp"

using namespace uacep;

namespace {

VertexField uac_function(const SurfaceMesh& m, double (*f)(double, double)) {
  std::vector<double> v;
  for (const auto& p : *m.uac) v.push_back(f(p.x(), p.y()));
  return {"f", 1, v};
}

double cell_alpha(int j, int res) { return (j + 0.5) / res; }
double cell_beta(int i, int res) { return (i + 0.5) / res; }

// Sheet whose uac interior is jittered, so triangle images are irregular.
SurfaceMesh jittered_uac_sheet(int n, std::uint64_t seed) {
  SurfaceMesh m = make_sheet(n, n, 10.0, 10.0, 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.25 / (n - 1), 0.25 / (n - 1));
  for (int j = 1; j + 1 < n; ++j)
    for (int i = 1; i + 1 < n; ++i) {
      auto& p = (*m.uac)[static_cast<std::size_t>(j * n + i)];
      p += Vec2(u(rng), u(rng));
    }
  return m;
}

GridField uniform_pacing(int res) {
  GridField g = GridField::zeros(1, res, res, {"pacing"});
  for (auto& x : g.data) x = 1.0f / static_cast<float>(res * res);
  return g;
}

}  // namespace

TEST_SUITE("projection") {
  TEST_CASE("linear field is reproduced on covered cells") {
    const SurfaceMesh m = make_sheet(31, 31, 10.0, 10.0, 0.0);
    const GridField g = project_to_grid(m, uac_function(m, [](double a, double b) { return 2 * a + 3 * b; }));
    REQUIRE(g.channels == 1);
    REQUIRE(g.height == kGridRes);
    int covered = 0;
    for (int i = 0; i < kGridRes; ++i)
      for (int j = 0; j < kGridRes; ++j) {
        if (!g.mask[static_cast<std::size_t>(i * kGridRes + j)]) continue;
        ++covered;
        CHECK(std::abs(g(0, i, j) - (2 * cell_alpha(j, kGridRes) + 3 * cell_beta(i, kGridRes))) <= 1e-6);
      }
    CHECK(covered == kGridRes * kGridRes);
  }

  TEST_CASE("linear field on an irregular parameterization") {
    const SurfaceMesh m = jittered_uac_sheet(21, 4);
    const GridField g = project_to_grid(m, uac_function(m, [](double a, double b) { return 5 - a + 0.5 * b; }));
    for (int i = 0; i < kGridRes; ++i)
      for (int j = 0; j < kGridRes; ++j)
        if (g.mask[static_cast<std::size_t>(i * kGridRes + j)])
          CHECK(std::abs(g(0, i, j) - (5 - cell_alpha(j, kGridRes) + 0.5 * cell_beta(i, kGridRes))) <= 1e-6);
  }

  TEST_CASE("constant field projects to a constant grid") {
    const SurfaceMesh m = make_sheet(7, 5, 3.0, 2.0, 0.0);
    const GridField g = project_to_grid(m, VertexField("c", 1, std::vector<double>(m.vertex_count(), 7.0)));
    for (float x : g.data) CHECK(x == 7.0f);
  }

  TEST_CASE("cells outside a small triangle take the nearest vertex") {
    SurfaceMesh m;
    m.vertices = {{0, 0, 0}, {3, 0, 0}, {0, 3, 0}};
    m.triangles = {{0, 1, 2}};
    m.fibres = {{1, 0, 0}};
    m.uac = std::vector<Vec2>{{0.0, 0.0}, {0.3, 0.0}, {0.0, 0.3}};
    const GridField g = project_to_grid(m, VertexField("f", 1, {1.0, 2.0, 3.0}), 50);
    // Near the alpha axis the closest vertex is 1.
    CHECK(g(0, 0, 49) == 2.0f);
    // Near the beta axis it is vertex 2.
    CHECK(g(0, 49, 0) == 3.0f);
    // Equidistant from vertices 1 and 2: the lower index wins.
    CHECK(g(0, 49, 49) == 2.0f);
    CHECK(g.mask[static_cast<std::size_t>(49 * 50 + 49)] == 0);
    // Inside the triangle the linear branch applies.
    CHECK(g.mask[0] == 1);
    const double a = cell_alpha(0, 50), b = cell_beta(0, 50);
    CHECK(std::abs(g(0, 0, 0) - (1.0 + a / 0.3 * 1.0 + b / 0.3 * 2.0)) < 1e-6);
  }

  TEST_CASE("inverted uac triangles fall back to nearest vertex") {
    SurfaceMesh m;
    m.vertices = {{0, 0, 0}, {3, 0, 0}, {0, 3, 0}};
    m.triangles = {{0, 1, 2}};
    m.fibres = {{1, 0, 0}};
    m.uac = std::vector<Vec2>{{0.0, 0.0}, {0.0, 0.9}, {0.9, 0.0}};  // clockwise image
    const GridSampler s(m, 10);
    for (const auto& c : s.cells()) CHECK(c.triangle == -1);
    for (auto v : s.coverage()) CHECK(v == 0);
  }

  TEST_CASE("shared-edge ties go to the lowest triangle index") {
    const SurfaceMesh m = make_sheet(2, 2, 1.0, 1.0, 0.0);
    const GridSampler s(m, 2);
    // Centres (0.25, 0.25) and (0.75, 0.75) lie on the diagonal shared by both triangles.
    CHECK(s.cells()[0].triangle == 0);
    CHECK(s.cells()[3].triangle == 0);
    const SurfaceMesh swapped = fixtures::permute_triangles(m, {1, 0});
    const GridSampler s2(swapped, 2);
    CHECK(s2.cells()[0].triangle == 0);
    CHECK(s2.cells()[3].triangle == 0);
  }

  TEST_CASE("projected values stay within the vertex range") {
    std::mt19937_64 rng(100);
    const SurfaceMesh m = jittered_uac_sheet(15, 8);
    const GridSampler s(m, kGridRes);
    std::normal_distribution<double> n(0.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> v(m.vertex_count());
      for (auto& x : v) x = n(rng);
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      const GridField g = s.apply(VertexField("r", 1, v));
      for (float x : g.data) {
        CHECK(static_cast<double>(x) >= static_cast<double>(static_cast<float>(*lo)));
        CHECK(static_cast<double>(x) <= static_cast<double>(static_cast<float>(*hi)));
      }
    }
  }

  TEST_CASE("projection does not depend on triangle order") {
    std::mt19937_64 rng(12);
    const SurfaceMesh m = jittered_uac_sheet(13, 2);
    std::vector<double> v(m.vertex_count());
    std::uniform_real_distribution<double> u(0, 100);
    for (auto& x : v) x = u(rng);
    const GridField ref = project_to_grid(m, VertexField("f", 1, v));
    for (int trial = 0; trial < 3; ++trial) {
      const SurfaceMesh pm = fixtures::permute_triangles(m, fixtures::shuffled_indices(m.triangle_count(), rng));
      const GridField g = project_to_grid(pm, VertexField("f", 1, v));
      CHECK(g.mask == ref.mask);
      for (std::size_t k = 0; k < g.data.size(); ++k) CHECK(std::abs(g.data[k] - ref.data[k]) <= 1e-4f);
    }
    const GridField again = project_to_grid(m, VertexField("f", 1, v));
    CHECK(again.data == ref.data);
  }

  TEST_CASE("vector fields project channelwise") {
    const SurfaceMesh m = make_sheet(5, 5, 4.0, 4.0, 0.0);
    const GridField g = project_to_grid(m, vertex_positions(m), 8);
    CHECK(g.channels == 3);
    CHECK(g.channel_names == std::vector<std::string>{"position_x", "position_y", "position_z"});
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        CHECK(g(0, i, j) == doctest::Approx(4.0 * cell_alpha(j, 8)).epsilon(1e-6));
        CHECK(g(1, i, j) == doctest::Approx(4.0 * cell_beta(i, 8)).epsilon(1e-6));
        CHECK(g(2, i, j) == 0.0f);
      }
  }

  TEST_CASE("projection preconditions") {
    SurfaceMesh m = make_sheet(3, 3, 1, 1, 0);
    CHECK_THROWS_AS(project_to_grid(m, VertexField("f", 1, {1.0, 2.0})), ValidationError);
    CHECK_THROWS_AS(project_to_grid(m, vertex_positions(m), 0), ValidationError);
    m.uac.reset();
    CHECK_THROWS_AS(project_to_grid(m, vertex_positions(m)), ValidationError);
  }

  TEST_CASE("assemble_input examples") {
    const SurfaceMesh m = make_sheet(21, 21, 10.0, 10.0, 0.0);
    const GridField in = assemble_input(m, 0.4, 0.1, uniform_pacing(kGridRes));
    CHECK(in.channels == kInputChannels);
    CHECK(in.channel_names == input_channel_names());
    for (std::size_t k = 0; k < in.plane_size(); ++k) {
      CHECK(in.channel(6)[k] == 100.0f);
      CHECK(in.channel(7)[k] == 0.4f);
      CHECK(in.channel(8)[k] == 0.1f);
      CHECK(in.channel(3)[k] == doctest::Approx(1.0));
      CHECK(in.channel(2)[k] == 0.0f);
    }
    CHECK(in(0, 0, 0) == doctest::Approx(10.0 * cell_alpha(0, kGridRes)).epsilon(1e-6));

    const GridField no_fibres =
        assemble_input(m, 0.4, 0.1, uniform_pacing(kGridRes), kGridRes,
                       expand_channel_names({"xyz", "area", "sigma", "pacing"}));
    CHECK(no_fibres.channels == kInputChannels);
    CHECK(no_fibres.data.size() == in.data.size());
    for (int c = 3; c < 6; ++c)
      for (float x : no_fibres.channel(c)) CHECK(x == 0.0f);
    CHECK(no_fibres.channel(7)[0] == 0.4f);
  }

  TEST_CASE("masked assembly equals zeroing the full tensor") {
    const SurfaceMesh m = jittered_uac_sheet(11, 3);
    const GridField pacing = uniform_pacing(kGridRes);
    const ChannelSet keep = expand_channel_names({"fibre", "sigma_l"});
    GridField full = assemble_input(m, 0.3, 0.05, pacing);
    apply_channel_mask(full, keep);
    const GridField direct = assemble_input(m, 0.3, 0.05, pacing, kGridRes, keep);
    CHECK(std::memcmp(full.data.data(), direct.data.data(), full.data.size() * sizeof(float)) == 0);
    for (float x : direct.channel(8)) CHECK(x == 0.0f);
  }

  TEST_CASE("channel groups expand and unknown names fail") {
    CHECK(expand_channel_names({"coords"}) == ChannelSet{"x", "y", "z"});
    CHECK(expand_channel_names({"fibres", "area"}) == ChannelSet{"fibre_x", "fibre_y", "fibre_z", "area"});
    CHECK(expand_channel_names({"conductivity"}) == ChannelSet{"sigma_l", "sigma_t"});
    CHECK_THROWS_AS(expand_channel_names({"colour"}), ValidationError);
  }

  TEST_CASE("assemble_input preconditions") {
    const SurfaceMesh m = make_sheet(5, 5, 1, 1, 0);
    CHECK_THROWS_AS(assemble_input(m, 0.0, 0.1, uniform_pacing(kGridRes)), ValidationError);
    CHECK_THROWS_AS(assemble_input(m, 0.4, -0.1, uniform_pacing(kGridRes)), ValidationError);
    CHECK_THROWS_AS(assemble_input(m, 0.4, 0.1, uniform_pacing(10)), ValidationError);
    GridField negative = uniform_pacing(kGridRes);
    negative.data[5] = -1.0f;
    CHECK_THROWS_AS(assemble_input(m, 0.4, 0.1, negative), ValidationError);
  }
}
