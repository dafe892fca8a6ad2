#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "uacep/grid.hpp"
#include "uacep/mesh.hpp"

namespace uacep {

inline constexpr double kDefaultPacingRadius = 2.0;  // mm

// (alpha_min, alpha_max, beta_min, beta_max), inclusive.
struct UacBox {
  double alpha_min = 0.0;
  double alpha_max = 1.0;
  double beta_min = 0.0;
  double beta_max = 1.0;

  bool contains(const Vec2& p) const {
    return p.x() >= alpha_min && p.x() <= alpha_max && p.y() >= beta_min && p.y() <= beta_max;
  }
  void check() const;
};

struct SiteDefinition {
  std::string name;
  UacBox box;
  double radius = kDefaultPacingRadius;
};

struct PacingSite {
  std::string name;
  UacBox box;
  double radius = kDefaultPacingRadius;
  Vec3 centre = Vec3::Zero();
  std::vector<std::int32_t> vertex_ids;  // ascending
  std::vector<Vec2> uac_points;          // matches vertex_ids
};

// Centre = mean position of the vertices whose uac lies in the box;
// stimulated set = all vertices within straight-line distance radius.
PacingSite resolve_site(const SurfaceMesh& mesh, const std::string& name, const UacBox& box,
                        double radius = kDefaultPacingRadius);
inline PacingSite resolve_site(const SurfaceMesh& mesh, const SiteDefinition& def) {
  return resolve_site(mesh, def.name, def.box, def.radius);
}

// Count of stimulated uac points per cell, normalized to sum 1.
GridField pacing_to_grid(const PacingSite& site, int res = kGridRes);

// Approximate boxes for LAA, LSPV, LIPV, RSPV, RIPV, CS and Roof.
std::vector<SiteDefinition> default_sites();

// JSON map name -> {"uac_box": [a0, a1, b0, b1], "radius": r}. Entries come
// back sorted by name.
std::vector<SiteDefinition> load_sites(const std::filesystem::path& path);
std::vector<SiteDefinition> sites_from_json_text(const std::string& text);
std::string sites_to_json_text(const std::vector<SiteDefinition>& sites);

}  // namespace uacep
