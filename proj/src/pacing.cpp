#include "uacep/pacing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uacep/error.hpp"

namespace uacep {

using nlohmann::json;

void UacBox::check() const {
  const bool ok = alpha_min >= 0.0 && alpha_max <= 1.0 && beta_min >= 0.0 && beta_max <= 1.0 &&
                  alpha_min <= alpha_max && beta_min <= beta_max;
  if (!ok) throw ValidationError("uac box must be an ordered box inside [0,1]^2");
}

PacingSite resolve_site(const SurfaceMesh& mesh, const std::string& name, const UacBox& box, double radius) {
  if (!mesh.uac) throw ValidationError("pacing site '" + name + "': mesh has no uac coordinates");
  box.check();
  if (!(radius > 0.0)) throw ValidationError("pacing site '" + name + "': radius must be positive");

  const auto& uac = *mesh.uac;
  Vec3 sum = Vec3::Zero();
  std::size_t count = 0;
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    if (!box.contains(uac[v])) continue;
    sum += mesh.vertices[v];
    ++count;
  }
  if (count == 0) throw ValidationError("pacing site '" + name + "': no mesh vertex inside its uac box");

  PacingSite site;
  site.name = name;
  site.box = box;
  site.radius = radius;
  site.centre = sum / static_cast<double>(count);
  const double r2 = radius * radius;
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    if ((mesh.vertices[v] - site.centre).squaredNorm() > r2) continue;
    site.vertex_ids.push_back(static_cast<std::int32_t>(v));
    site.uac_points.push_back(uac[v]);
  }
  if (site.vertex_ids.empty()) throw ValidationError("pacing site '" + name + "': no vertex within the radius");
  return site;
}

GridField pacing_to_grid(const PacingSite& site, int res) {
  if (site.uac_points.empty()) throw ValidationError("pacing site '" + site.name + "' is not resolved");
  GridField grid = GridField::zeros(1, res, res, {"pacing"});
  const auto cell = [res](double x) { return std::clamp(static_cast<int>(std::floor(x * res)), 0, res - 1); };
  for (const auto& p : site.uac_points) grid(0, cell(p.y()), cell(p.x())) += 1.0f;
  const float total = static_cast<float>(site.uac_points.size());
  for (auto& value : grid.data) value /= total;
  return grid;
}

std::vector<SiteDefinition> default_sites() {
  // Layout follows the usual left-atrial coordinate picture: pulmonary veins
  // in the upper corners of the posterior half, appendage on the anterior
  // side, coronary sinus along the inferior (mitral) edge.
  return {
      {"CS", {0.35, 0.65, 0.02, 0.12}, kDefaultPacingRadius},
      {"LAA", {0.05, 0.20, 0.45, 0.65}, kDefaultPacingRadius},
      {"LIPV", {0.60, 0.72, 0.15, 0.30}, kDefaultPacingRadius},
      {"LSPV", {0.60, 0.72, 0.70, 0.85}, kDefaultPacingRadius},
      {"RIPV", {0.85, 0.97, 0.15, 0.30}, kDefaultPacingRadius},
      {"RSPV", {0.85, 0.97, 0.70, 0.85}, kDefaultPacingRadius},
      {"Roof", {0.72, 0.85, 0.85, 0.97}, kDefaultPacingRadius},
  };
}

std::vector<SiteDefinition> sites_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("site table: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("site table: top level must be an object");
  std::vector<SiteDefinition> sites;
  for (const auto& [name, entry] : doc.items()) {
    if (!entry.is_object()) throw ParseError("site '" + name + "' must be an object");
    for (const auto& [key, _] : entry.items())
      if (key != "uac_box" && key != "radius") throw ValidationError("site '" + name + "': unknown key '" + key + "'");
    auto box = entry.find("uac_box");
    if (box == entry.end() || !box->is_array() || box->size() != 4)
      throw ParseError("site '" + name + "': uac_box must be a list of 4 numbers");
    std::array<double, 4> b{};
    for (std::size_t k = 0; k < 4; ++k) {
      if (!(*box)[k].is_number()) throw ParseError("site '" + name + "': uac_box entries must be numbers");
      b[k] = (*box)[k].get<double>();
    }
    SiteDefinition def{name, {b[0], b[1], b[2], b[3]}, kDefaultPacingRadius};
    if (auto r = entry.find("radius"); r != entry.end()) {
      if (!r->is_number()) throw ParseError("site '" + name + "': radius must be a number");
      def.radius = r->get<double>();
    }
    def.box.check();
    if (!(def.radius > 0.0)) throw ValidationError("site '" + name + "': radius must be positive");
    sites.push_back(std::move(def));
  }
  if (sites.empty()) throw ValidationError("site table is empty");
  return sites;
}

std::string sites_to_json_text(const std::vector<SiteDefinition>& sites) {
  json doc = json::object();
  for (const auto& s : sites)
    doc[s.name] = {{"uac_box", {s.box.alpha_min, s.box.alpha_max, s.box.beta_min, s.box.beta_max}},
                   {"radius", s.radius}};
  return doc.dump(2);
}

std::vector<SiteDefinition> load_sites(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open site table " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return sites_from_json_text(buffer.str());
}

}  // namespace uacep
