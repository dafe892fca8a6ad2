#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uacep/dataset.hpp"
#include "uacep/ep_solver.hpp"
#include "uacep/error.hpp"
#include "uacep/field_io.hpp"
#include "uacep/harmonic.hpp"
#include "uacep/latd.hpp"
#include "uacep/log.hpp"
#include "uacep/mesh.hpp"
#include "uacep/metrics.hpp"
#include "uacep/pacing.hpp"
#include "uacep/png_export.hpp"
#include "uacep/projection.hpp"
#include "uacep/sampling.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kUnits = "Units: lengths and coordinates in mm, times in ms, conductivities in S/m.";

bool g_json = false;

void emit(const json& summary) {
  if (g_json) {
    std::cout << summary.dump(2) << "\n";
    return;
  }
  for (const auto& [key, value] : summary.items())
    std::cout << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
}

int default_workers() {
  const char* env = std::getenv("UACEP_WORKERS");
  if (!env || !*env) return 1;
  try {
    std::size_t used = 0;
    const int n = std::stoi(env, &used);
    if (used == std::string(env).size() && n >= 1) return n;
  } catch (const std::exception&) {
  }
  throw uacep::ValidationError(std::string("UACEP_WORKERS must be a positive integer, got '") + env + "'");
}

uacep::UacBox parse_box(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw uacep::ValidationError("--site-box: cannot parse '" + item + "'");
    }
  }
  if (v.size() != 4) throw uacep::ValidationError("--site-box expects alpha_min,alpha_max,beta_min,beta_max");
  uacep::UacBox box{v[0], v[1], v[2], v[3]};
  box.check();
  return box;
}

// "data.latd:3" selects record 3's target; anything else is read as a .grid file.
uacep::GridField load_grid_arg(const std::string& arg) {
  const auto colon = arg.rfind(':');
  if (colon != std::string::npos && colon > 0 && arg.compare(colon - 5, 5, ".latd") == 0) {
    const std::string index_text = arg.substr(colon + 1);
    std::size_t used = 0;
    long long index = -1;
    try {
      index = std::stoll(index_text, &used);
    } catch (const std::exception&) {
    }
    if (index < 0 || used != index_text.size()) throw uacep::ValidationError("bad record index in '" + arg + "'");
    return uacep::read_record(arg.substr(0, colon), static_cast<std::size_t>(index)).target;
  }
  if (fs::path(arg).extension() == ".latd") throw uacep::ValidationError("'" + arg + "' needs a record index, e.g. " + arg + ":0");
  uacep::GridField g = uacep::read_grid_file(arg);
  if (g.channels != 1) throw uacep::ValidationError("'" + arg + "' must hold a single channel, has " + std::to_string(g.channels));
  return g;
}

void add_solver_options(CLI::App* sub, uacep::SimulationConfig& cfg, std::string& backend) {
  sub->add_option("--duration", cfg.duration, "Simulated time [ms]")->capture_default_str();
  sub->add_option("--dt", cfg.dt, "Time step [ms]")->capture_default_str();
  sub->add_option("--threshold", cfg.v_threshold, "Activation threshold [mV]")->capture_default_str();
  sub->add_option("--chi-cm", cfg.chi_cm, "Diffusivity scale: D = sigma / chi_cm [mm^2/ms per S/m]")
      ->capture_default_str();
  sub->add_option("--cg-tol", cfg.cg_rel_tol, "Relative residual for the diffusion solve")->capture_default_str();
  sub->add_option("--backend", backend, "Kernel backend: serial or openmp")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Atrial activation-time pipeline: meshes, simulation, projection, datasets, metrics."};
  app.footer(kUnits);
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_flag("--json", g_json, "Machine-readable JSON on stdout");
  app.add_option("--log-level", log_level, "debug, info, warn or error")->capture_default_str();

  // make-sheet
  int nx = 21, ny = 21;
  double lx = 20.0, ly = 20.0, fibre_angle = 0.0;
  bool strip_uac = false;
  std::string sheet_out;
  auto* make_sheet = app.add_subcommand("make-sheet", "Write a flat triangulated sheet mesh");
  make_sheet->footer(kUnits);
  make_sheet->add_option("--nx", nx, "Vertices along x")->capture_default_str()->check(CLI::Range(2, 100000));
  make_sheet->add_option("--ny", ny, "Vertices along y")->capture_default_str()->check(CLI::Range(2, 100000));
  make_sheet->add_option("--lx", lx, "Length along x [mm]")->capture_default_str();
  make_sheet->add_option("--ly", ly, "Length along y [mm]")->capture_default_str();
  make_sheet->add_option("--fibre-angle", fibre_angle, "Fibre angle from the x axis [rad]")->capture_default_str();
  make_sheet->add_flag("--no-uac", strip_uac, "Omit coordinates so assign-uac can compute them");
  make_sheet->add_option("--out", sheet_out, "Output mesh JSON")->required();

  // assign-uac
  std::string uac_in, uac_out;
  auto* assign = app.add_subcommand("assign-uac", "Compute harmonic (alpha, beta) coordinates from landmarks");
  assign->footer(kUnits);
  assign->add_option("--mesh", uac_in, "Input mesh JSON with left/right/bottom/top landmarks")->required();
  assign->add_option("--out", uac_out, "Output mesh JSON")->required();

  // simulate
  uacep::SimulationConfig sim_cfg;
  std::string sim_mesh, sim_box, sim_site, sim_sites, sim_out, sim_diag, sim_backend = "serial";
  double sim_radius = uacep::kDefaultPacingRadius;
  bool full_duration = false;
  auto* simulate = app.add_subcommand("simulate", "Run the monodomain model and write per-vertex activation times");
  simulate->footer(kUnits);
  simulate->add_option("--mesh", sim_mesh, "Mesh JSON with coordinates")->required();
  auto* box_opt = simulate->add_option("--site-box", sim_box, "Pacing box alpha_min,alpha_max,beta_min,beta_max");
  auto* site_opt = simulate->add_option("--site", sim_site, "Named pacing site");
  box_opt->excludes(site_opt);
  simulate->add_option("--sites", sim_sites, "Site table JSON (default: built-in seven sites)");
  simulate->add_option("--radius", sim_radius, "Stimulus radius [mm]")->capture_default_str();
  simulate->add_option("--sigma-l", sim_cfg.sigma_l, "Longitudinal conductivity [S/m]")->capture_default_str();
  simulate->add_option("--sigma-t", sim_cfg.sigma_t, "Transverse conductivity [S/m]")->capture_default_str();
  add_solver_options(simulate, sim_cfg, sim_backend);
  simulate->add_flag("--full-duration", full_duration, "Keep stepping after every vertex has activated");
  simulate->add_option("--diagnostics", sim_diag, "CSV of (t [ms], min V [mV], max V [mV], activated) every 1 ms");
  simulate->add_option("--out", sim_out, "Output .lat file (default: <mesh stem>.lat)");

  // project
  std::string proj_mesh, proj_lat, proj_out, proj_backend = "serial";
  int proj_res = uacep::kGridRes;
  auto* project = app.add_subcommand("project", "Project a .lat field onto the (alpha, beta) grid");
  project->footer(kUnits);
  project->add_option("--mesh", proj_mesh, "Mesh JSON with coordinates")->required();
  project->add_option("--lat", proj_lat, "Per-vertex .lat file [ms]")->required();
  project->add_option("--res", proj_res, "Grid resolution")->capture_default_str()->check(CLI::Range(1, 4096));
  project->add_option("--backend", proj_backend, "Kernel backend: serial or openmp")->capture_default_str();
  project->add_option("--out", proj_out, "Output .grid file")->required();

  // sample-params
  int n_samples = 0;
  std::uint64_t sample_seed = 0;
  std::string params_out;
  auto* sample = app.add_subcommand("sample-params", "Latin hypercube draw of (sigma_l [S/m], ratio)");
  sample->footer(kUnits);
  sample->add_option("--n", n_samples, "Number of samples")->required()->check(CLI::Range(1, 100000000));
  sample->add_option("--seed", sample_seed, "RNG seed")->required();
  sample->add_option("--out", params_out, "Output CSV (default: stdout)");

  // build-dataset
  uacep::GenerationConfig gen;
  std::string ds_meshes, ds_sites, ds_out, ds_cohort = "A", ds_backend = "serial";
  int ds_workers = 0;
  std::int64_t ds_stop_after = -1;
  auto* build = app.add_subcommand("build-dataset", "Simulate meshes x sites x parameters into a LATD container");
  build->footer(std::string(kUnits) + " Default worker count comes from UACEP_WORKERS.");
  build->add_option("--meshes", ds_meshes, "Directory of mesh JSON files")->required();
  build->add_option("--sites", ds_sites, "Site table JSON (default: built-in seven sites)");
  build->add_option("--n-params", gen.n_params, "Parameter samples per (mesh, site)")
      ->required()
      ->check(CLI::Range(1, 100000000));
  build->add_option("--seed", gen.seed, "RNG seed")->required();
  build->add_option("--workers", ds_workers, "Worker threads")->check(CLI::Range(1, 4096));
  build->add_option("--cohort", ds_cohort, "Cohort tag for meshes without one")->capture_default_str();
  add_solver_options(build, gen.solver, ds_backend);
  build->add_option("--stop-after", ds_stop_after, "Commit at most this many new records, then stop");
  build->add_option("--out", ds_out, "Output .latd file")->required();

  // inspect
  std::string insp_dataset, insp_params;
  auto* inspect = app.add_subcommand("inspect", "Summarize a dataset or verify a parameter CSV");
  inspect->footer(kUnits);
  auto* insp_ds_opt = inspect->add_option("--dataset", insp_dataset, "LATD container");
  auto* insp_p_opt = inspect->add_option("--params", insp_params, "Parameter CSV from sample-params");
  insp_ds_opt->excludes(insp_p_opt);

  // evaluate
  std::string eval_pred, eval_truth;
  double eval_lambda = 0.0;
  uacep::metrics::SsimParams ssim_params;
  auto* evaluate = app.add_subcommand("evaluate", "Compare two activation-time grids [ms]");
  evaluate->footer(std::string(kUnits) + " Grids are given as data.latd:INDEX or a single-channel .grid file.");
  evaluate->add_option("--pred", eval_pred, "Prediction grid")->required();
  evaluate->add_option("--truth", eval_truth, "Reference grid")->required();
  evaluate->add_option("--lambda", eval_lambda, "Regularization weight")->capture_default_str();
  evaluate->add_option("--ssim-window", ssim_params.window, "SSIM window [cells]")->capture_default_str();
  evaluate->add_option("--ssim-sigma", ssim_params.gaussian_sigma, "SSIM Gaussian sigma [cells]")->capture_default_str();

  // export-png
  std::string png_dataset, png_grid, png_out;
  std::size_t png_index = 0;
  auto* export_png = app.add_subcommand("export-png", "Render a record's LAT map [ms] and input channels");
  export_png->footer(kUnits);
  auto* png_ds_opt = export_png->add_option("--dataset", png_dataset, "LATD container");
  auto* png_grid_opt = export_png->add_option("--grid", png_grid, "A .grid file instead of a dataset record");
  png_ds_opt->excludes(png_grid_opt);
  export_png->add_option("--index", png_index, "Record index")->capture_default_str();
  export_png->add_option("--out", png_out, "Output PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    uacep::log::set_level(uacep::log::parse_level(log_level));

    if (*make_sheet) {
      uacep::SurfaceMesh mesh = uacep::make_sheet(nx, ny, lx, ly, fibre_angle);
      if (strip_uac) mesh.uac.reset();
      uacep::save_mesh(mesh, sheet_out);
      emit({{"out", sheet_out},
            {"vertices", mesh.vertex_count()},
            {"triangles", mesh.triangle_count()},
            {"area_mm2", uacep::surface_area(mesh)}});
    } else if (*assign) {
      const uacep::SurfaceMesh mesh = uacep::assign_uac(uacep::load_mesh(uac_in));
      uacep::save_mesh(mesh, uac_out);
      emit({{"out", uac_out}, {"vertices", mesh.vertex_count()}});
    } else if (*simulate) {
      const uacep::SurfaceMesh mesh = uacep::load_mesh(sim_mesh);
      uacep::PacingSite site;
      if (!sim_box.empty()) {
        site = uacep::resolve_site(mesh, "box", parse_box(sim_box), sim_radius);
      } else if (!sim_site.empty()) {
        const auto defs = sim_sites.empty() ? uacep::default_sites() : uacep::load_sites(sim_sites);
        const auto it = std::find_if(defs.begin(), defs.end(), [&](const auto& d) { return d.name == sim_site; });
        if (it == defs.end()) throw uacep::ValidationError("unknown site '" + sim_site + "'");
        site = uacep::resolve_site(mesh, it->name, it->box, simulate->count("--radius") ? sim_radius : it->radius);
      } else {
        throw uacep::ValidationError("simulate needs --site-box or --site");
      }
      sim_cfg.stimulus.vertex_ids = site.vertex_ids;
      sim_cfg.stop_when_activated = !full_duration;
      sim_cfg.backend = uacep::parse_backend(sim_backend);
      std::ofstream diag_stream;
      if (!sim_diag.empty()) {
        diag_stream.open(sim_diag);
        if (!diag_stream) throw uacep::RuntimeFailure("cannot write " + sim_diag);
      }
      const uacep::LatField lat = uacep::simulate(mesh, sim_cfg, sim_diag.empty() ? nullptr : &diag_stream);
      if (sim_out.empty()) sim_out = fs::path(sim_mesh).stem().string() + ".lat";
      uacep::write_lat_file(sim_out, lat,
                            {{"sigma_l", sim_cfg.sigma_l},
                             {"sigma_t", sim_cfg.sigma_t},
                             {"site", site.name},
                             {"stimulated_vertices", site.vertex_ids.size()},
                             {"solver_config_hash", uacep::solver_config_hash(sim_cfg)}});
      emit({{"out", sim_out},
            {"max_lat_ms", lat.max_lat()},
            {"activated_fraction", lat.activated_fraction},
            {"stimulated_vertices", site.vertex_ids.size()}});
    } else if (*project) {
      const uacep::SurfaceMesh mesh = uacep::load_mesh(proj_mesh);
      const uacep::LatField lat = uacep::read_lat_file(proj_lat);
      if (lat.values.size() != mesh.vertex_count())
        throw uacep::ValidationError("LAT file has " + std::to_string(lat.values.size()) + " values, mesh has " +
                                     std::to_string(mesh.vertex_count()) + " vertices");
      uacep::GridField grid = uacep::project_to_grid(mesh, uacep::VertexField("lat", 1, lat.values), proj_res,
                                                     uacep::parse_backend(proj_backend));
      for (auto& x : grid.data)
        if (!std::isfinite(x)) x = uacep::kUnactivatedSerialized;
      grid.channel_names = {"lat"};
      uacep::write_grid_file(proj_out, grid);
      std::size_t covered = 0;
      for (auto m : grid.mask) covered += m;
      emit({{"out", proj_out}, {"res", proj_res}, {"covered_cells", covered}});
    } else if (*sample) {
      const auto samples = uacep::lhs_sample(n_samples, sample_seed);
      if (params_out.empty()) {
        std::cout << uacep::params_csv_text(samples);
      } else {
        uacep::write_params_csv(samples, params_out);
        emit({{"out", params_out}, {"rows", samples.size()}, {"seed", sample_seed}});
      }
    } else if (*build) {
      const auto meshes = uacep::load_mesh_directory(ds_meshes, ds_cohort);
      const auto sites = ds_sites.empty() ? uacep::default_sites() : uacep::load_sites(ds_sites);
      const uacep::JobPlan plan = uacep::plan_jobs(meshes, sites, gen.n_params, gen.seed);
      for (const auto& s : plan.skipped) uacep::log::warn("skipped " + s);
      gen.solver.backend = uacep::parse_backend(ds_backend);
      uacep::RunOptions opts;
      opts.workers = ds_workers > 0 ? ds_workers : default_workers();
      opts.max_new_records = ds_stop_after;
      const uacep::Manifest m = uacep::run_jobs(plan, meshes, gen, ds_out, opts);
      emit({{"out", ds_out},
            {"manifest", uacep::manifest_path(ds_out).string()},
            {"planned_jobs", m.planned_jobs},
            {"records", m.record_count},
            {"failed", m.failed.size()},
            {"skipped_sites", plan.skipped.size()},
            {"complete", m.completed.size() + m.failed.size() == m.planned_jobs}});
    } else if (*inspect) {
      if (!insp_params.empty()) {
        const auto samples = uacep::read_params_csv(insp_params);
        const uacep::ParamRanges ranges;
        double lo_l = INFINITY, hi_l = -INFINITY, lo_t = INFINITY, hi_t = -INFINITY;
        for (const auto& s : samples) {
          lo_l = std::min(lo_l, s.sigma_l);
          hi_l = std::max(hi_l, s.sigma_l);
          lo_t = std::min(lo_t, s.sigma_t);
          hi_t = std::max(hi_t, s.sigma_t);
        }
        const bool ok = uacep::is_stratified(samples, ranges);
        emit({{"params", insp_params},
              {"rows", samples.size()},
              {"stratified", ok},
              {"sigma_l_range", {lo_l, hi_l}},
              {"sigma_t_range", {lo_t, hi_t}}});
        if (!ok) throw uacep::ValidationError("parameter table is not Latin-hypercube stratified");
      } else if (!insp_dataset.empty()) {
        const uacep::LatdReader reader(insp_dataset);
        const uacep::Manifest m = uacep::load_manifest(insp_dataset);
        m.validate(reader.index());
        std::map<std::string, int> per_mesh, per_site, per_cohort;
        double max_lat = 0.0;
        for (std::size_t i = 0; i < reader.size(); ++i) {
          const auto meta = reader.read_meta(i);
          ++per_mesh[meta.mesh_id];
          ++per_site[meta.site_name];
          ++per_cohort[meta.cohort_tag];
          max_lat = std::max(max_lat, meta.max_lat_ms);
        }
        emit({{"dataset", insp_dataset},
              {"dataset_id", m.dataset_id},
              {"records", reader.size()},
              {"planned_jobs", m.planned_jobs},
              {"completed", m.completed.size()},
              {"failed", m.failed.size()},
              {"torn_bytes", reader.index().file_size - reader.index().valid_end},
              {"per_mesh", per_mesh},
              {"per_site", per_site},
              {"per_cohort", per_cohort},
              {"max_lat_ms", max_lat},
              {"solver_config_hash", m.config.value("solver_config_hash", "")}});
      } else {
        throw uacep::ValidationError("inspect needs --dataset or --params");
      }
    } else if (*evaluate) {
      const uacep::GridField pred = load_grid_arg(eval_pred);
      const uacep::GridField truth = load_grid_arg(eval_truth);
      std::cout << uacep::metrics::evaluate(pred, truth, eval_lambda, ssim_params).to_json() << "\n";
    } else if (*export_png) {
      if (!png_grid.empty()) {
        const uacep::GridField g = uacep::read_grid_file(png_grid);
        std::vector<uacep::GridField> planes;
        for (int c = 0; c < g.channels; ++c) planes.push_back(g.extract(c));
        std::vector<const uacep::GridField*> ptrs;
        for (const auto& p : planes) ptrs.push_back(&p);
        uacep::write_png(png_out, uacep::render_panels(ptrs));
      } else if (!png_dataset.empty()) {
        uacep::export_record_png(uacep::read_record(png_dataset, png_index), png_out);
      } else {
        throw uacep::ValidationError("export-png needs --dataset or --grid");
      }
      emit({{"out", png_out}});
    }
  } catch (const uacep::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const uacep::RuntimeFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
