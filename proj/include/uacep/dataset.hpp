#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "uacep/ep_solver.hpp"
#include "uacep/latd.hpp"
#include "uacep/mesh.hpp"
#include "uacep/pacing.hpp"
#include "uacep/projection.hpp"
#include "uacep/sampling.hpp"

namespace uacep {

struct MeshEntry {
  std::string mesh_id;
  std::string cohort_tag = "A";
  SurfaceMesh mesh;
};

// Every *.json file in dir (sorted by name), id = file stem. A top-level
// "cohort_tag" string in the file overrides default_cohort.
std::vector<MeshEntry> load_mesh_directory(const std::filesystem::path& dir, const std::string& default_cohort = "A");

struct Job {
  std::int64_t job_id = 0;
  std::size_t mesh_index = 0;
  std::size_t site_index = 0;
  ParamSample params;
};

struct JobPlan {
  std::vector<Job> jobs;
  std::vector<SiteDefinition> site_defs;
  std::vector<std::optional<PacingSite>> resolved;  // mesh_index * site count + site_index
  std::vector<std::string> skipped;                 // "<mesh_id>/<site>: reason"

  const PacingSite& site_for(const Job& job) const;
};

// Per-(mesh, site) seed: splitmix-derived from (seed, hash(mesh_id), site index).
std::uint64_t job_seed(std::uint64_t seed, const std::string& mesh_id, std::size_t site_index);

// Cartesian sweep meshes x sites x n_params with per-(mesh, site) Latin
// hypercube parameters. Unresolvable sites are skipped and logged.
JobPlan plan_jobs(const std::vector<MeshEntry>& meshes, const std::vector<SiteDefinition>& sites, int n_params,
                  std::uint64_t seed);

// Same sweep with one fixed parameter list shared by every (mesh, site).
JobPlan plan_jobs_with_params(const std::vector<MeshEntry>& meshes, const std::vector<SiteDefinition>& sites,
                              const std::vector<ParamSample>& params);

// Stable hash of the solver settings that affect results (hex, 16 chars).
std::string solver_config_hash(const SimulationConfig& config);

struct GenerationConfig {
  int n_params = 0;
  std::uint64_t seed = 0;
  SimulationConfig solver;  // sigma and stimulus are overridden per job

  nlohmann::json to_json() const;
};

struct Manifest {
  struct Entry {
    std::int64_t job_id = 0;
    std::uint64_t offset = 0;
  };

  std::string dataset_id;
  std::uint64_t record_count = 0;
  std::vector<Entry> records;  // file order
  std::set<std::int64_t> completed;
  std::map<std::int64_t, std::string> failed;
  std::uint64_t planned_jobs = 0;
  nlohmann::json config;
  std::string created;
  std::string updated;

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
  // Offsets increasing, ledger consistent with the container.
  void validate(const LatdIndex& index) const;
};

std::filesystem::path manifest_path(const std::filesystem::path& dataset);
Manifest load_manifest(const std::filesystem::path& dataset);
// Write-temp-then-rename.
void save_manifest(const Manifest& manifest, const std::filesystem::path& dataset);

struct RunOptions {
  int workers = 1;
  // Stop after committing this many new records without finishing; used to
  // exercise resume. Negative means run to completion.
  std::int64_t max_new_records = -1;
};

// One job end to end: simulate, project, assemble.
SampleRecord run_job(const JobPlan& plan, const Job& job, const MeshEntry& mesh, const GridSampler& sampler,
                     const GenerationConfig& config);

// Executes the plan into `out`, resuming from whatever is already there.
// Records are appended in job order regardless of the worker count.
Manifest run_jobs(const JobPlan& plan, const std::vector<MeshEntry>& meshes, const GenerationConfig& config,
                  const std::filesystem::path& out, const RunOptions& options = {});

}  // namespace uacep
