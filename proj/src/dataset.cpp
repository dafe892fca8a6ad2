#include "uacep/dataset.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <variant>

#include "uacep/error.hpp"
#include "uacep/log.hpp"
#include "uacep/rng.hpp"

namespace uacep {

using nlohmann::json;

std::vector<MeshEntry> load_mesh_directory(const std::filesystem::path& dir, const std::string& default_cohort) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError("mesh directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no *.json meshes in " + dir.string());

  std::vector<MeshEntry> out;
  for (const auto& path : files) {
    MeshEntry e;
    e.mesh_id = path.stem().string();
    e.mesh = load_mesh(path);
    e.cohort_tag = default_cohort;
    std::ifstream in(path);
    const json doc = json::parse(in, nullptr, false);
    if (doc.is_object()) {
      if (auto it = doc.find("cohort_tag"); it != doc.end() && it->is_string()) e.cohort_tag = it->get<std::string>();
    }
    if (!e.mesh.uac)
      throw ValidationError("mesh " + path.string() + " has no uac coordinates (run assign-uac first)");
    out.push_back(std::move(e));
  }
  return out;
}

const PacingSite& JobPlan::site_for(const Job& job) const {
  const auto& site = resolved[job.mesh_index * site_defs.size() + job.site_index];
  if (!site) throw ValidationError("job " + std::to_string(job.job_id) + " refers to an unresolved site");
  return *site;
}

std::uint64_t job_seed(std::uint64_t seed, const std::string& mesh_id, std::size_t site_index) {
  return stream_seed(stream_seed(seed, fnv1a64(mesh_id)), site_index);
}

namespace {

template <typename ParamsFor>
JobPlan build_plan(const std::vector<MeshEntry>& meshes, const std::vector<SiteDefinition>& sites, ParamsFor params_for) {
  JobPlan plan;
  plan.site_defs = sites;
  plan.resolved.resize(meshes.size() * sites.size());
  std::int64_t next_id = 0;
  for (std::size_t m = 0; m < meshes.size(); ++m) {
    for (std::size_t s = 0; s < sites.size(); ++s) {
      auto& slot = plan.resolved[m * sites.size() + s];
      try {
        slot = resolve_site(meshes[m].mesh, sites[s]);
      } catch (const ValidationError& e) {
        plan.skipped.push_back(meshes[m].mesh_id + "/" + sites[s].name + ": " + e.what());
        log::warn("plan: skipping site " + sites[s].name + " on mesh " + meshes[m].mesh_id + ": " + e.what());
        continue;
      }
      for (const auto& p : params_for(meshes[m], s)) plan.jobs.push_back({next_id++, m, s, p});
    }
  }
  return plan;
}

}  // namespace

JobPlan plan_jobs(const std::vector<MeshEntry>& meshes, const std::vector<SiteDefinition>& sites, int n_params,
                  std::uint64_t seed) {
  if (n_params < 1) throw ValidationError("plan_jobs: n_params must be >= 1");
  return build_plan(meshes, sites, [&](const MeshEntry& mesh, std::size_t s) {
    if (!mesh.mesh.uac) throw ValidationError("plan_jobs: mesh " + mesh.mesh_id + " has no uac coordinates");
    return lhs_sample(n_params, job_seed(seed, mesh.mesh_id, s));
  });
}

JobPlan plan_jobs_with_params(const std::vector<MeshEntry>& meshes, const std::vector<SiteDefinition>& sites,
                              const std::vector<ParamSample>& params) {
  if (params.empty()) throw ValidationError("plan_jobs: empty parameter list");
  return build_plan(meshes, sites, [&](const MeshEntry&, std::size_t) { return params; });
}

namespace {

json solver_json(const SimulationConfig& c) {
  return {{"dt", c.dt},
          {"duration", c.duration},
          {"v_threshold", c.v_threshold},
          {"chi_cm", c.chi_cm},
          {"cg_rel_tol", c.cg_rel_tol},
          {"stimulus_window", {c.stimulus.t_start, c.stimulus.t_end}},
          {"ionic",
           {{"tau_in", c.ionic.tau_in},
            {"tau_out", c.ionic.tau_out},
            {"tau_open", c.ionic.tau_open},
            {"tau_close", c.ionic.tau_close},
            {"u_gate", c.ionic.u_gate},
            {"v_rest", c.ionic.v_rest},
            {"v_peak", c.ionic.v_peak}}}};
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string solver_config_hash(const SimulationConfig& config) {
  // nlohmann::json keeps object keys sorted, so dump() is canonical.
  return hex64(fnv1a64(solver_json(config).dump()));
}

json GenerationConfig::to_json() const {
  return {{"n_params", n_params},
          {"seed", seed},
          {"grid_res", kGridRes},
          {"rng", std::string(kRngAlgorithm)},
          {"solver", solver_json(solver)},
          {"solver_config_hash", solver_config_hash(solver)}};
}

// ---------------------------------------------------------------------------
// Manifest

json Manifest::to_json() const {
  json recs = json::array();
  for (const auto& r : records) recs.push_back({{"job_id", r.job_id}, {"offset", r.offset}});
  json fails = json::array();
  for (const auto& [id, reason] : failed) fails.push_back({{"job_id", id}, {"reason", reason}});
  return {{"format", "LATD"},
          {"version", kLatdVersion},
          {"dataset_id", dataset_id},
          {"record_count", record_count},
          {"planned_jobs", planned_jobs},
          {"records", recs},
          {"ledger", {{"completed", completed}, {"failed", fails}}},
          {"config", config},
          {"created", created},
          {"updated", updated}};
}

Manifest Manifest::from_json(const json& j) {
  Manifest m;
  try {
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.record_count = j.at("record_count").get<std::uint64_t>();
    m.planned_jobs = j.value("planned_jobs", std::uint64_t{0});
    for (const auto& r : j.at("records")) m.records.push_back({r.at("job_id").get<std::int64_t>(), r.at("offset").get<std::uint64_t>()});
    const auto& ledger = j.at("ledger");
    for (const auto& id : ledger.at("completed")) m.completed.insert(id.get<std::int64_t>());
    for (const auto& f : ledger.at("failed")) m.failed[f.at("job_id").get<std::int64_t>()] = f.at("reason").get<std::string>();
    m.config = j.at("config");
    m.created = j.value("created", "");
    m.updated = j.value("updated", "");
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return m;
}

void Manifest::validate(const LatdIndex& index) const {
  if (record_count != records.size()) throw ValidationError("manifest: record_count does not match record list");
  if (record_count != index.offsets.size())
    throw ValidationError("manifest: " + std::to_string(record_count) + " records listed but container holds " +
                          std::to_string(index.offsets.size()));
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (k > 0 && records[k].offset <= records[k - 1].offset)
      throw ValidationError("manifest: offsets are not strictly increasing");
    if (records[k].offset != index.offsets[k]) throw ValidationError("manifest: offset mismatch with container");
    if (!completed.contains(records[k].job_id)) throw ValidationError("manifest: record missing from ledger");
  }
  if (completed.size() != records.size()) throw ValidationError("manifest: ledger lists jobs with no record");
  for (const auto& [id, reason] : failed)
    if (completed.contains(id)) throw ValidationError("manifest: job both completed and failed");
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset) {
  return std::filesystem::path(dataset.string() + ".manifest.json");
}

Manifest load_manifest(const std::filesystem::path& dataset) {
  const auto path = manifest_path(dataset);
  std::ifstream in(path);
  if (!in) throw ValidationError("missing manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return Manifest::from_json(j);
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& dataset) {
  const auto path = manifest_path(dataset);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  const std::string text = manifest.to_json().dump(1) + "\n";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw RuntimeFailure("cannot write " + tmp.string());
  std::size_t done = 0;
  while (done < text.size()) {
    const ssize_t w = ::write(fd, text.data() + done, text.size() - done);
    if (w < 0) {
      ::close(fd);
      throw RuntimeFailure("write failed for " + tmp.string());
    }
    done += static_cast<std::size_t>(w);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw RuntimeFailure("fsync failed for " + tmp.string());
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Execution

SampleRecord run_job(const JobPlan& plan, const Job& job, const MeshEntry& entry, const GridSampler& sampler,
                     const GenerationConfig& config) {
  const PacingSite& site = plan.site_for(job);
  SimulationConfig sim = config.solver;
  sim.sigma_l = job.params.sigma_l;
  sim.sigma_t = job.params.sigma_t;
  sim.stimulus.vertex_ids = site.vertex_ids;
  sim.backend = Backend::serial;
  const LatField lat = simulate(entry.mesh, sim);

  SampleRecord rec;
  rec.target = sampler.apply(VertexField("lat", 1, lat.values));
  for (auto& x : rec.target.data)
    if (!std::isfinite(x)) x = kUnactivatedSerialized;
  rec.target.channel_names = {"lat"};
  rec.input = assemble_input(entry.mesh, sampler, sim.sigma_l, sim.sigma_t, pacing_to_grid(site, sampler.res()));

  auto& m = rec.meta;
  m.job_id = job.job_id;
  m.mesh_id = entry.mesh_id;
  m.cohort_tag = entry.cohort_tag;
  m.site_name = site.name;
  m.sample_index = job.params.index;
  m.sigma_l = job.params.sigma_l;
  m.sigma_t = job.params.sigma_t;
  m.seed = job.params.seed;
  m.solver_config_hash = solver_config_hash(sim);
  m.max_lat_ms = lat.max_lat();
  m.surface_area_mm2 = surface_area(entry.mesh);
  return rec;
}

namespace {

using Outcome = std::variant<SampleRecord, std::string>;  // record or failure reason

std::string dataset_id_for(const json& config) { return hex64(fnv1a64(config.dump())); }

}  // namespace

Manifest run_jobs(const JobPlan& plan, const std::vector<MeshEntry>& meshes, const GenerationConfig& config,
                  const std::filesystem::path& out, const RunOptions& options) {
  if (options.workers < 1) throw ValidationError("run_jobs: workers must be >= 1");
  for (const auto& job : plan.jobs)
    if (job.mesh_index >= meshes.size()) throw ValidationError("run_jobs: job refers to an unknown mesh");

  const json config_json = config.to_json();
  Manifest manifest;
  std::optional<LatdWriter> writer;

  if (std::filesystem::exists(out)) {
    writer.emplace(LatdWriter::open_for_append(out));
    if (std::filesystem::exists(manifest_path(out))) {
      const Manifest previous = load_manifest(out);
      if (previous.config != config_json)
        throw ValidationError("existing dataset " + out.string() + " was generated with a different configuration");
      manifest.created = previous.created;
      manifest.failed = previous.failed;
    }
    // The container is the source of truth for what completed.
    const LatdReader reader(out);
    for (std::size_t i = 0; i < reader.size(); ++i) {
      const RecordMeta meta = reader.read_meta(i);
      manifest.records.push_back({meta.job_id, reader.index().offsets[i]});
      manifest.completed.insert(meta.job_id);
      manifest.failed.erase(meta.job_id);
    }
    log::info("resuming " + out.string() + " with " + std::to_string(reader.size()) + " records");
  } else {
    writer.emplace(LatdWriter::create(out));
  }
  manifest.dataset_id = dataset_id_for(config_json);
  manifest.config = config_json;
  manifest.planned_jobs = plan.jobs.size();
  if (manifest.created.empty()) manifest.created = utc_now();
  manifest.record_count = manifest.records.size();
  manifest.updated = utc_now();
  save_manifest(manifest, out);

  std::vector<const Job*> pending;
  for (const auto& job : plan.jobs)
    if (!manifest.completed.contains(job.job_id) && !manifest.failed.contains(job.job_id)) pending.push_back(&job);

  std::vector<std::optional<GridSampler>> samplers(meshes.size());
  for (const auto& job : pending)
    if (!samplers[job->mesh_index]) samplers[job->mesh_index].emplace(meshes[job->mesh_index].mesh, kGridRes);

  std::mutex mutex;
  std::condition_variable cv;
  std::map<std::size_t, Outcome> ready;
  std::size_t next_take = 0;
  std::size_t next_commit = 0;
  bool stop = false;
  const std::size_t window = 4 * static_cast<std::size_t>(options.workers);

  auto worker = [&] {
    for (;;) {
      std::size_t idx;
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return stop || next_take >= pending.size() || next_take < next_commit + window; });
        if (stop || next_take >= pending.size()) return;
        idx = next_take++;
      }
      const Job& job = *pending[idx];
      Outcome outcome;
      try {
        outcome = run_job(plan, job, meshes[job.mesh_index], *samplers[job.mesh_index], config);
      } catch (const std::exception& e) {
        outcome = std::string(e.what());
      }
      std::lock_guard lock(mutex);
      ready.emplace(idx, std::move(outcome));
      cv.notify_all();
    }
  };

  std::vector<std::thread> threads;
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(options.workers), pending.size());
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);

  auto shutdown = [&] {
    {
      std::lock_guard lock(mutex);
      stop = true;
    }
    cv.notify_all();
    for (auto& t : threads) t.join();
    threads.clear();
  };

  std::int64_t committed = 0;
  try {
    while (next_commit < pending.size()) {
      if (options.max_new_records >= 0 && committed >= options.max_new_records) break;
      Outcome outcome;
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return ready.contains(next_commit); });
        outcome = std::move(ready.at(next_commit));
        ready.erase(next_commit);
      }
      const Job& job = *pending[next_commit];
      if (auto* rec = std::get_if<SampleRecord>(&outcome)) {
        const std::uint64_t offset = writer->append(*rec);
        manifest.records.push_back({job.job_id, offset});
        manifest.completed.insert(job.job_id);
        ++committed;
      } else {
        const auto& reason = std::get<std::string>(outcome);
        log::warn("job " + std::to_string(job.job_id) + " failed: " + reason);
        manifest.failed[job.job_id] = reason;
      }
      manifest.record_count = manifest.records.size();
      manifest.updated = utc_now();
      save_manifest(manifest, out);
      {
        std::lock_guard lock(mutex);
        ++next_commit;
      }
      cv.notify_all();
    }
  } catch (...) {
    shutdown();
    throw;
  }
  shutdown();

  manifest.validate(scan_latd(out));
  return manifest;
}

}  // namespace uacep
