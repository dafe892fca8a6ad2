#include "uacep/ep_solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>

#include "uacep/error.hpp"

namespace uacep {

void IonicParams::check() const {
  if (!(tau_in > 0.0 && tau_out > 0.0 && tau_open > 0.0 && tau_close > 0.0))
    throw ValidationError("ionic time constants must be positive");
  if (!(u_gate > 0.0 && u_gate < 1.0)) throw ValidationError("ionic u_gate must lie in (0,1)");
  if (!(v_peak > v_rest)) throw ValidationError("ionic v_peak must exceed v_rest");
}

void SimulationConfig::check(std::size_t vertex_count) const {
  if (!(sigma_t > 0.0) || !(sigma_l >= sigma_t))
    throw ValidationError("conductivities must satisfy sigma_l >= sigma_t > 0");
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(chi_cm > 0.0)) throw ValidationError("chi_cm must be positive");
  if (!(cg_rel_tol > 0.0)) throw ValidationError("cg_rel_tol must be positive");
  ionic.check();
  if (stimulus.vertex_ids.empty()) throw ValidationError("stimulus has no vertices");
  if (!(stimulus.t_start >= 0.0 && stimulus.t_start < stimulus.t_end))
    throw ValidationError("stimulus window must satisfy 0 <= t_start < t_end");
  if (!(duration >= stimulus.t_end)) throw ValidationError("duration must cover the stimulus window");
  for (auto v : stimulus.vertex_ids)
    if (v < 0 || static_cast<std::size_t>(v) >= vertex_count)
      throw ValidationError("stimulus vertex " + std::to_string(v) + " out of range");
}

double LatField::max_lat() const {
  double best = 0.0;
  for (double t : values)
    if (std::isfinite(t)) best = std::max(best, t);
  return best;
}

Mat3 build_conductivity(const Vec3& fibre, double sigma_l, double sigma_t) {
  return sigma_t * Mat3::Identity() + (sigma_l - sigma_t) * (fibre * fibre.transpose());
}

FemSystem assemble_system(const SurfaceMesh& mesh, double sigma_l, double sigma_t) {
  const auto n = static_cast<std::int32_t>(mesh.vertex_count());
  FemSystem sys;
  sys.lumped_mass.assign(mesh.vertex_count(), 0.0);
  std::vector<Triplet> trips;
  trips.reserve(mesh.triangle_count() * 9);

  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3 p[3] = {mesh.vertices[static_cast<std::size_t>(tri[0])], mesh.vertices[static_cast<std::size_t>(tri[1])],
                       mesh.vertices[static_cast<std::size_t>(tri[2])]};
    const Vec3 cross = (p[1] - p[0]).cross(p[2] - p[0]);
    const double twice_area = cross.norm();
    if (!(0.5 * twice_area > kDegenerateAreaTol))
      throw ValidationError("assemble_system: singular element " + std::to_string(t));
    const Vec3 normal = cross / twice_area;
    const double area = 0.5 * twice_area;

    Vec3 grad[3];
    for (int i = 0; i < 3; ++i) grad[i] = normal.cross(p[(i + 2) % 3] - p[(i + 1) % 3]) / twice_area;

    const Mat3 sigma = build_conductivity(mesh.fibres[t], sigma_l, sigma_t);
    for (int i = 0; i < 3; ++i) {
      const Vec3 flux = sigma * grad[i];
      for (int j = 0; j < 3; ++j) trips.push_back({tri[i], tri[j], area * flux.dot(grad[j])});
      sys.lumped_mass[static_cast<std::size_t>(tri[i])] += area / 3.0;
    }
  }
  sys.stiffness = CsrMatrix::from_triplets(n, std::move(trips));
  return sys;
}

double interpolate_crossing(double t0, double v0, double t1, double v1, double threshold) {
  if (!(v1 > v0)) return t1;
  const double s = std::clamp((threshold - v0) / (v1 - v0), 0.0, 1.0);
  return t0 + s * (t1 - t0);
}

namespace kernels {

namespace {

inline void ionic_update(const IonicParams& p, double dt, double& u, double& h) {
  const double du = h * u * u * (1.0 - u) / p.tau_in - u / p.tau_out;
  const double dh = u < p.u_gate ? (1.0 - h) / p.tau_open : -h / p.tau_close;
  u += dt * du;
  h += dt * dh;
}

}  // namespace

void ionic_step_serial(const IonicParams& p, double dt, std::span<double> u, std::span<double> h) {
  for (std::size_t i = 0; i < u.size(); ++i) ionic_update(p, dt, u[i], h[i]);
}

void ionic_step_omp(const IonicParams& p, double dt, std::span<double> u, std::span<double> h) {
  const auto n = static_cast<std::int64_t>(u.size());
  double* us = u.data();
  double* hs = h.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) ionic_update(p, dt, us[i], hs[i]);
}

}  // namespace kernels

DiffusionStepper::DiffusionStepper(const FemSystem& system, double dt, double chi_cm, double rel_tol, Backend backend)
    : mass_(system.lumped_mass), rhs_(system.lumped_mass.size()), dt_(dt) {
  cg_.rel_tol = rel_tol;
  cg_.backend = backend;
  system_ = system.stiffness;
  for (auto& v : system_.values) v /= chi_cm;
  for (std::int32_t r = 0; r < system_.n; ++r) {
    const auto begin = system_.col_idx.begin() + system_.row_ptr[static_cast<std::size_t>(r)];
    const auto end = system_.col_idx.begin() + system_.row_ptr[static_cast<std::size_t>(r) + 1];
    const auto it = std::lower_bound(begin, end, r);
    if (it == end || *it != r) throw SolverError("diffusion operator has no diagonal entry in row " + std::to_string(r));
    system_.values[static_cast<std::size_t>(it - system_.col_idx.begin())] += mass_[static_cast<std::size_t>(r)] / dt;
  }
}

int DiffusionStepper::step(std::span<double> u) {
  for (std::size_t i = 0; i < rhs_.size(); ++i) rhs_[i] = mass_[i] / dt_ * u[i];
  return solve_cg(system_, rhs_, u, cg_).iterations;
}

MonodomainSolver::MonodomainSolver(const SurfaceMesh& mesh, const SimulationConfig& config)
    : config_(config),
      diffusion_((config.check(mesh.vertex_count()), assemble_system(mesh, config)), config.dt, config.chi_cm,
                 config.cg_rel_tol, config.backend) {
  const std::size_t n = mesh.vertex_count();
  u_.assign(n, 0.0);
  h_.assign(n, 1.0);
  v_prev_.assign(n, config_.ionic.voltage(0.0));
  lat_.assign(n, kUnactivated);
  stimulated_.assign(n, 0);
  for (auto v : config_.stimulus.vertex_ids) stimulated_[static_cast<std::size_t>(v)] = 1;
  total_steps_ = static_cast<long>(std::ceil(config_.duration / config_.dt - 1e-9));
}

bool MonodomainSolver::finished() const {
  return steps_ >= total_steps_ || (config_.stop_when_activated && activated_ == u_.size());
}

void MonodomainSolver::step() {
  const double t0 = time_;
  const double t1 = static_cast<double>(steps_ + 1) * config_.dt;
  const bool stimulating = t0 >= config_.stimulus.t_start && t0 < config_.stimulus.t_end;

  if (config_.backend == Backend::openmp)
    kernels::ionic_step_omp(config_.ionic, config_.dt, u_, h_);
  else
    kernels::ionic_step_serial(config_.ionic, config_.dt, u_, h_);
  if (stimulating)
    for (auto v : config_.stimulus.vertex_ids) u_[static_cast<std::size_t>(v)] = 1.0;

  diffusion_.step(u_);
  if (stimulating)
    for (auto v : config_.stimulus.vertex_ids) u_[static_cast<std::size_t>(v)] = 1.0;

  const double th = config_.v_threshold;
  for (std::size_t i = 0; i < u_.size(); ++i) {
    if (!std::isfinite(u_[i]) || !std::isfinite(h_[i])) {
      std::ostringstream msg;
      msg << "simulation state is not finite at vertex " << i << ", t = " << t1 << " ms (u = " << u_[i]
          << ", h = " << h_[i] << ")";
      throw SolverError(msg.str());
    }
    const double v = config_.ionic.voltage(u_[i]);
    if (lat_[i] == kUnactivated && v > th && v_prev_[i] <= th) {
      lat_[i] = interpolate_crossing(t0, v_prev_[i], t1, v, th);
      ++activated_;
    }
    v_prev_[i] = v;
  }
  time_ = t1;
  ++steps_;
}

LatField MonodomainSolver::result() const {
  LatField out;
  out.values = lat_;
  out.activated_fraction = lat_.empty() ? 0.0 : static_cast<double>(activated_) / static_cast<double>(lat_.size());
  return out;
}

LatField simulate(const SurfaceMesh& mesh, const SimulationConfig& config, std::ostream* diagnostics) {
  MonodomainSolver solver(mesh, config);
  double next_report = 1.0;
  if (diagnostics) *diagnostics << "t_ms,min_v_mv,max_v_mv,activated\n";
  while (!solver.finished()) {
    solver.step();
    if (diagnostics && solver.time() >= next_report - 1e-9) {
      const auto [lo, hi] = std::minmax_element(solver.u().begin(), solver.u().end());
      *diagnostics << next_report << ',' << config.ionic.voltage(*lo) << ',' << config.ionic.voltage(*hi) << ','
                   << solver.activated_count() << '\n';
      next_report += 1.0;
    }
  }
  return solver.result();
}

namespace {

std::vector<std::int32_t> column_at(const SurfaceMesh& mesh, double x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : mesh.vertices) best = std::min(best, std::abs(p.x() - x));
  std::vector<std::int32_t> ids;
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
    if (std::abs(mesh.vertices[v].x() - x) <= best + 1e-9) ids.push_back(static_cast<std::int32_t>(v));
  return ids;
}

double mean_lat(const LatField& lat, const std::vector<std::int32_t>& ids) {
  double sum = 0.0;
  for (auto v : ids) {
    const double t = lat.values[static_cast<std::size_t>(v)];
    if (!std::isfinite(t)) throw SolverError("measure_cv: wavefront did not reach the probe line");
    sum += t;
  }
  return sum / static_cast<double>(ids.size());
}

}  // namespace

CvMeasurement measure_cv(const SurfaceMesh& strip, const SimulationConfig& config) {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  for (const auto& p : strip.vertices) {
    x_min = std::min(x_min, p.x());
    x_max = std::max(x_max, p.x());
  }
  const double length = x_max - x_min;
  if (!(length > 0.0)) throw ValidationError("measure_cv: strip has zero length");

  SimulationConfig cfg = config;
  cfg.stimulus.vertex_ids = column_at(strip, x_min);
  const LatField lat = simulate(strip, cfg);

  const auto near = column_at(strip, x_min + 0.4 * length);
  const auto far = column_at(strip, x_min + 0.7 * length);
  CvMeasurement m;
  m.lat_near = mean_lat(lat, near);
  m.lat_far = mean_lat(lat, far);
  const double dx = strip.vertices[static_cast<std::size_t>(far.front())].x() -
                    strip.vertices[static_cast<std::size_t>(near.front())].x();
  if (!(m.lat_far > m.lat_near)) throw SolverError("measure_cv: non-increasing activation between probes");
  m.cv = dx / (m.lat_far - m.lat_near);
  m.max_lat = lat.max_lat();
  return m;
}

SurfaceMesh reference_strip(double length, double width, double spacing, double fibre_angle) {
  const int nx = static_cast<int>(std::lround(length / spacing)) + 1;
  const int ny = std::max(2, static_cast<int>(std::lround(width / spacing)) + 1);
  return make_sheet(nx, ny, length, width, fibre_angle);
}

}  // namespace uacep
