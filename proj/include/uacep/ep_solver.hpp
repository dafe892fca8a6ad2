#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "uacep/mesh.hpp"
#include "uacep/parallel.hpp"
#include "uacep/sparse.hpp"

namespace uacep {

// Two-variable Mitchell-Schaeffer membrane model. u is the normalized
// potential, h the recovery gate. Times in ms, potentials in mV.
struct IonicParams {
  double tau_in = 0.3;
  double tau_out = 6.0;
  double tau_open = 120.0;
  double tau_close = 150.0;
  double u_gate = 0.13;
  double v_rest = -80.0;
  double v_peak = 20.0;

  void check() const;
  double voltage(double u) const { return v_rest + u * (v_peak - v_rest); }
};

struct StimulusSpec {
  std::vector<std::int32_t> vertex_ids;
  double t_start = 0.0;  // ms
  double t_end = 2.0;    // ms, exclusive
};

// Maps sigma [S/m] to the effective diffusivity sigma / chi_cm [mm^2/ms].
// Calibrated so that sigma_l = 0.4 S/m conducts at ~0.7 m/s along fibres on
// the reference strip (see reference_strip()).
inline constexpr double kDefaultChiCm = 0.9282;

struct SimulationConfig {
  double sigma_l = 0.4;         // S/m
  double sigma_t = 0.1;         // S/m
  double duration = 600.0;      // ms
  double dt = 0.05;             // ms
  double v_threshold = 0.0;     // mV
  double chi_cm = kDefaultChiCm;
  double cg_rel_tol = 1e-8;
  // Stop once every vertex has activated; the LAT field cannot change after.
  bool stop_when_activated = true;
  IonicParams ionic;
  StimulusSpec stimulus;
  Backend backend = Backend::serial;

  void check(std::size_t vertex_count) const;
};

inline constexpr double kUnactivated = std::numeric_limits<double>::infinity();
inline constexpr float kUnactivatedSerialized = -1.0f;

struct LatField {
  std::vector<double> values;  // ms; kUnactivated where never activated
  double activated_fraction = 0.0;

  double max_lat() const;  // over activated vertices, 0 when none
  bool all_activated() const { return activated_fraction >= 1.0; }
};

// sigma_t I + (sigma_l - sigma_t) f f^T.
Mat3 build_conductivity(const Vec3& fibre, double sigma_l, double sigma_t);

struct FemSystem {
  std::vector<double> lumped_mass;  // mm^2
  CsrMatrix stiffness;              // S/m, pure Neumann operator
};

// Linear triangle elements with per-element anisotropic conductivity.
FemSystem assemble_system(const SurfaceMesh& mesh, double sigma_l, double sigma_t);
inline FemSystem assemble_system(const SurfaceMesh& mesh, const SimulationConfig& config) {
  return assemble_system(mesh, config.sigma_l, config.sigma_t);
}

// Time of the upward threshold crossing between two samples, interpolated
// linearly in time.
double interpolate_crossing(double t0, double v0, double t1, double v1, double threshold);

namespace kernels {

// Forward Euler step of the membrane model on every vertex.
void ionic_step_serial(const IonicParams& p, double dt, std::span<double> u, std::span<double> h);
void ionic_step_omp(const IonicParams& p, double dt, std::span<double> u, std::span<double> h);

}  // namespace kernels

// Backward Euler diffusion with lumped mass:
// (M/dt + K/chi_cm) u_next = (M/dt) u.
class DiffusionStepper {
 public:
  DiffusionStepper(const FemSystem& system, double dt, double chi_cm, double rel_tol, Backend backend);

  // In place; returns the CG iteration count.
  int step(std::span<double> u);
  std::span<const double> mass() const { return mass_; }

 private:
  std::vector<double> mass_;
  CsrMatrix system_;
  std::vector<double> rhs_;
  double dt_;
  CgOptions cg_;
};

// Operator-split monodomain time integration with LAT tracking.
class MonodomainSolver {
 public:
  MonodomainSolver(const SurfaceMesh& mesh, const SimulationConfig& config);

  void step();
  double time() const { return time_; }
  long steps_taken() const { return steps_; }
  std::span<const double> u() const { return u_; }
  std::span<const double> h() const { return h_; }
  const std::vector<double>& lat() const { return lat_; }
  std::size_t activated_count() const { return activated_; }
  bool finished() const;
  LatField result() const;

 private:
  SimulationConfig config_;
  DiffusionStepper diffusion_;
  std::vector<double> u_, h_, v_prev_, lat_;
  std::vector<char> stimulated_;
  std::size_t activated_ = 0;
  double time_ = 0.0;
  long steps_ = 0;
  long total_steps_ = 0;
};

// Runs the full protocol. If diagnostics is non-null a CSV of
// (t, min V, max V, activated count) is written every 1 ms.
LatField simulate(const SurfaceMesh& mesh, const SimulationConfig& config, std::ostream* diagnostics = nullptr);

// Conduction velocity on a strip stimulated along its x = min edge.
struct CvMeasurement {
  double cv = 0.0;        // mm/ms == m/s
  double lat_near = 0.0;  // ms at 40% of the length
  double lat_far = 0.0;   // ms at 70% of the length
  double max_lat = 0.0;
};

CvMeasurement measure_cv(const SurfaceMesh& strip, const SimulationConfig& config);

// Long thin sheet used for CV calibration and checks: length x width mm at
// the given node spacing, fibres along x unless fibre_angle says otherwise.
SurfaceMesh reference_strip(double length = 40.0, double width = 1.0, double spacing = 0.2, double fibre_angle = 0.0);

}  // namespace uacep
