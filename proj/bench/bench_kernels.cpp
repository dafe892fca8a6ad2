#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "uacep/ep_solver.hpp"
#include "uacep/mesh.hpp"
#include "uacep/projection.hpp"
#include "uacep/sparse.hpp"

using namespace uacep;

namespace {

double seconds_per_call(int reps, const std::function<void()>& fn) {
  fn();
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

template <class T>
bool same_bits(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

void report(const char* name, double serial, double omp, bool equal) {
  std::printf("%-18s serial %10.3f ms   openmp %10.3f ms   speedup %5.2fx   bitwise %s\n", name, serial * 1e3,
              omp * 1e3, serial / omp, equal ? "equal" : "DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::stoi(argv[1]) : 301;
  const int reps = argc > 2 ? std::stoi(argv[2]) : 20;
  const SurfaceMesh mesh = make_sheet(n, n, 60.0, 60.0, 0.3);
  std::printf("sheet %dx%d: %zu vertices, %zu triangles, %d OpenMP threads\n", n, n, mesh.vertex_count(),
              mesh.triangle_count(), omp_get_max_threads());
  bool all_equal = true;

  const FemSystem sys = assemble_system(mesh, 0.4, 0.1);
  std::vector<double> x(mesh.vertex_count()), ys(x.size()), yo(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.001 * static_cast<double>(i));
  const double t_spmv_s = seconds_per_call(reps, [&] { kernels::spmv_serial(sys.stiffness, x, ys); });
  const double t_spmv_o = seconds_per_call(reps, [&] { kernels::spmv_omp(sys.stiffness, x, yo); });
  all_equal &= same_bits(ys, yo);
  report("spmv", t_spmv_s, t_spmv_o, same_bits(ys, yo));

  const IonicParams ionic;
  std::vector<double> u0(x.size()), h0(x.size(), 1.0);
  for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = 0.5 + 0.5 * x[i];
  std::vector<double> us = u0, hs = h0, uo = u0, ho = h0;
  const double t_ion_s = seconds_per_call(reps, [&] { kernels::ionic_step_serial(ionic, 0.05, us, hs); });
  const double t_ion_o = seconds_per_call(reps, [&] { kernels::ionic_step_omp(ionic, 0.05, uo, ho); });
  const bool ion_equal = same_bits(us, uo) && same_bits(hs, ho);
  all_equal &= ion_equal;
  report("ionic step", t_ion_s, t_ion_o, ion_equal);

  std::vector<CellSample> cs, co;
  const int res = kGridRes;
  const double t_loc_s = seconds_per_call(reps, [&] { kernels::locate_cells_serial(mesh, res, cs); });
  const double t_loc_o = seconds_per_call(reps, [&] { kernels::locate_cells_omp(mesh, res, co); });
  bool loc_equal = cs.size() == co.size();
  for (std::size_t i = 0; loc_equal && i < cs.size(); ++i)
    loc_equal = cs[i].triangle == co[i].triangle && std::memcmp(cs[i].vertices, co[i].vertices, sizeof cs[i].vertices) == 0 &&
               std::memcmp(cs[i].weights, co[i].weights, sizeof cs[i].weights) == 0;
  all_equal &= loc_equal;
  report("project locate", t_loc_s, t_loc_o, loc_equal);

  const GridSampler sampler(mesh, res);
  const VertexField field("x", 1, x);
  GridField gs, go;
  const double t_app_s = seconds_per_call(reps, [&] { gs = sampler.apply(field, Backend::serial); });
  const double t_app_o = seconds_per_call(reps, [&] { go = sampler.apply(field, Backend::openmp); });
  all_equal &= same_bits(gs.data, go.data);
  report("project apply", t_app_s, t_app_o, same_bits(gs.data, go.data));

  return all_equal ? 0 : 1;
}
