#include "uacep/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "uacep/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace uacep {

Backend parse_backend(std::string_view name) {
  if (name == "serial") return Backend::serial;
  if (name == "openmp" || name == "omp") return Backend::openmp;
  throw ValidationError("unknown backend '" + std::string(name) + "' (serial|openmp)");
}

int openmp_max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

CsrMatrix CsrMatrix::from_triplets(std::int32_t n, std::vector<Triplet> triplets) {
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.n = n;
  m.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t k = 0; k < triplets.size();) {
    const auto& t = triplets[k];
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n) throw ValidationError("triplet index out of range");
    double sum = 0.0;
    std::size_t j = k;
    for (; j < triplets.size() && triplets[j].row == t.row && triplets[j].col == t.col; ++j) sum += triplets[j].value;
    m.col_idx.push_back(t.col);
    m.values.push_back(sum);
    ++m.row_ptr[static_cast<std::size_t>(t.row) + 1];
    k = j;
  }
  std::partial_sum(m.row_ptr.begin(), m.row_ptr.end(), m.row_ptr.begin());
  return m;
}

double CsrMatrix::at(std::int32_t r, std::int32_t c) const {
  const auto begin = col_idx.begin() + row_ptr[static_cast<std::size_t>(r)];
  const auto end = col_idx.begin() + row_ptr[static_cast<std::size_t>(r) + 1];
  const auto it = std::lower_bound(begin, end, c);
  return (it != end && *it == c) ? values[static_cast<std::size_t>(it - col_idx.begin())] : 0.0;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(static_cast<std::size_t>(n));
  for (std::int32_t r = 0; r < n; ++r) d[static_cast<std::size_t>(r)] = at(r, r);
  return d;
}

namespace kernels {

void spmv_serial(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  for (std::int32_t r = 0; r < a.n; ++r) {
    double acc = 0.0;
    for (auto k = a.row_ptr[static_cast<std::size_t>(r)]; k < a.row_ptr[static_cast<std::size_t>(r) + 1]; ++k)
      acc += a.values[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(a.col_idx[static_cast<std::size_t>(k)])];
    y[static_cast<std::size_t>(r)] = acc;
  }
}

void spmv_omp(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  const std::int32_t* row_ptr = a.row_ptr.data();
  const std::int32_t* cols = a.col_idx.data();
  const double* vals = a.values.data();
  const double* xs = x.data();
  double* ys = y.data();
#pragma omp parallel for schedule(static)
  for (std::int32_t r = 0; r < a.n; ++r) {
    double acc = 0.0;
    for (auto k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += vals[k] * xs[cols[k]];
    ys[r] = acc;
  }
}

}  // namespace kernels

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

CgResult solve_cg(const CsrMatrix& a, std::span<const double> b, std::span<double> x, const CgOptions& options) {
  const auto n = static_cast<std::size_t>(a.n);
  const int cap = options.max_iterations > 0 ? options.max_iterations : 10 * std::max<std::int32_t>(a.n, 1);

  std::vector<double> inv_diag = a.diagonal();
  for (auto& d : inv_diag) {
    if (!(d > 0.0)) throw SolverError("conjugate gradients: non-positive diagonal entry");
    d = 1.0 / d;
  }

  std::vector<double> r(n), z(n), p(n), ap(n);
  kernels::spmv(a, x, r, options.backend);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];

  const double b_norm = std::sqrt(dot(b, b));
  CgResult result;
  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return result;
  }
  double r_norm = std::sqrt(dot(r, r));
  result.relative_residual = r_norm / b_norm;
  if (result.relative_residual <= options.rel_tol) return result;

  for (std::size_t i = 0; i < n; ++i) p[i] = z[i] = inv_diag[i] * r[i];
  double rz = dot(r, z);

  for (int it = 1; it <= cap; ++it) {
    kernels::spmv(a, p, ap, options.backend);
    const double pap = dot(p, ap);
    if (!(pap > 0.0) || !std::isfinite(pap)) throw SolverError("conjugate gradients: matrix is not positive definite");
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    r_norm = std::sqrt(dot(r, r));
    result.iterations = it;
    result.relative_residual = r_norm / b_norm;
    if (!std::isfinite(r_norm)) throw SolverError("conjugate gradients: residual is not finite");
    if (result.relative_residual <= options.rel_tol) return result;
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError("conjugate gradients did not converge in " + std::to_string(cap) +
                    " iterations (relative residual " + std::to_string(result.relative_residual) + ")");
}

}  // namespace uacep
