#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uacep/parallel.hpp"

namespace uacep {

struct Triplet {
  std::int32_t row;
  std::int32_t col;
  double value;
};

// Compressed sparse row matrix, square.
struct CsrMatrix {
  std::int32_t n = 0;
  std::vector<std::int32_t> row_ptr;
  std::vector<std::int32_t> col_idx;
  std::vector<double> values;

  // Duplicate entries are summed in insertion order.
  static CsrMatrix from_triplets(std::int32_t n, std::vector<Triplet> triplets);

  double at(std::int32_t r, std::int32_t c) const;
  std::vector<double> diagonal() const;
  std::size_t nnz() const { return values.size(); }
};

namespace kernels {

void spmv_serial(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
void spmv_omp(const CsrMatrix& a, std::span<const double> x, std::span<double> y);

inline void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y, Backend backend) {
  backend == Backend::openmp ? spmv_omp(a, x, y) : spmv_serial(a, x, y);
}

}  // namespace kernels

double dot(std::span<const double> a, std::span<const double> b);

struct CgOptions {
  double rel_tol = 1e-8;
  int max_iterations = 0;  // 0 means 10 * n
  Backend backend = Backend::serial;
};

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
};

// Jacobi-preconditioned conjugate gradients for SPD systems. x holds the
// initial guess on entry. Throws SolverError if the cap is reached.
CgResult solve_cg(const CsrMatrix& a, std::span<const double> b, std::span<double> x, const CgOptions& options = {});

}  // namespace uacep
