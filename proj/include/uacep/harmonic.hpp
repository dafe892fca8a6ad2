#pragma once

#include <cstdint>
#include <map>

#include "uacep/mesh.hpp"
#include "uacep/sparse.hpp"

namespace uacep {

struct LaplaceProblem {
  const SurfaceMesh* mesh = nullptr;
  std::map<std::int32_t, double> dirichlet;  // vertex -> value in [0,1]
};

inline constexpr double kHarmonicRelTol = 1e-10;

// Cotangent-weight Laplacian, K_ij = -(cot a_ij + cot b_ij) / 2. Symmetric
// positive semi-definite with zero row sums.
CsrMatrix cotangent_laplacian(const SurfaceMesh& mesh);

// Discrete harmonic interpolant of the Dirichlet data. Constrained vertices
// carry their prescribed values exactly.
VertexField solve_harmonic(const LaplaceProblem& problem);

// Replaces mesh.uac with alpha = harmonic(left=0, right=1) and
// beta = harmonic(bottom=0, top=1), clamped to [0,1]. Warns when the mesh
// already had coordinates.
SurfaceMesh assign_uac(const SurfaceMesh& mesh);

}  // namespace uacep
