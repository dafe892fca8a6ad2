#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uacep/grid.hpp"

namespace uacep::metrics {

struct SsimParams {
  int window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  // Defaults to max(v) - min(v) of the reference, floored at kMinDynamicRange.
  std::optional<double> dynamic_range;
};

inline constexpr double kMinDynamicRange = 1.0;  // ms
inline constexpr double kH1Epsilon = 1e-12;
inline constexpr double kNormalizeFloor = 1e-12;

// All functions read channel 0 of single-channel grids of equal shape.

// Mean |u - v| over cells where mask is nonzero (empty mask vector = all).
double mae(const GridField& u, const GridField& v, const std::vector<std::uint8_t>& mask = {});

// Mean local SSIM over all fully-inside window positions, Gaussian-weighted.
double ssim(const GridField& u, const GridField& v, const SsimParams& params = {});

// Gaussian window weights (sum 1) used by ssim, row-major window x window.
std::vector<double> ssim_window(int window, double sigma);

double h1_relative(const GridField& u, const GridField& v);
double tv(const GridField& u);
double laplacian_loss(const GridField& u);

// (u - min v) / (max v - min v), the normalization applied before the
// regularizers.
GridField normalize_by_reference(const GridField& u, const GridField& v);

// h1_relative(u, v) + lambda * (tv(u~) + laplacian_loss(u~)), u~ normalized by v.
double total_loss(const GridField& u, const GridField& v, double lambda);

struct MetricReport {
  double mae = 0.0;
  double ssim = 0.0;
  double h1_rel = 0.0;
  double tv = 0.0;
  double laplacian = 0.0;
  double total_loss = 0.0;
  double lambda = 0.0;

  std::string to_json() const;
};

// Cells where the reference holds the never-activated sentinel are left out
// of the MAE.
MetricReport evaluate(const GridField& prediction, const GridField& truth, double lambda,
                      const SsimParams& params = {});

}  // namespace uacep::metrics
