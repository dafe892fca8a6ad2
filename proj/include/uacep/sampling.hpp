#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace uacep {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Sampled over (sigma_l, anisotropy ratio); sigma_t is derived.
struct ParamRanges {
  Interval sigma_l{0.1, 0.4};  // S/m
  Interval ratio{4.0, 10.0};   // sigma_l / sigma_t
};

struct ParamSample {
  int index = 0;
  double sigma_l = 0.0;  // S/m
  double ratio = 0.0;
  double sigma_t = 0.0;  // S/m
  std::uint64_t seed = 0;
};

// Latin hypercube design: each dimension is cut into n equal strata, one
// uniform draw per stratum, strata independently permuted per dimension.
std::vector<ParamSample> lhs_sample(int n, const ParamRanges& ranges, std::uint64_t seed);
inline std::vector<ParamSample> lhs_sample(int n, std::uint64_t seed) { return lhs_sample(n, ParamRanges{}, seed); }

// Stratum index of value within [lo, hi] split into n parts.
int stratum_of(double value, const Interval& range, int n);

// True when every stratum of both dimensions holds exactly one sample.
bool is_stratified(const std::vector<ParamSample>& samples, const ParamRanges& ranges);

std::string params_csv_text(const std::vector<ParamSample>& samples);
void write_params_csv(const std::vector<ParamSample>& samples, const std::filesystem::path& path);
std::vector<ParamSample> read_params_csv(const std::filesystem::path& path);

}  // namespace uacep
