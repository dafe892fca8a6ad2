#include "uacep/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "uacep/error.hpp"
#include "uacep/rng.hpp"

namespace uacep {

namespace {

// Unit-interval LHS coordinates for one dimension.
std::vector<double> lhs_dimension(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> strata(static_cast<std::size_t>(n));
  std::iota(strata.begin(), strata.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(strata[static_cast<std::size_t>(i)], strata[static_cast<std::size_t>(j)]);
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = (strata[static_cast<std::size_t>(k)] + rng.uniform()) / n;
  return out;
}

double affine(const Interval& range, double t) { return range.lo + (range.hi - range.lo) * t; }

}  // namespace

std::vector<ParamSample> lhs_sample(int n, const ParamRanges& ranges, std::uint64_t seed) {
  if (n < 1) throw ValidationError("lhs_sample: n must be >= 1");
  for (const auto* r : {&ranges.sigma_l, &ranges.ratio})
    if (!(r->hi > r->lo)) throw ValidationError("lhs_sample: invalid interval");
  if (!(ranges.sigma_l.lo > 0.0) || !(ranges.ratio.lo >= 1.0))
    throw ValidationError("lhs_sample: conductivity must be positive and ratio >= 1");

  const auto a = lhs_dimension(n, stream_seed(seed, 0));
  const auto b = lhs_dimension(n, stream_seed(seed, 1));
  std::vector<ParamSample> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    auto& s = out[static_cast<std::size_t>(k)];
    s.index = k;
    s.sigma_l = affine(ranges.sigma_l, a[static_cast<std::size_t>(k)]);
    s.ratio = affine(ranges.ratio, b[static_cast<std::size_t>(k)]);
    s.sigma_t = s.sigma_l / s.ratio;
    s.seed = seed;
  }
  return out;
}

int stratum_of(double value, const Interval& range, int n) {
  const double t = (value - range.lo) / (range.hi - range.lo);
  return std::clamp(static_cast<int>(std::floor(t * n)), 0, n - 1);
}

bool is_stratified(const std::vector<ParamSample>& samples, const ParamRanges& ranges) {
  const int n = static_cast<int>(samples.size());
  if (n == 0) return false;
  std::vector<int> count_l(static_cast<std::size_t>(n), 0), count_r(static_cast<std::size_t>(n), 0);
  for (const auto& s : samples) {
    if (s.sigma_l < ranges.sigma_l.lo || s.sigma_l > ranges.sigma_l.hi) return false;
    if (s.ratio < ranges.ratio.lo || s.ratio > ranges.ratio.hi) return false;
    ++count_l[static_cast<std::size_t>(stratum_of(s.sigma_l, ranges.sigma_l, n))];
    ++count_r[static_cast<std::size_t>(stratum_of(s.ratio, ranges.ratio, n))];
  }
  return std::all_of(count_l.begin(), count_l.end(), [](int c) { return c == 1; }) &&
         std::all_of(count_r.begin(), count_r.end(), [](int c) { return c == 1; });
}

std::string params_csv_text(const std::vector<ParamSample>& samples) {
  std::string text = "index,sigma_l,ratio,sigma_t\n";
  char line[160];
  for (const auto& s : samples) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", s.index, s.sigma_l, s.ratio, s.sigma_t);
    text += line;
  }
  return text;
}

void write_params_csv(const std::vector<ParamSample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << params_csv_text(samples);
  if (!out) throw RuntimeFailure("write failed for " + path.string());
}

std::vector<ParamSample> read_params_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,sigma_l,ratio,sigma_t", 0) != 0)
    throw ParseError(path.string() + ": missing header 'index,sigma_l,ratio,sigma_t'");
  std::vector<ParamSample> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    ParamSample s;
    std::istringstream fields(line);
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(fields >> s.index >> c1 >> s.sigma_l >> c2 >> s.ratio >> c3 >> s.sigma_t) || c1 != ',' || c2 != ',' ||
        c3 != ',')
      throw ParseError(path.string() + ": malformed row " + std::to_string(row));
    out.push_back(s);
  }
  return out;
}

}  // namespace uacep
