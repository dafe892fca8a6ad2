#include "uacep/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "uacep/ep_solver.hpp"
#include "uacep/error.hpp"

namespace uacep::metrics {

namespace {

void require_single(const GridField& g, const char* what) {
  if (g.channels < 1 || g.data.size() < g.plane_size()) throw ValidationError(std::string(what) + ": empty grid");
}

void require_same_shape(const GridField& u, const GridField& v, const char* what) {
  require_single(u, what);
  require_single(v, what);
  if (u.height != v.height || u.width != v.width) throw ValidationError(std::string(what) + ": grid shapes differ");
}

double at(const GridField& g, int i, int j) { return static_cast<double>(g(0, i, j)); }

}  // namespace

double mae(const GridField& u, const GridField& v, const std::vector<std::uint8_t>& mask) {
  require_same_shape(u, v, "mae");
  if (!mask.empty() && mask.size() != u.plane_size()) throw ValidationError("mae: mask shape differs");
  double sum = 0.0;
  std::size_t count = 0;
  for (int i = 0; i < u.height; ++i)
    for (int j = 0; j < u.width; ++j) {
      const auto k = static_cast<std::size_t>(i * u.width + j);
      if (!mask.empty() && !mask[k]) continue;
      sum += std::abs(at(u, i, j) - at(v, i, j));
      ++count;
    }
  if (count == 0) throw ValidationError("mae: empty mask");
  return sum / static_cast<double>(count);
}

std::vector<double> ssim_window(int window, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(window));
  const double c = 0.5 * (window - 1);
  double sum = 0.0;
  for (int k = 0; k < window; ++k) {
    g[static_cast<std::size_t>(k)] = std::exp(-(k - c) * (k - c) / (2.0 * sigma * sigma));
    sum += g[static_cast<std::size_t>(k)];
  }
  for (auto& x : g) x /= sum;
  std::vector<double> w(static_cast<std::size_t>(window * window));
  for (int a = 0; a < window; ++a)
    for (int b = 0; b < window; ++b)
      w[static_cast<std::size_t>(a * window + b)] = g[static_cast<std::size_t>(a)] * g[static_cast<std::size_t>(b)];
  return w;
}

double ssim(const GridField& u, const GridField& v, const SsimParams& params) {
  require_same_shape(u, v, "ssim");
  const int win = params.window;
  if (win < 1 || !(params.gaussian_sigma > 0.0)) throw ValidationError("ssim: invalid window parameters");
  if (u.height < win || u.width < win) throw ValidationError("ssim: grid smaller than the window");

  double range = 0.0;
  if (params.dynamic_range) {
    range = *params.dynamic_range;
  } else {
    const auto [lo, hi] = std::minmax_element(v.data.begin(), v.data.begin() + static_cast<long>(v.plane_size()));
    range = std::max(static_cast<double>(*hi) - static_cast<double>(*lo), kMinDynamicRange);
  }
  const double c1 = (params.k1 * range) * (params.k1 * range);
  const double c2 = (params.k2 * range) * (params.k2 * range);

  // Separable Gaussian filtering (valid mode) of u, v, u^2, v^2, uv.
  std::vector<double> g(static_cast<std::size_t>(win));
  {
    const double c = 0.5 * (win - 1);
    double sum = 0.0;
    for (int k = 0; k < win; ++k) sum += g[static_cast<std::size_t>(k)] = std::exp(-(k - c) * (k - c) /
                                                                                  (2.0 * params.gaussian_sigma *
                                                                                   params.gaussian_sigma));
    for (auto& x : g) x /= sum;
  }
  const int H = u.height, W = u.width;
  const int oh = H - win + 1, ow = W - win + 1;
  constexpr int kMaps = 5;
  std::vector<double> rows(static_cast<std::size_t>(kMaps * H * ow), 0.0);
  auto row_at = [&](int m, int i, int j) -> double& {
    return rows[static_cast<std::size_t>((m * H + i) * ow + j)];
  };
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < ow; ++j) {
      double s[kMaps] = {0, 0, 0, 0, 0};
      for (int k = 0; k < win; ++k) {
        const double a = at(u, i, j + k), b = at(v, i, j + k), w = g[static_cast<std::size_t>(k)];
        s[0] += w * a;
        s[1] += w * b;
        s[2] += w * a * a;
        s[3] += w * b * b;
        s[4] += w * (a * b);
      }
      for (int m = 0; m < kMaps; ++m) row_at(m, i, j) = s[m];
    }

  double total = 0.0;
  for (int i = 0; i < oh; ++i)
    for (int j = 0; j < ow; ++j) {
      double s[kMaps] = {0, 0, 0, 0, 0};
      for (int k = 0; k < win; ++k)
        for (int m = 0; m < kMaps; ++m) s[m] += g[static_cast<std::size_t>(k)] * row_at(m, i + k, j);
      const double mu_u = s[0], mu_v = s[1];
      const double var_u = s[2] - mu_u * mu_u;
      const double var_v = s[3] - mu_v * mu_v;
      const double cov = s[4] - mu_u * mu_v;
      total += ((2.0 * (mu_u * mu_v) + c1) * (2.0 * cov + c2)) /
               ((mu_u * mu_u + mu_v * mu_v + c1) * (var_u + var_v + c2));
    }
  return total / static_cast<double>(oh * ow);
}

double h1_relative(const GridField& u, const GridField& v) {
  require_same_shape(u, v, "h1_relative");
  double diff = 0.0, ref = 0.0;
  const int H = u.height, W = u.width;
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      const double d = at(u, i, j) - at(v, i, j);
      diff += d * d;
      ref += at(v, i, j) * at(v, i, j);
      if (j + 1 < W) {
        const double gu = at(u, i, j + 1) - at(u, i, j), gv = at(v, i, j + 1) - at(v, i, j);
        diff += (gu - gv) * (gu - gv);
        ref += gv * gv;
      }
      if (i + 1 < H) {
        const double gu = at(u, i + 1, j) - at(u, i, j), gv = at(v, i + 1, j) - at(v, i, j);
        diff += (gu - gv) * (gu - gv);
        ref += gv * gv;
      }
    }
  return std::sqrt(diff) / std::sqrt(ref + kH1Epsilon);
}

double tv(const GridField& u) {
  require_single(u, "tv");
  double sum = 0.0;
  for (int i = 0; i < u.height; ++i)
    for (int j = 0; j < u.width; ++j) {
      if (j + 1 < u.width) sum += std::abs(at(u, i, j + 1) - at(u, i, j));
      if (i + 1 < u.height) sum += std::abs(at(u, i + 1, j) - at(u, i, j));
    }
  return sum / static_cast<double>(u.height * u.width);
}

double laplacian_loss(const GridField& u) {
  require_single(u, "laplacian_loss");
  if (u.height < 3 || u.width < 3) throw ValidationError("laplacian_loss: grid smaller than 3x3");
  double sum = 0.0;
  for (int i = 1; i + 1 < u.height; ++i)
    for (int j = 1; j + 1 < u.width; ++j) {
      const double lap = at(u, i + 1, j) + at(u, i - 1, j) + at(u, i, j + 1) + at(u, i, j - 1) - 4.0 * at(u, i, j);
      sum += lap * lap;
    }
  return sum / static_cast<double>((u.height - 2) * (u.width - 2));
}

GridField normalize_by_reference(const GridField& u, const GridField& v) {
  require_same_shape(u, v, "normalize");
  const auto plane = static_cast<long>(v.plane_size());
  const auto [lo, hi] = std::minmax_element(v.data.begin(), v.data.begin() + plane);
  const double base = *lo;
  const double range = std::max(static_cast<double>(*hi) - base, kNormalizeFloor);
  GridField out = u.extract(0);
  for (auto& x : out.data) x = static_cast<float>((static_cast<double>(x) - base) / range);
  return out;
}

double total_loss(const GridField& u, const GridField& v, double lambda) {
  if (!(lambda >= 0.0)) throw ValidationError("total_loss: lambda must be non-negative");
  const double h1 = h1_relative(u, v);
  if (lambda == 0.0) return h1;
  const GridField un = normalize_by_reference(u, v);
  return h1 + lambda * (tv(un) + laplacian_loss(un));
}

std::string MetricReport::to_json() const {
  const nlohmann::json j = {{"mae", mae},         {"ssim", ssim},     {"h1_rel", h1_rel},
                            {"tv", tv},           {"laplacian", laplacian}, {"total_loss", total_loss},
                            {"lambda", lambda}};
  return j.dump();
}

MetricReport evaluate(const GridField& prediction, const GridField& truth, double lambda, const SsimParams& params) {
  require_same_shape(prediction, truth, "evaluate");
  std::vector<std::uint8_t> mask(truth.plane_size(), 1);
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (truth.data[k] == kUnactivatedSerialized) mask[k] = 0;
  MetricReport r;
  r.lambda = lambda;
  r.mae = mae(prediction, truth, mask);
  r.ssim = ssim(prediction, truth, params);
  r.h1_rel = h1_relative(prediction, truth);
  r.tv = tv(prediction);
  r.laplacian = laplacian_loss(prediction);
  r.total_loss = total_loss(prediction, truth, lambda);
  return r;
}

}  // namespace uacep::metrics
