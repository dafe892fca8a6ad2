#include "uacep/grid.hpp"

#include <cmath>

#include "uacep/error.hpp"

namespace uacep {

GridField GridField::zeros(int channels, int height, int width, std::vector<std::string> names) {
  if (channels < 1 || height < 1 || width < 1) throw ValidationError("grid dimensions must be positive");
  GridField g;
  g.channels = channels;
  g.height = height;
  g.width = width;
  g.data.assign(static_cast<std::size_t>(channels) * g.plane_size(), 0.0f);
  g.mask.assign(g.plane_size(), 1);
  if (names.empty())
    for (int c = 0; c < channels; ++c) names.push_back("c" + std::to_string(c));
  g.channel_names = std::move(names);
  return g;
}

GridField GridField::extract(int c) const {
  if (c < 0 || c >= channels) throw ValidationError("channel index out of range");
  GridField g = zeros(1, height, width, {channel_names[static_cast<std::size_t>(c)]});
  const auto src = channel(c);
  std::copy(src.begin(), src.end(), g.data.begin());
  g.mask = mask;
  return g;
}

void GridField::check() const {
  if (static_cast<int>(channel_names.size()) != channels)
    throw ValidationError("grid: channel name count does not match channel count");
  if (data.size() != static_cast<std::size_t>(channels) * plane_size()) throw ValidationError("grid: data size mismatch");
  if (mask.size() != plane_size()) throw ValidationError("grid: mask size mismatch");
  for (int c = 0; c < channels; ++c)
    for (std::size_t k = 0; k < plane_size(); ++k)
      if (mask[k] && !std::isfinite(data[static_cast<std::size_t>(c) * plane_size() + k]))
        throw ValidationError("grid: non-finite value in covered cell");
}

}  // namespace uacep
