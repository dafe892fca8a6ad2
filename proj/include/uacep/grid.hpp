#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uacep {

inline constexpr int kGridRes = 50;

// Channel-major C x H x W float32 field over the unit square. Row i samples
// beta = (i + 0.5) / H, column j samples alpha = (j + 0.5) / W.
struct GridField {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;
  std::vector<std::string> channel_names;
  std::vector<std::uint8_t> mask;  // H x W, 1 where the cell centre is covered by a triangle

  static GridField zeros(int channels, int height, int width, std::vector<std::string> names = {});

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  std::size_t index(int c, int i, int j) const {
    return static_cast<std::size_t>(c) * plane_size() + static_cast<std::size_t>(i) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(j);
  }
  float& operator()(int c, int i, int j) { return data[index(c, i, j)]; }
  float operator()(int c, int i, int j) const { return data[index(c, i, j)]; }

  std::span<float> channel(int c) { return {data.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()}; }
  std::span<const float> channel(int c) const {
    return {data.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }

  // Single channel copy, mask preserved.
  GridField extract(int c) const;
  // Throws ValidationError when an invariant is violated.
  void check() const;
};

}  // namespace uacep
