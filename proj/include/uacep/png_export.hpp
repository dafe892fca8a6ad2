#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uacep/grid.hpp"
#include "uacep/latd.hpp"

namespace uacep {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // RGB, row-major, top row first

  RgbImage(int w, int h, std::uint8_t fill = 255);
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

void write_png(const std::filesystem::path& path, const RgbImage& image);

// Viridis lookup for t in [0,1].
std::array<std::uint8_t, 3> viridis(double t);

// Draws text with a 3x5 bitmap font scaled by `scale`. Unknown glyphs render blank.
void draw_text(RgbImage& image, int x, int y, const std::string& text, int scale = 2);

// One panel per channel (row beta = 0 at the bottom), each annotated with its
// name and value range. Cells equal to `sentinel` are drawn grey.
RgbImage render_panels(const std::vector<const GridField*>& grids, int cell_px = 4, int columns = 4,
                       float sentinel = -1.0f);

// Target LAT map followed by the ten input channels.
void export_record_png(const SampleRecord& record, const std::filesystem::path& path);

}  // namespace uacep
