#include "uacep/png_export.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "uacep/error.hpp"

namespace uacep {

RgbImage::RgbImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill) {}

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  auto* p = &pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3];
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw RuntimeFailure("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw RuntimeFailure("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw RuntimeFailure("PNG encoding failed for " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    png_write_row(png, image.pixels.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width) * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::array<std::uint8_t, 3> viridis(double t) {
  static constexpr std::uint8_t kAnchors[9][3] = {{68, 1, 84},    {71, 44, 122},  {59, 81, 139},
                                                  {44, 113, 142}, {33, 144, 141}, {39, 173, 129},
                                                  {92, 200, 99},  {170, 220, 50}, {253, 231, 37}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * 8.0;
  const int k = std::min(static_cast<int>(t), 7);
  const double f = t - k;
  std::array<std::uint8_t, 3> rgb{};
  for (int c = 0; c < 3; ++c)
    rgb[static_cast<std::size_t>(c)] =
        static_cast<std::uint8_t>(std::lround(kAnchors[k][c] + f * (kAnchors[k + 1][c] - kAnchors[k][c])));
  return rgb;
}

namespace {

// 3x5 glyphs, one 3-bit row mask per line (4 = left column).
const std::uint8_t* glyph(char ch) {
  static constexpr std::uint8_t kDigits[10][5] = {{7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7},
                                                  {5, 5, 7, 1, 1}, {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1},
                                                  {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7}};
  static constexpr std::uint8_t kLetters[26][5] = {
      {2, 5, 7, 5, 5}, {6, 5, 6, 5, 6}, {7, 4, 4, 4, 7}, {6, 5, 5, 5, 6}, {7, 4, 6, 4, 7}, {7, 4, 6, 4, 4},
      {7, 4, 5, 5, 7}, {5, 5, 7, 5, 5}, {7, 2, 2, 2, 7}, {1, 1, 1, 5, 7}, {5, 5, 6, 5, 5}, {4, 4, 4, 4, 7},
      {5, 7, 7, 5, 5}, {6, 5, 5, 5, 5}, {2, 5, 5, 5, 2}, {6, 5, 6, 4, 4}, {2, 5, 5, 6, 3}, {6, 5, 6, 5, 5},
      {7, 4, 7, 1, 7}, {7, 2, 2, 2, 2}, {5, 5, 5, 5, 7}, {5, 5, 5, 5, 2}, {5, 5, 7, 7, 5}, {5, 5, 2, 5, 5},
      {5, 5, 2, 2, 2}, {7, 1, 2, 4, 7}};
  static constexpr std::uint8_t kDot[5] = {0, 0, 0, 0, 2};
  static constexpr std::uint8_t kMinus[5] = {0, 0, 7, 0, 0};
  static constexpr std::uint8_t kPlus[5] = {0, 2, 7, 2, 0};
  static constexpr std::uint8_t kUnderscore[5] = {0, 0, 0, 0, 7};
  static constexpr std::uint8_t kColon[5] = {0, 2, 0, 2, 0};
  static constexpr std::uint8_t kEquals[5] = {0, 7, 0, 7, 0};
  if (ch >= '0' && ch <= '9') return kDigits[ch - '0'];
  if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  if (ch >= 'a' && ch <= 'z') return kLetters[ch - 'a'];
  switch (ch) {
    case '.': return kDot;
    case '-': return kMinus;
    case '+': return kPlus;
    case '_': return kUnderscore;
    case ':': return kColon;
    case '=': return kEquals;
    default: return nullptr;
  }
}

std::string format_value(double v) {
  char buf[32];
  if (std::abs(v) >= 1e4 || (v != 0.0 && std::abs(v) < 1e-2))
    std::snprintf(buf, sizeof buf, "%.2e", v);
  else
    std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

void draw_text(RgbImage& image, int x, int y, const std::string& text, int scale) {
  for (std::size_t k = 0; k < text.size(); ++k) {
    const std::uint8_t* g = glyph(text[k]);
    if (!g) continue;
    const int gx = x + static_cast<int>(k) * 4 * scale;
    for (int row = 0; row < 5; ++row)
      for (int col = 0; col < 3; ++col) {
        if (!(g[row] & (4 >> col))) continue;
        for (int sy = 0; sy < scale; ++sy)
          for (int sx = 0; sx < scale; ++sx) image.set(gx + col * scale + sx, y + row * scale + sy, 0, 0, 0);
      }
  }
}

RgbImage render_panels(const std::vector<const GridField*>& grids, int cell_px, int columns, float sentinel) {
  if (grids.empty()) throw ValidationError("render_panels: nothing to draw");
  const int res_h = grids.front()->height, res_w = grids.front()->width;
  const int margin = 6, label_h = 28;
  const int panel_w = res_w * cell_px, panel_h = res_h * cell_px;
  const int cols = std::min<int>(columns, static_cast<int>(grids.size()));
  const int rows = (static_cast<int>(grids.size()) + cols - 1) / cols;
  RgbImage img(cols * (panel_w + 2 * margin), rows * (panel_h + label_h + 2 * margin));

  for (std::size_t p = 0; p < grids.size(); ++p) {
    const GridField& g = *grids[p];
    if (g.height != res_h || g.width != res_w) throw ValidationError("render_panels: grids differ in shape");
    const int ox = static_cast<int>(p % static_cast<std::size_t>(cols)) * (panel_w + 2 * margin) + margin;
    const int oy = static_cast<int>(p / static_cast<std::size_t>(cols)) * (panel_h + label_h + 2 * margin) + margin;
    double lo = INFINITY, hi = -INFINITY;
    for (float x : g.channel(0))
      if (x != sentinel && std::isfinite(x)) {
        lo = std::min(lo, static_cast<double>(x));
        hi = std::max(hi, static_cast<double>(x));
      }
    if (!std::isfinite(lo)) lo = hi = 0.0;
    const double span = hi > lo ? hi - lo : 1.0;
    for (int i = 0; i < res_h; ++i)
      for (int j = 0; j < res_w; ++j) {
        const float x = g(0, i, j);
        std::array<std::uint8_t, 3> rgb = {160, 160, 160};
        if (x != sentinel && std::isfinite(x)) rgb = viridis((x - lo) / span);
        const int py = oy + (res_h - 1 - i) * cell_px;  // beta grows upwards
        for (int dy = 0; dy < cell_px; ++dy)
          for (int dx = 0; dx < cell_px; ++dx) img.set(ox + j * cell_px + dx, py + dy, rgb[0], rgb[1], rgb[2]);
      }
    const std::string name = g.channel_names.empty() ? "" : g.channel_names.front();
    draw_text(img, ox, oy + panel_h + 3, name, 2);
    draw_text(img, ox, oy + panel_h + 16, "min " + format_value(lo) + " max " + format_value(hi), 2);
  }
  return img;
}

void export_record_png(const SampleRecord& record, const std::filesystem::path& path) {
  std::vector<GridField> planes;
  planes.reserve(1 + static_cast<std::size_t>(record.input.channels));
  planes.push_back(record.target.extract(0));
  planes.back().channel_names = {"lat ms"};
  for (int c = 0; c < record.input.channels; ++c) planes.push_back(record.input.extract(c));
  std::vector<const GridField*> ptrs;
  for (const auto& g : planes) ptrs.push_back(&g);
  write_png(path, render_panels(ptrs));
}

}  // namespace uacep
