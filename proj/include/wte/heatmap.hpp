#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wte/io.hpp"

namespace wte {

struct HeatmapOptions {
  std::size_t cell_size = 32;
  // Normalisation range; when unset the min/max of the unmasked cells is
  // used (all cells when there is no mask).
  std::optional<double> vmin;
  std::optional<double> vmax;
};

namespace detail {

struct Rgb {
  std::uint8_t r, g, b;
};

// Fixed ramp: dark blue floor for masked cells; unmasked values sweep
// blue -> cyan -> yellow -> red. Pure integer rounding keeps images
// byte-reproducible.
inline Rgb ramp_color(double t) {
  struct Anchor {
    double pos;
    double r, g, b;
  };
  static const Anchor anchors[] = {{0.0, 0.0, 0.0, 255.0},
                                   {1.0 / 3.0, 0.0, 255.0, 255.0},
                                   {2.0 / 3.0, 255.0, 255.0, 0.0},
                                   {1.0, 255.0, 0.0, 0.0}};
  t = std::clamp(t, 0.0, 1.0);
  for (std::size_t i = 1; i < 4; ++i) {
    if (t <= anchors[i].pos) {
      const auto& a = anchors[i - 1];
      const auto& b = anchors[i];
      const double f = (t - a.pos) / (b.pos - a.pos);
      return {static_cast<std::uint8_t>(std::lround(a.r + f * (b.r - a.r))),
              static_cast<std::uint8_t>(std::lround(a.g + f * (b.g - a.g))),
              static_cast<std::uint8_t>(std::lround(a.b + f * (b.b - a.b)))};
    }
  }
  return {255, 0, 0};
}

constexpr Rgb kFloorColor{8, 8, 64};

}  // namespace detail

// Renders a labelled matrix as a binary portable pixmap. Cells where the
// significance mask is false are painted the floor colour (the convention
// for non-significant values); row/column labels and the colour scale go to
// a sidecar text file next to the image.
inline void render_heatmap(const std::vector<std::vector<double>>& values,
                           const std::vector<std::vector<bool>>* significant,
                           const std::vector<std::string>& row_labels,
                           const std::vector<std::string>& col_labels,
                           const std::filesystem::path& path,
                           const HeatmapOptions& options = {}) {
  const std::size_t rows = values.size();
  if (rows == 0 || values[0].empty())
    throw std::invalid_argument("render_heatmap: empty matrix");
  const std::size_t cols = values[0].size();
  if (row_labels.size() != rows || col_labels.size() != cols)
    throw std::invalid_argument("render_heatmap: label count mismatch");
  for (const auto& row : values) {
    if (row.size() != cols)
      throw std::invalid_argument("render_heatmap: ragged matrix");
    for (double v : row)
      if (!std::isfinite(v))
        throw std::invalid_argument("render_heatmap: non-finite value");
  }
  if (significant &&
      (significant->size() != rows || (*significant)[0].size() != cols))
    throw std::invalid_argument("render_heatmap: mask shape mismatch");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (significant && !(*significant)[r][c]) continue;
      lo = std::min(lo, values[r][c]);
      hi = std::max(hi, values[r][c]);
    }
  if (options.vmin) lo = *options.vmin;
  if (options.vmax) hi = *options.vmax;
  const bool any_unmasked = std::isfinite(lo);

  const std::size_t cell = options.cell_size;
  const std::size_t width = cols * cell;
  const std::size_t height = rows * cell;
  std::vector<std::uint8_t> pixels(width * height * 3);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      detail::Rgb color = detail::kFloorColor;
      if (!significant || (*significant)[r][c]) {
        double t = 1.0;
        if (any_unmasked && hi > lo) t = (values[r][c] - lo) / (hi - lo);
        color = detail::ramp_color(t);
      }
      for (std::size_t py = 0; py < cell; ++py) {
        const std::size_t y = r * cell + py;
        for (std::size_t px = 0; px < cell; ++px) {
          const std::size_t x = c * cell + px;
          const std::size_t off = (y * width + x) * 3;
          pixels[off] = color.r;
          pixels[off + 1] = color.g;
          pixels[off + 2] = color.b;
        }
      }
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("render_heatmap: cannot open " + path.string());
  out << "P6\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw std::runtime_error("render_heatmap: write failed");
  out.close();

  std::ofstream side(path.string() + ".labels.txt");
  if (!side)
    throw std::runtime_error("render_heatmap: cannot open label sidecar");
  side << "rows:";
  for (const auto& l : row_labels) side << ' ' << l;
  side << "\ncols:";
  for (const auto& l : col_labels) side << ' ' << l;
  side << "\nscale_min: " << (any_unmasked ? format_double(lo) : "none")
       << "\nscale_max: " << (any_unmasked ? format_double(hi) : "none")
       << "\nfloor: non-significant cells\n";
  if (!side) throw std::runtime_error("render_heatmap: sidecar write failed");
}

}  // namespace wte
