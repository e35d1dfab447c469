#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace coi {

// Row-major 2-D raster. Element (x, y) lives at data[y * width + x].
template <typename T>
struct Raster {
  using value_type = T;

  int width = 0;
  int height = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, T fill = T{}) : width(w), height(h) {
    if (w <= 0 || h <= 0) {
      throw std::invalid_argument("raster dimensions must be positive, got " +
                                  std::to_string(w) + "x" + std::to_string(h));
    }
    data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
  }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  T& at(int x, int y) {
    assert(contains(x, y));
    return data[static_cast<std::size_t>(y) * width + x];
  }
  const T& at(int x, int y) const {
    assert(contains(x, y));
    return data[static_cast<std::size_t>(y) * width + x];
  }

  // Replicated-edge read.
  const T& clamped(int x, int y) const {
    return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
  }

  bool same_shape(const Raster& o) const { return width == o.width && height == o.height; }
  template <typename U>
  bool same_shape(const Raster<U>& o) const {
    return width == o.width && height == o.height;
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

// Intensities in [0,1].
using GrayImage = Raster<double>;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using RgbImage = Raster<Rgb>;

template <typename T, typename U>
void require_same_shape(const Raster<T>& a, const Raster<U>& b, const char* what) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                                std::to_string(b.width) + "x" + std::to_string(b.height) + ")");
  }
}

inline bool is_valid_gray(const GrayImage& img) {
  if (img.width <= 0 || img.height <= 0) return false;
  if (img.size() != static_cast<std::size_t>(img.width) * img.height) return false;
  return std::all_of(img.data.begin(), img.data.end(),
                     [](double v) { return v >= 0.0 && v <= 1.0; });
}

// BT.601 luma. The integer numerator keeps (g,g,g) -> g/255 exact.
inline double luma(Rgb px) {
  const int weighted = 299 * px.r + 587 * px.g + 114 * px.b;
  return static_cast<double>(weighted) / 255000.0;
}

inline GrayImage to_grayscale(const RgbImage& img) {
  GrayImage out(img.width, img.height);
  std::transform(img.data.begin(), img.data.end(), out.data.begin(), luma);
  return out;
}

// One channel (0=R, 1=G, 2=B) scaled to [0,1].
inline GrayImage channel(const RgbImage& img, int c) {
  GrayImage out(img.width, img.height);
  std::transform(img.data.begin(), img.data.end(), out.data.begin(), [c](Rgb px) {
    const std::uint8_t v = c == 0 ? px.r : (c == 1 ? px.g : px.b);
    return v / 255.0;
  });
  return out;
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Snap to the 8-bit grid, i.e. what a save/load cycle through PNG or PGM yields.
inline GrayImage quantize_8bit(const GrayImage& img) {
  GrayImage out = img;
  for (double& v : out.data) v = to_byte(v) / 255.0;
  return out;
}

namespace detail {

struct AxisSample {
  int i0;
  int i1;
  double frac;
};

// Pixel-centre aligned source coordinate for each output index, clamped to the border.
inline std::vector<AxisSample> axis_samples(int in_len, int out_len) {
  std::vector<AxisSample> s(static_cast<std::size_t>(out_len));
  const double scale = static_cast<double>(in_len) / out_len;
  for (int k = 0; k < out_len; ++k) {
    double src = (k + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_len - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in_len - 1);
    s[static_cast<std::size_t>(k)] = {i0, i1, src - i0};
  }
  return s;
}

}  // namespace detail

template <typename T>
Raster<T> resize_bilinear(const Raster<T>& img, int new_width, int new_height) {
  if (new_width <= 0 || new_height <= 0) {
    throw std::invalid_argument("resize_bilinear: target dimensions must be positive, got " +
                                std::to_string(new_width) + "x" + std::to_string(new_height));
  }
  if (new_width == img.width && new_height == img.height) return img;

  const auto xs = detail::axis_samples(img.width, new_width);
  const auto ys = detail::axis_samples(img.height, new_height);
  Raster<T> out(new_width, new_height);
  for (int y = 0; y < new_height; ++y) {
    const auto& sy = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < new_width; ++x) {
      const auto& sx = xs[static_cast<std::size_t>(x)];
      const double top = std::lerp(static_cast<double>(img.at(sx.i0, sy.i0)),
                                   static_cast<double>(img.at(sx.i1, sy.i0)), sx.frac);
      const double bottom = std::lerp(static_cast<double>(img.at(sx.i0, sy.i1)),
                                      static_cast<double>(img.at(sx.i1, sy.i1)), sx.frac);
      out.at(x, y) = static_cast<T>(std::lerp(top, bottom, sy.frac));
    }
  }
  return out;
}

// Dimensions with the long side set to `long_side`, short side rounded, aspect preserved.
inline std::pair<int, int> fit_long_side(int width, int height, int long_side) {
  if (long_side <= 0) throw std::invalid_argument("fit_long_side: long side must be positive");
  if (width >= height) {
    const int h = static_cast<int>(std::lround(static_cast<double>(height) * long_side / width));
    return {long_side, std::max(1, h)};
  }
  const int w = static_cast<int>(std::lround(static_cast<double>(width) * long_side / height));
  return {std::max(1, w), long_side};
}

inline std::pair<double, double> min_max(const GrayImage& img) {
  const auto [lo, hi] = std::minmax_element(img.data.begin(), img.data.end());
  return {*lo, *hi};
}

}  // namespace coi
