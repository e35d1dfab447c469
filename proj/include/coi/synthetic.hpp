#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "coi/raster.hpp"
#include "coi/registration.hpp"

namespace coi::synthetic {

// Smooth, non-symmetric test scene: a gentle ramp plus a dozen Gaussian blobs of random
// position, width and sign.
inline GrayImage smooth_scene(int width, int height, std::uint64_t seed, int blobs = 12) {
  SearchRng rng(seed);
  struct Blob {
    double x, y, sigma, amplitude;
  };
  std::vector<Blob> bs;
  const double extent = std::max(width, height);
  for (int i = 0; i < blobs; ++i) {
    bs.push_back({rng.uniform01() * width, rng.uniform01() * height,
                  extent * (0.03 + rng.uniform01() * 0.12), rng.symmetric(1.0)});
  }
  GrayImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = 0.5 + 0.15 * x / width;
      for (const Blob& b : bs) {
        const double d2 = ((x - b.x) * (x - b.x) + (y - b.y) * (y - b.y)) / (2.0 * b.sigma * b.sigma);
        v += 0.35 * b.amplitude * std::exp(-d2);
      }
      img.at(x, y) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

// Filled axis-aligned rectangle [x0,x1) x [y0,y1) of constant intensity.
inline void paint_rect(GrayImage& img, int x0, int y0, int x1, int y1, double value) {
  for (int y = std::max(0, y0); y < std::min(img.height, y1); ++y) {
    for (int x = std::max(0, x0); x < std::min(img.width, x1); ++x) img.at(x, y) = value;
  }
}

inline RgbImage to_rgb(const GrayImage& g) {
  RgbImage out(g.width, g.height);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::uint8_t v = to_byte(g.data[i]);
    out.data[i] = {v, v, v};
  }
  return out;
}

}  // namespace coi::synthetic
