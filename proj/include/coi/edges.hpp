#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "coi/image_io.hpp"
#include "coi/raster.hpp"

namespace coi {

// Signed derivative rasters.
struct GradientPair {
  Raster<double> gx;
  Raster<double> gy;
};

// Edge strengths in [0,1], max 1 unless identically zero.
using EdgeMap = Raster<double>;
// Values exactly 0 or 1.
using BinaryEdgeMap = Raster<std::uint8_t>;

// 3x3 Sobel kernels, indexed [row][col]. Applied as cross-correlation, no flip.
inline constexpr std::array<std::array<int, 3>, 3> kSobelX = {{{1, 0, -1}, {2, 0, -2}, {1, 0, -1}}};
inline constexpr std::array<std::array<int, 3>, 3> kSobelY = {{{1, 2, 1}, {0, 0, 0}, {-1, -2, -1}}};
static_assert(kSobelX[0][0] == -kSobelX[0][2] && kSobelX[1][0] == -kSobelX[1][2] && kSobelX[1][1] == 0,
              "sobel_gradients assumes antisymmetric kernels");
static_assert(kSobelY[0][0] == -kSobelY[2][0] && kSobelY[0][1] == -kSobelY[2][1] && kSobelY[1][1] == 0,
              "sobel_gradients assumes antisymmetric kernels");

inline GradientPair sobel_gradients(const GrayImage& img) {
  if (img.width < 3 || img.height < 3) {
    throw std::invalid_argument("sobel_gradients: image must be at least 3x3, got " +
                                std::to_string(img.width) + "x" + std::to_string(img.height));
  }
  GradientPair g{Raster<double>(img.width, img.height), Raster<double>(img.width, img.height)};
  // Evaluated as (weighted column/row on the + side) - (same on the - side), each weighted
  // sum as (outer + outer) + 2 * centre. Identical columns then cancel exactly.
  auto weighted = [](const std::array<int, 3>& k, double a, double b, double c) {
    return (k[0] * a + k[2] * c) + k[1] * b;
  };
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      auto v = [&](int c, int r) { return img.clamped(x + c - 1, y + r - 1); };
      const std::array<int, 3> col{kSobelX[0][0], kSobelX[1][0], kSobelX[2][0]};
      const double left = weighted(col, v(0, 0), v(0, 1), v(0, 2));
      const double right = weighted(col, v(2, 0), v(2, 1), v(2, 2));
      const double top = weighted(kSobelY[0], v(0, 0), v(1, 0), v(2, 0));
      const double bottom = weighted(kSobelY[0], v(0, 2), v(1, 2), v(2, 2));
      g.gx.at(x, y) = left - right;
      g.gy.at(x, y) = top - bottom;
    }
  }
  return g;
}

// Scales so the maximum is 1; an all-zero map is returned unchanged.
inline EdgeMap normalize_max(EdgeMap m) {
  double hi = 0.0;
  for (double v : m.data) hi = std::max(hi, v);
  if (hi > 0.0) {
    for (double& v : m.data) v /= hi;
  }
  return m;
}

inline EdgeMap gradient_magnitude(const GradientPair& g) {
  require_same_shape(g.gx, g.gy, "gradient_magnitude");
  EdgeMap m(g.gx.width, g.gx.height);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double gx = g.gx.data[i], gy = g.gy.data[i];
    m.data[i] = std::sqrt(gx * gx + gy * gy);
  }
  return normalize_max(std::move(m));
}

namespace detail {

// Neighbour offset for each of the 8 direction sectors, counter-clockwise from +x
// in pixel coordinates (y grows downwards).
inline constexpr std::array<std::array<int, 2>, 8> kSectorStep = {
    {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

inline int direction_sector(double gx, double gy) {
  const double angle = std::atan2(gy, gx);
  const int s = static_cast<int>(std::lround(angle / (std::numbers::pi / 4.0)));
  return ((s % 8) + 8) % 8;
}

}  // namespace detail

inline constexpr double kNmsFloor = 1e-6;

// Keeps a pixel iff it is >= its leading neighbour and > its trailing neighbour along
// the quantized (gx, gy) direction. Neighbours outside the image count as 0.
inline EdgeMap non_max_suppression(const EdgeMap& mag, const GradientPair& g) {
  require_same_shape(mag, g.gx, "non_max_suppression");
  require_same_shape(mag, g.gy, "non_max_suppression");
  EdgeMap out(mag.width, mag.height, 0.0);
  auto value = [&](int x, int y) { return mag.contains(x, y) ? mag.at(x, y) : 0.0; };
  for (int y = 0; y < mag.height; ++y) {
    for (int x = 0; x < mag.width; ++x) {
      const double m = mag.at(x, y);
      if (m < kNmsFloor) continue;
      const auto [dx, dy] = detail::kSectorStep[static_cast<std::size_t>(
          detail::direction_sector(g.gx.at(x, y), g.gy.at(x, y)))];
      if (m >= value(x + dx, y + dy) && m > value(x - dx, y - dy)) out.at(x, y) = m;
    }
  }
  return out;
}

// What a detector hands back: strengths plus the gradient field used to orient NMS.
struct EdgeResponse {
  EdgeMap strength;
  GradientPair orientation;
};

using EdgeDetector = std::function<EdgeResponse(const GrayImage&)>;

inline EdgeResponse sobel_detector(const GrayImage& img) {
  GradientPair g = sobel_gradients(img);
  EdgeMap m = gradient_magnitude(g);
  return {std::move(m), std::move(g)};
}

struct MultiscaleConfig {
  std::vector<double> scales{1.5, 1.0, 0.5};
  int target_long_side = 1000;
  // When false, NMS runs once on the averaged map instead of on every scale.
  bool nms_per_scale = true;

  void validate() const {
    if (scales.empty()) throw std::invalid_argument("multiscale: scales must be non-empty");
    for (double s : scales) {
      if (!(s > 0.0)) throw std::invalid_argument("multiscale: every scale must be > 0");
    }
    if (target_long_side <= 0) {
      throw std::invalid_argument("multiscale: target_long_side must be positive");
    }
  }
};

// Runs `detector` at every scale, resizes each result to the target frame, averages,
// and renormalizes to max 1.
inline EdgeMap multiscale_edge_map(const GrayImage& img, const MultiscaleConfig& cfg,
                                   const EdgeDetector& detector = sobel_detector) {
  cfg.validate();
  const auto [tw, th] = fit_long_side(img.width, img.height, cfg.target_long_side);
  EdgeMap sum(tw, th, 0.0);
  for (double s : cfg.scales) {
    const int w = std::max(3, static_cast<int>(std::lround(img.width * s)));
    const int h = std::max(3, static_cast<int>(std::lround(img.height * s)));
    const EdgeResponse r = detector(resize_bilinear(img, w, h));
    EdgeMap m = cfg.nms_per_scale ? non_max_suppression(r.strength, r.orientation) : r.strength;
    m = normalize_max(resize_bilinear(m, tw, th));
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data[i] += m.data[i];
  }
  const double n = static_cast<double>(cfg.scales.size());
  for (double& v : sum.data) v /= n;
  if (!cfg.nms_per_scale) {
    const EdgeResponse at_target = detector(resize_bilinear(img, tw, th));
    sum = non_max_suppression(sum, at_target.orientation);
  }
  return normalize_max(std::move(sum));
}

struct FixedThreshold {
  double t;
};
struct OtsuThreshold {};
using BinarizeMethod = std::variant<FixedThreshold, OtsuThreshold>;

inline constexpr int kOtsuBins = 256;

inline int histogram_bin(double v) {
  return std::clamp(static_cast<int>(v * kOtsuBins), 0, kOtsuBins - 1);
}

// Otsu over a 256-bin histogram. Returns the last bin of the lower class, or -1 when no
// split has positive between-class variance. Near-ties resolve to the lowest bin.
inline int otsu_bin(const std::array<std::uint64_t, kOtsuBins>& hist) {
  double total = 0.0, weighted_total = 0.0;
  for (int i = 0; i < kOtsuBins; ++i) {
    total += static_cast<double>(hist[i]);
    weighted_total += static_cast<double>(i) * static_cast<double>(hist[i]);
  }
  if (total == 0.0) return -1;

  std::array<double, kOtsuBins> variance{};
  double n0 = 0.0, s0 = 0.0, best = 0.0;
  for (int k = 0; k < kOtsuBins - 1; ++k) {
    n0 += static_cast<double>(hist[k]);
    s0 += static_cast<double>(k) * static_cast<double>(hist[k]);
    const double n1 = total - n0;
    if (n0 == 0.0 || n1 == 0.0) continue;
    const double diff = s0 / n0 - (weighted_total - s0) / n1;
    variance[k] = n0 * n1 * diff * diff;
    best = std::max(best, variance[k]);
  }
  if (best <= 0.0) return -1;
  for (int k = 0; k < kOtsuBins - 1; ++k) {
    if (variance[k] >= best * (1.0 - 1e-12)) return k;
  }
  return -1;
}

inline BinaryEdgeMap binarize(const EdgeMap& edge, const BinarizeMethod& method = OtsuThreshold{}) {
  BinaryEdgeMap mask(edge.width, edge.height, 0);
  if (const auto* fixed = std::get_if<FixedThreshold>(&method)) {
    if (!(fixed->t >= 0.0 && fixed->t <= 1.0)) {
      throw std::invalid_argument("binarize: fixed threshold must lie in [0,1], got " +
                                  std::to_string(fixed->t));
    }
    for (std::size_t i = 0; i < edge.size(); ++i) mask.data[i] = edge.data[i] > fixed->t ? 1 : 0;
    return mask;
  }
  std::array<std::uint64_t, kOtsuBins> hist{};
  for (double v : edge.data) ++hist[static_cast<std::size_t>(histogram_bin(v))];
  const int k = otsu_bin(hist);
  if (k < 0) return mask;
  for (std::size_t i = 0; i < edge.size(); ++i) {
    mask.data[i] = histogram_bin(edge.data[i]) > k ? 1 : 0;
  }
  return mask;
}

// Loads an externally computed edge map (e.g. from a learned detector), resized to the
// target frame and normalized to max 1.
inline EdgeMap import_edge_map(const std::string& path, int target_width, int target_height) {
  GrayImage loaded = load_gray(path);
  return normalize_max(resize_bilinear(loaded, target_width, target_height));
}

}  // namespace coi
