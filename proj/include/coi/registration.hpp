#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "coi/errors.hpp"
#include "coi/raster.hpp"

namespace coi {

inline double normalize_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a = std::numbers::pi;
  return a;
}

// Shape-preserving map about the image centre: optional mirror about the vertical axis,
// then rotation, isotropic scaling and translation.
//   p' = c_out + scale * R(theta) * F * (p - c_src) + (tx, ty)
struct SimilarityTransform {
  double theta = 0.0;  // radians, (-pi, pi]
  double scale = 1.0;
  double tx = 0.0;  // output pixels
  double ty = 0.0;
  bool reflect = false;

  static SimilarityTransform identity() { return {}; }

  SimilarityTransform normalized() const {
    SimilarityTransform t = *this;
    t.theta = normalize_angle(theta);
    return t;
  }

  // Inverse for maps whose source and output frames share the same centre.
  SimilarityTransform inverse() const {
    SimilarityTransform inv;
    inv.scale = 1.0 / scale;
    inv.reflect = reflect;
    // F R(-theta) = R(theta) F, so a reflected map is its own angle's inverse.
    inv.theta = normalize_angle(reflect ? theta : -theta);
    // t' = -A^{-1} t with A^{-1} = F R(-theta) / scale
    const double c = std::cos(theta), s = std::sin(theta);
    double ux = (c * tx + s * ty) / scale;
    const double uy = (-s * tx + c * ty) / scale;
    if (reflect) ux = -ux;
    inv.tx = -ux;
    inv.ty = -uy;
    return inv;
  }

  friend bool operator==(const SimilarityTransform&, const SimilarityTransform&) = default;
};

namespace detail {

// Output pixel (qx, qy) samples the source at (ax*qx + bx*qy + cx, ay*qx + by*qy + cy).
struct InverseMap {
  double ax, bx, cx;
  double ay, by, cy;
};

inline InverseMap inverse_map(const SimilarityTransform& t, int src_w, int src_h, int out_w,
                              int out_h) {
  const double csx = (src_w - 1) / 2.0, csy = (src_h - 1) / 2.0;
  const double cox = (out_w - 1) / 2.0, coy = (out_h - 1) / 2.0;
  const double c = std::cos(t.theta) / t.scale, s = std::sin(t.theta) / t.scale;
  const double f = t.reflect ? -1.0 : 1.0;
  // p = c_src + F R(-theta)/scale (q - c_out - t)
  InverseMap m{};
  m.ax = f * c;
  m.bx = f * s;
  m.ay = -s;
  m.by = c;
  const double ox = -cox - t.tx, oy = -coy - t.ty;
  m.cx = csx + m.ax * ox + m.bx * oy;
  m.cy = csy + m.ay * ox + m.by * oy;
  return m;
}

// Bilinear read treating everything outside the raster as 0.
inline double sample_zero_padded(const GrayImage& img, double x, double y) {
  if (x <= -1.0 || y <= -1.0 || x >= img.width || y >= img.height) return 0.0;
  const double fx0 = std::floor(x), fy0 = std::floor(y);
  const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
  const double fx = x - fx0, fy = y - fy0;
  auto px = [&](int xx, int yy) { return img.contains(xx, yy) ? img.at(xx, yy) : 0.0; };
  const double top = px(x0, y0) + fx * (px(x0 + 1, y0) - px(x0, y0));
  const double bottom = px(x0, y0 + 1) + fx * (px(x0 + 1, y0 + 1) - px(x0, y0 + 1));
  return std::clamp(top + fy * (bottom - top), 0.0, 1.0);
}

inline bool inside_source(const GrayImage& img, double x, double y) {
  constexpr double eps = 1e-9;
  return x >= -eps && y >= -eps && x <= img.width - 1 + eps && y <= img.height - 1 + eps;
}

}  // namespace detail

// Inverse-mapping warp: output pixel q takes the source value at T^{-1}(q).
inline GrayImage apply_transform(const GrayImage& img, const SimilarityTransform& t, int out_width,
                                 int out_height) {
  if (out_width <= 0 || out_height <= 0) {
    throw std::invalid_argument("apply_transform: output dimensions must be positive");
  }
  if (!(t.scale > 0.0)) throw std::invalid_argument("apply_transform: scale must be > 0");
  const auto m = detail::inverse_map(t, img.width, img.height, out_width, out_height);
  GrayImage out(out_width, out_height);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      out.at(x, y) = detail::sample_zero_padded(img, m.ax * x + m.bx * y + m.cx,
                                                m.ay * x + m.by * y + m.cy);
    }
  }
  return out;
}

// 1 where the output pixel maps inside the source frame.
inline Raster<std::uint8_t> overlap_mask(const GrayImage& img, const SimilarityTransform& t,
                                         int out_width, int out_height) {
  const auto m = detail::inverse_map(t, img.width, img.height, out_width, out_height);
  Raster<std::uint8_t> mask(out_width, out_height, 0);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      mask.at(x, y) = detail::inside_source(img, m.ax * x + m.bx * y + m.cx,
                                            m.ay * x + m.by * y + m.cy);
    }
  }
  return mask;
}

// Joint histogram of two intensity rasters with hard linear binning.
class JointHistogram {
 public:
  explicit JointHistogram(int bins) : bins_(bins), counts_(static_cast<std::size_t>(bins) * bins) {
    if (bins < 2) throw std::invalid_argument("histogram needs at least 2 bins");
  }

  int bins() const { return bins_; }
  int bin(double v) const { return std::clamp(static_cast<int>(v * bins_), 0, bins_ - 1); }

  void add(double a, double b) {
    ++counts_[static_cast<std::size_t>(bin(a)) * bins_ + bin(b)];
    ++total_;
  }
  void clear() {
    std::fill(counts_.begin(), counts_.end(), 0);
    total_ = 0;
  }

  std::uint64_t count(int i, int j) const { return counts_[static_cast<std::size_t>(i) * bins_ + j]; }
  std::uint64_t total() const { return total_; }

  // Sum over cells in (i,j)/(j,i) pairs so that swapping the operands gives a
  // bit-identical result.
  double mutual_information() const {
    if (total_ == 0) return 0.0;
    std::vector<double> row(static_cast<std::size_t>(bins_), 0.0), col(row);
    for (int i = 0; i < bins_; ++i) {
      for (int j = 0; j < bins_; ++j) {
        const double c = static_cast<double>(count(i, j));
        row[static_cast<std::size_t>(i)] += c;
        col[static_cast<std::size_t>(j)] += c;
      }
    }
    const double n = static_cast<double>(total_);
    auto term = [&](int i, int j) {
      const double c = static_cast<double>(count(i, j));
      if (c == 0.0) return 0.0;
      return c / n * std::log(c * n / (row[static_cast<std::size_t>(i)] * col[static_cast<std::size_t>(j)]));
    };
    double mi = 0.0;
    for (int i = 0; i < bins_; ++i) {
      mi += term(i, i);
      for (int j = i + 1; j < bins_; ++j) mi += term(i, j) + term(j, i);
    }
    return std::max(0.0, mi);
  }

 private:
  int bins_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

inline double mutual_information(const GrayImage& a, const GrayImage& b, int bins) {
  require_same_shape(a, b, "mutual_information");
  JointHistogram h(bins);
  for (std::size_t i = 0; i < a.size(); ++i) h.add(a.data[i], b.data[i]);
  return h.mutual_information();
}

// Shannon entropy (nats) of the same linear binning used by the MI estimate.
inline double entropy(const GrayImage& a, int bins) {
  JointHistogram h(bins);
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : a.data) counts[static_cast<std::size_t>(h.bin(v))] += 1.0;
  const double n = static_cast<double>(a.size());
  double e = 0.0;
  for (double c : counts) {
    if (c > 0.0) e -= c / n * std::log(c / n);
  }
  return e;
}

struct StepSizes {
  double theta = 0.0;
  double log_scale = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  StepSizes scaled(double f) const { return {theta * f, log_scale * f, tx * f, ty * f}; }
};

// Deterministic across platforms: mt19937_64 output is fixed by the standard, and the
// conversion to [0,1) is done here rather than by a library distribution.
class SearchRng {
 public:
  explicit SearchRng(std::uint64_t seed) : engine_(seed) {}
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double symmetric(double half_width) { return (2.0 * uniform01() - 1.0) * half_width; }

 private:
  std::mt19937_64 engine_;
};

// Perturbs theta, log(scale), tx and ty uniformly within +-step. Reflection is untouched.
inline std::vector<SimilarityTransform> generate_children(const SimilarityTransform& parent,
                                                          const StepSizes& step, int n,
                                                          SearchRng& rng) {
  if (n < 1) throw std::invalid_argument("generate_children: n must be >= 1");
  std::vector<SimilarityTransform> children;
  children.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SimilarityTransform c = parent;
    c.theta = normalize_angle(parent.theta + rng.symmetric(step.theta));
    c.scale = std::exp(std::log(parent.scale) + rng.symmetric(step.log_scale));
    c.tx = parent.tx + rng.symmetric(step.tx);
    c.ty = parent.ty + rng.symmetric(step.ty);
    children.push_back(c);
  }
  return children;
}

struct SearchConfig {
  int children_per_iter = 8;
  double step_theta = 0.2;             // rad
  double step_log_scale = 0.2;
  double step_translation_frac = 0.05;  // of the reference long side
  double decay = 0.5;
  double min_step_fraction = 1e-3;  // stop once the step falls below this share of the initial
  int max_iters = 200;              // per pyramid level
  int histogram_bins = 32;
  int pyramid_levels = 3;  // 1 disables the pyramid
  std::uint64_t rng_seed = 0;
  bool mask_overlap = false;  // exclude out-of-overlap pixels from the histogram
  int max_working_side = 512;  // larger references are registered on a downscaled copy; 0 = off

  void validate() const {
    if (children_per_iter < 1) throw std::invalid_argument("search: children_per_iter must be >= 1");
    if (!(decay > 0.0 && decay < 1.0)) throw std::invalid_argument("search: decay must be in (0,1)");
    if (histogram_bins < 2) throw std::invalid_argument("search: histogram_bins must be >= 2");
    if (pyramid_levels < 1) throw std::invalid_argument("search: pyramid_levels must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("search: max_iters must be >= 1");
    if (!(min_step_fraction > 0.0)) throw std::invalid_argument("search: min_step_fraction must be > 0");
    if (step_theta < 0 || step_log_scale < 0 || step_translation_frac < 0) {
      throw std::invalid_argument("search: step sizes must be non-negative");
    }
    if (max_working_side < 0) throw std::invalid_argument("search: max_working_side must be >= 0");
  }
};

struct RegistrationResult {
  SimilarityTransform transform;
  double score = 0.0;  // MI in nats at full working resolution
  int iterations = 0;  // summed over pyramid levels of the returned branch
  std::vector<double> score_trace;  // best score per iteration at the finest level

  friend bool operator==(const RegistrationResult&, const RegistrationResult&) = default;
};

namespace detail {

// MI between warp(moving, t) in the reference frame and the reference, without
// materializing the warped image.
class WarpScorer {
 public:
  WarpScorer(const GrayImage& moving, const GrayImage& reference, int bins, bool mask_overlap)
      : moving_(moving), reference_(reference), hist_(bins), mask_overlap_(mask_overlap) {}

  double operator()(const SimilarityTransform& t) {
    const auto m = inverse_map(t, moving_.width, moving_.height, reference_.width, reference_.height);
    hist_.clear();
    for (int y = 0; y < reference_.height; ++y) {
      double sx = m.bx * y + m.cx, sy = m.by * y + m.cy;
      for (int x = 0; x < reference_.width; ++x, sx += m.ax, sy += m.ay) {
        if (mask_overlap_ && !inside_source(moving_, sx, sy)) continue;
        hist_.add(sample_zero_padded(moving_, sx, sy), reference_.at(x, y));
      }
    }
    return hist_.mutual_information();
  }

 private:
  const GrayImage& moving_;
  const GrayImage& reference_;
  JointHistogram hist_;
  bool mask_overlap_;
};

struct PyramidLevel {
  GrayImage moving;
  GrayImage reference;
  // Size of this level relative to the full-resolution inputs.
  double ref_rx, ref_ry, mov_r;
};

inline double geometric_ratio(const GrayImage& small, const GrayImage& big) {
  return std::sqrt(static_cast<double>(small.width) / big.width *
                   (static_cast<double>(small.height) / big.height));
}

inline GrayImage downscale(const GrayImage& img, double factor) {
  const int w = std::max(1, static_cast<int>(std::lround(img.width * factor)));
  const int h = std::max(1, static_cast<int>(std::lround(img.height * factor)));
  return resize_bilinear(img, w, h);
}

// Level 0 is full resolution. Levels stop before either image drops under 16 px.
inline std::vector<PyramidLevel> build_pyramid(const GrayImage& moving, const GrayImage& reference,
                                               int levels) {
  std::vector<PyramidLevel> out;
  out.push_back({moving, reference, 1.0, 1.0, 1.0});
  for (int l = 1; l < levels; ++l) {
    const double f = std::ldexp(1.0, -l);
    const int min_side = std::min({moving.width, moving.height, reference.width, reference.height});
    if (min_side * f < 16.0) break;
    GrayImage m = downscale(moving, f);
    GrayImage r = downscale(reference, f);
    const double rx = static_cast<double>(r.width) / reference.width;
    const double ry = static_cast<double>(r.height) / reference.height;
    const double mr = geometric_ratio(m, moving);
    out.push_back({std::move(m), std::move(r), rx, ry, mr});
  }
  return out;
}

// Full-resolution parameters expressed at a pyramid level, and back.
inline SimilarityTransform to_level(SimilarityTransform t, const PyramidLevel& lv) {
  t.scale *= std::sqrt(lv.ref_rx * lv.ref_ry) / lv.mov_r;
  t.tx *= lv.ref_rx;
  t.ty *= lv.ref_ry;
  return t;
}
inline SimilarityTransform from_level(SimilarityTransform t, const PyramidLevel& lv) {
  t.scale /= std::sqrt(lv.ref_rx * lv.ref_ry) / lv.mov_r;
  t.tx /= lv.ref_rx;
  t.ty /= lv.ref_ry;
  return t;
}

inline bool is_constant(const GrayImage& img) {
  const auto [lo, hi] = min_max(img);
  return lo == hi;
}

inline RegistrationResult search_branch(const std::vector<PyramidLevel>& pyramid,
                                        const SearchConfig& cfg, SimilarityTransform start,
                                        std::uint64_t seed) {
  SearchRng rng(seed);
  const GrayImage& full_ref = pyramid.front().reference;
  const double long_side = std::max(full_ref.width, full_ref.height);
  const StepSizes initial{cfg.step_theta, cfg.step_log_scale, cfg.step_translation_frac * long_side,
                          cfg.step_translation_frac * long_side};

  RegistrationResult result;
  SimilarityTransform parent = start;  // full-resolution parameters
  const int coarsest = static_cast<int>(pyramid.size()) - 1;
  for (int l = coarsest; l >= 0; --l) {
    const PyramidLevel& lv = pyramid[static_cast<std::size_t>(l)];
    WarpScorer score(lv.moving, lv.reference, cfg.histogram_bins, cfg.mask_overlap);
    // Finer levels start from a proportionally smaller neighbourhood.
    double step_factor = std::ldexp(1.0, -(coarsest - l));
    SimilarityTransform level_parent = to_level(parent, lv);
    double parent_score = score(level_parent);
    std::vector<double> trace;
    for (int it = 0; it < cfg.max_iters && step_factor >= cfg.min_step_fraction; ++it) {
      StepSizes step = initial.scaled(step_factor);
      step.tx *= lv.ref_rx;
      step.ty *= lv.ref_ry;
      const auto children = generate_children(level_parent, step, cfg.children_per_iter, rng);
      // Lowest index wins ties.
      std::size_t best = 0;
      double best_score = -1.0;
      for (std::size_t i = 0; i < children.size(); ++i) {
        const double s = score(children[i]);
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      if (best_score > parent_score) {
        level_parent = children[best];
        parent_score = best_score;
      } else {
        step_factor *= cfg.decay;
      }
      trace.push_back(parent_score);
      ++result.iterations;
    }
    parent = from_level(level_parent, lv).normalized();
    if (l == 0) {
      result.score = parent_score;
      result.score_trace = std::move(trace);
    }
  }
  result.transform = parent;
  return result;
}

}  // namespace detail

// Best-first perturbation search maximizing MI(warp(moving, T), reference), run once
// per reflection state; the higher-scoring branch is returned.
inline RegistrationResult best_first_register(const GrayImage& moving, const GrayImage& reference,
                                              const SearchConfig& cfg = {}) {
  cfg.validate();
  if (detail::is_constant(moving) || detail::is_constant(reference)) {
    throw DegenerateInputError("uninformative image: MI identically 0");
  }

  GrayImage work_moving = moving, work_reference = reference;
  double work_factor = 1.0;
  const int ref_long = std::max(reference.width, reference.height);
  if (cfg.max_working_side > 0 && ref_long > cfg.max_working_side) {
    work_factor = static_cast<double>(cfg.max_working_side) / ref_long;
    work_moving = detail::downscale(moving, work_factor);
    work_reference = detail::downscale(reference, work_factor);
  }
  const auto pyramid = detail::build_pyramid(work_moving, work_reference, cfg.pyramid_levels);

  SimilarityTransform start;
  start.scale = static_cast<double>(std::max(work_reference.width, work_reference.height)) /
                std::max(work_moving.width, work_moving.height);

  std::optional<RegistrationResult> best;
  for (int branch = 0; branch < 2; ++branch) {
    start.reflect = branch == 1;
    RegistrationResult r =
        detail::search_branch(pyramid, cfg, start, cfg.rng_seed + static_cast<std::uint64_t>(branch));
    if (!best || r.score > best->score) best = std::move(r);
  }

  if (work_factor != 1.0) {
    // Back to full-resolution pixel units.
    const detail::PyramidLevel ratios{
        {}, {},
        static_cast<double>(work_reference.width) / reference.width,
        static_cast<double>(work_reference.height) / reference.height,
        detail::geometric_ratio(work_moving, moving)};
    best->transform = detail::from_level(best->transform, ratios);
  }
  return *best;
}

}  // namespace coi
