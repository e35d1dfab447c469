#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "coi/edges.hpp"
#include "coi/raster.hpp"

namespace coi {

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// 8-connected set of mask pixels. `perimeter` counts member pixels with a 4-neighbour
// outside the component or outside the image.
struct Component {
  std::vector<Pixel> pixels;
  std::size_t area = 0;
  std::size_t perimeter = 0;
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

// Half-open box: [x0, x1) x [y0, y1).
struct InterestBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int source_components = 1;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }

  // Positive-area intersection; boxes that only share an edge do not overlap.
  bool overlaps(const InterestBox& o) const {
    return std::max(x0, o.x0) < std::min(x1, o.x1) && std::max(y0, o.y0) < std::min(y1, o.y1);
  }

  InterestBox united(const InterestBox& o) const {
    return {std::min(x0, o.x0), std::min(y0, o.y0), std::max(x1, o.x1), std::max(y1, o.y1),
            source_components + o.source_components};
  }

  friend bool operator==(const InterestBox&, const InterestBox&) = default;
};

inline bool box_order(const InterestBox& a, const InterestBox& b) {
  return std::tie(a.y0, a.x0, a.y1, a.x1, a.source_components) <
         std::tie(b.y0, b.x0, b.y1, b.x1, b.source_components);
}

struct InterestParams {
  double a = 100.0;     // minimum area, exclusive
  double p = 70.0;      // minimum perimeter, exclusive
  double c = 0.0023;    // box extension as a fraction of the long side
  // Long side used to turn `c` into pixels; 0 means the mask's own long side.
  int extent_px = 0;

  void validate() const {
    if (a < 0 || p < 0 || c < 0) throw std::invalid_argument("interest: a, p, c must be >= 0");
    if (extent_px < 0) throw std::invalid_argument("interest: extent_px must be >= 0");
  }
};

// Components in order of their first pixel in raster scan (topmost, then leftmost).
inline std::vector<Component> connected_components(const BinaryEdgeMap& mask) {
  std::vector<Component> out;
  Raster<std::uint8_t> seen(mask.width, mask.height, 0);
  std::deque<Pixel> queue;
  auto in_mask = [&](int x, int y) { return mask.contains(x, y) && mask.at(x, y) != 0; };

  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!in_mask(x, y) || seen.at(x, y)) continue;
      Component comp;
      comp.min_x = comp.max_x = x;
      comp.min_y = comp.max_y = y;
      seen.at(x, y) = 1;
      queue.push_back({x, y});
      while (!queue.empty()) {
        const Pixel px = queue.front();
        queue.pop_front();
        comp.pixels.push_back(px);
        comp.min_x = std::min(comp.min_x, px.x);
        comp.max_x = std::max(comp.max_x, px.x);
        comp.min_y = std::min(comp.min_y, px.y);
        comp.max_y = std::max(comp.max_y, px.y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = px.x + dx, ny = px.y + dy;
            if ((dx || dy) && in_mask(nx, ny) && !seen.at(nx, ny)) {
              seen.at(nx, ny) = 1;
              queue.push_back({nx, ny});
            }
          }
        }
      }
      comp.area = comp.pixels.size();
      // Any 4-neighbour that is set belongs to this component, so a 4-neighbour
      // outside the component is exactly a background or out-of-image pixel.
      for (const Pixel& px : comp.pixels) {
        if (!in_mask(px.x - 1, px.y) || !in_mask(px.x + 1, px.y) || !in_mask(px.x, px.y - 1) ||
            !in_mask(px.x, px.y + 1)) {
          ++comp.perimeter;
        }
      }
      out.push_back(std::move(comp));
    }
  }
  return out;
}

inline std::vector<Component> filter_components(std::vector<Component> cs,
                                                const InterestParams& params) {
  std::erase_if(cs, [&](const Component& c) {
    return !(static_cast<double>(c.area) > params.a && static_cast<double>(c.perimeter) > params.p);
  });
  return cs;
}

inline InterestBox bounding_box(const Component& c) {
  return {c.min_x, c.min_y, c.max_x + 1, c.max_y + 1, 1};
}

inline int extension_pixels(double c, int extent) {
  return static_cast<int>(std::lround(c * extent));
}

inline InterestBox pad_box(const InterestBox& b, int pad, int img_width, int img_height) {
  return {std::max(0, b.x0 - pad), std::max(0, b.y0 - pad), std::min(img_width, b.x1 + pad),
          std::min(img_height, b.y1 + pad), b.source_components};
}

// Grows every side by round(c * max(width, height)) pixels, clamped to the image.
inline InterestBox extend_box(const InterestBox& b, double c, int img_width, int img_height) {
  return pad_box(b, extension_pixels(c, std::max(img_width, img_height)), img_width, img_height);
}

struct MergeOutcome {
  std::vector<InterestBox> boxes;
  std::size_t merges = 0;
};

// Replaces overlapping pairs by their union until no pair overlaps. Every merge removes
// one box, so there are at most (n - 1) merges.
inline MergeOutcome merge_overlapping_counted(std::vector<InterestBox> boxes) {
  MergeOutcome out;
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < boxes.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < boxes.size(); ++j) {
        if (boxes[i].overlaps(boxes[j])) {
          boxes[i] = boxes[i].united(boxes[j]);
          boxes.erase(boxes.begin() + static_cast<std::ptrdiff_t>(j));
          ++out.merges;
          merged = true;
          break;
        }
      }
    }
  }
  std::sort(boxes.begin(), boxes.end(), box_order);
  out.boxes = std::move(boxes);
  return out;
}

inline std::vector<InterestBox> merge_overlapping(std::vector<InterestBox> boxes) {
  return merge_overlapping_counted(std::move(boxes)).boxes;
}

// Components -> area/perimeter filter -> bounding boxes -> extension -> merge to fixpoint.
inline std::vector<InterestBox> centres_of_interest(const BinaryEdgeMap& mask,
                                                    const InterestParams& params = {}) {
  params.validate();
  const int extent = params.extent_px > 0 ? params.extent_px : std::max(mask.width, mask.height);
  const int pad = extension_pixels(params.c, extent);
  std::vector<InterestBox> boxes;
  for (const Component& comp : filter_components(connected_components(mask), params)) {
    boxes.push_back(pad_box(bounding_box(comp), pad, mask.width, mask.height));
  }
  return merge_overlapping(std::move(boxes));
}

// 1-px outlines over `img`.
inline RgbImage draw_boxes(RgbImage img, const std::vector<InterestBox>& boxes, Rgb color) {
  for (const InterestBox& b : boxes) {
    for (int x = b.x0; x < b.x1; ++x) {
      if (img.contains(x, b.y0)) img.at(x, b.y0) = color;
      if (img.contains(x, b.y1 - 1)) img.at(x, b.y1 - 1) = color;
    }
    for (int y = b.y0; y < b.y1; ++y) {
      if (img.contains(b.x0, y)) img.at(b.x0, y) = color;
      if (img.contains(b.x1 - 1, y)) img.at(b.x1 - 1, y) = color;
    }
  }
  return img;
}

}  // namespace coi
