#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "coi/edges.hpp"
#include "coi/raster.hpp"

namespace coi {

enum class DiffClass : std::uint8_t { Neither = 0, MovingOnly = 1, ReferenceOnly = 2, Both = 3 };

using DifferenceMap = Raster<DiffClass>;

struct ClassCounts {
  std::uint64_t moving_only = 0;
  std::uint64_t reference_only = 0;
  std::uint64_t both = 0;
  std::uint64_t neither = 0;

  std::uint64_t total() const { return moving_only + reference_only + both + neither; }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

inline DifferenceMap classify_difference(const BinaryEdgeMap& moving_edges,
                                         const BinaryEdgeMap& reference_edges) {
  require_same_shape(moving_edges, reference_edges, "classify_difference");
  DifferenceMap d(moving_edges.width, moving_edges.height, DiffClass::Neither);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int m = moving_edges.data[i] ? 1 : 0;
    const int r = reference_edges.data[i] ? 2 : 0;
    d.data[i] = static_cast<DiffClass>(m | r);
  }
  return d;
}

inline ClassCounts count_classes(const DifferenceMap& d) {
  ClassCounts c;
  for (DiffClass k : d.data) {
    switch (k) {
      case DiffClass::MovingOnly: ++c.moving_only; break;
      case DiffClass::ReferenceOnly: ++c.reference_only; break;
      case DiffClass::Both: ++c.both; break;
      case DiffClass::Neither: ++c.neither; break;
    }
  }
  return c;
}

inline BinaryEdgeMap residual_mask(const DifferenceMap& d, DiffClass which) {
  BinaryEdgeMap mask(d.width, d.height, 0);
  for (std::size_t i = 0; i < d.size(); ++i) mask.data[i] = d.data[i] == which ? 1 : 0;
  return mask;
}

// Which input plays the painting. Painter's perspective registers the photograph onto
// the painting (photograph moving); the viewer's perspective is the reverse.
enum class Perspective { Painter, Viewer };

inline DiffClass painting_only_class(Perspective p) {
  return p == Perspective::Painter ? DiffClass::ReferenceOnly : DiffClass::MovingOnly;
}

inline constexpr Rgb kPaintingGreen{0, 160, 0};
inline constexpr Rgb kPhotographPurple{160, 32, 160};
inline constexpr Rgb kOverlapBlack{0, 0, 0};
inline constexpr Rgb kBackgroundWhite{255, 255, 255};

struct OverlayPalette {
  Rgb moving_only = kPhotographPurple;
  Rgb reference_only = kPaintingGreen;
  Rgb both = kOverlapBlack;
  Rgb neither = kBackgroundWhite;

  // Painting edges green and photograph edges purple, whichever side is moving.
  static OverlayPalette for_perspective(Perspective p) {
    OverlayPalette pal;
    if (p == Perspective::Viewer) std::swap(pal.moving_only, pal.reference_only);
    return pal;
  }

  const Rgb& color(DiffClass c) const {
    switch (c) {
      case DiffClass::MovingOnly: return moving_only;
      case DiffClass::ReferenceOnly: return reference_only;
      case DiffClass::Both: return both;
      case DiffClass::Neither: break;
    }
    return neither;
  }

  bool distinct() const {
    const std::array<Rgb, 4> c{moving_only, reference_only, both, neither};
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        if (c[i] == c[j]) return false;
      }
    }
    return true;
  }
};

inline RgbImage render_overlay(const DifferenceMap& d, const OverlayPalette& palette = {}) {
  if (!palette.distinct()) throw std::invalid_argument("render_overlay: palette colours must differ");
  RgbImage out(d.width, d.height);
  for (std::size_t i = 0; i < d.size(); ++i) out.data[i] = palette.color(d.data[i]);
  return out;
}

}  // namespace coi
