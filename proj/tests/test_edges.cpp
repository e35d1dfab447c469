#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "coi/edges.hpp"
#include "oracles.hpp"

using namespace coi;

namespace {

// Columns [0, step_col) are 0, the rest delta.
GrayImage vertical_step(int w, int h, int step_col, double delta) {
  GrayImage img(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = step_col; x < w; ++x) img.at(x, y) = delta;
  }
  return img;
}

GrayImage transpose(const GrayImage& img) {
  GrayImage t(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) t.at(y, x) = img.at(x, y);
  }
  return t;
}

GradientPair uniform_gradient(int w, int h, double gx, double gy) {
  return {Raster<double>(w, h, gx), Raster<double>(w, h, gy)};
}

GradientPair random_gradient(std::mt19937_64& rng, int w, int h) {
  std::normal_distribution<double> n(0.0, 1.0);
  GradientPair g{Raster<double>(w, h), Raster<double>(w, h)};
  for (double& v : g.gx.data) v = n(rng);
  for (double& v : g.gy.data) v = n(rng);
  return g;
}

}  // namespace

TEST(Sobel, ConstantImageHasZeroGradient) {
  const GradientPair g = sobel_gradients(GrayImage(6, 5, 0.42));
  for (double v : g.gx.data) EXPECT_EQ(v, 0.0);
  for (double v : g.gy.data) EXPECT_EQ(v, 0.0);
}

TEST(Sobel, VerticalStepGivesFourDelta) {
  const double delta = 0.75;
  const GradientPair g = sobel_gradients(vertical_step(8, 6, 4, delta));
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double expected = (x == 3 || x == 4) ? -4.0 * delta : 0.0;
      EXPECT_EQ(g.gx.at(x, y), expected) << x << "," << y;
      EXPECT_EQ(g.gy.at(x, y), 0.0);
    }
  }
}

TEST(Sobel, TransposeSwapsComponents) {
  std::mt19937_64 rng(7);
  const GrayImage img = oracle::random_image(rng, 11, 6);
  const GradientPair g = sobel_gradients(img);
  const GradientPair gt = sobel_gradients(transpose(img));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      EXPECT_DOUBLE_EQ(gt.gx.at(y, x), g.gy.at(x, y));
      EXPECT_DOUBLE_EQ(gt.gy.at(y, x), g.gx.at(x, y));
    }
  }
}

TEST(Sobel, MatchesPaddedOracle) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> dim(3, 40);
  for (int trial = 0; trial < 20; ++trial) {
    const GrayImage img = oracle::random_image(rng, dim(rng), dim(rng));
    const GradientPair g = sobel_gradients(img);
    const auto [ox, oy] = oracle::sobel(img);
    for (std::size_t i = 0; i < img.size(); ++i) {
      EXPECT_NEAR(g.gx.data[i], ox.data[i], 1e-12);
      EXPECT_NEAR(g.gy.data[i], oy.data[i], 1e-12);
    }
  }
}

TEST(Sobel, TooSmallThrows) {
  EXPECT_THROW(sobel_gradients(GrayImage(2, 5, 0.0)), std::invalid_argument);
  EXPECT_THROW(sobel_gradients(GrayImage(5, 2, 0.0)), std::invalid_argument);
}

TEST(GradientMagnitude, ThreeFourFive) {
  GradientPair g = uniform_gradient(3, 3, 0.0, 0.0);
  g.gx.at(1, 1) = 3.0;
  g.gy.at(1, 1) = 4.0;
  g.gx.at(0, 0) = 1.0;
  const EdgeMap m = gradient_magnitude(g);
  EXPECT_EQ(m.at(1, 1), 1.0);
  EXPECT_EQ(m.at(0, 0), 0.2);
}

TEST(GradientMagnitude, ZeroStaysZero) {
  const EdgeMap m = gradient_magnitude(uniform_gradient(4, 4, 0.0, 0.0));
  for (double v : m.data) EXPECT_EQ(v, 0.0);
}

TEST(GradientMagnitude, StepGivesUnitRidge) {
  const EdgeMap m = gradient_magnitude(sobel_gradients(vertical_step(8, 5, 4, 0.3)));
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 8; ++x) EXPECT_EQ(m.at(x, y), (x == 3 || x == 4) ? 1.0 : 0.0);
  }
}

TEST(GradientMagnitude, ShapeMismatchThrows) {
  GradientPair g{Raster<double>(3, 3), Raster<double>(4, 3)};
  EXPECT_THROW(gradient_magnitude(g), std::invalid_argument);
}

TEST(Nms, KeepsOnlyPeakOfProfile) {
  EdgeMap m(5, 3, 0.0);
  const double profile[5] = {0, 1, 3, 1, 0};
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 5; ++x) m.at(x, y) = profile[x];
  }
  const EdgeMap out = non_max_suppression(m, uniform_gradient(5, 3, 1.0, 0.0));
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 5; ++x) EXPECT_EQ(out.at(x, y), x == 2 ? 3.0 : 0.0);
  }
}

TEST(Nms, ThinRidgePreserved) {
  EdgeMap m(7, 7, 0.0);
  for (int y = 0; y < 7; ++y) m.at(3, y) = 0.8;
  EXPECT_EQ(non_max_suppression(m, uniform_gradient(7, 7, -2.0, 0.1)), m);
}

TEST(Nms, PlateauKeepsOneSide) {
  EdgeMap m(4, 1, 0.0);
  m.data = {0.0, 0.5, 0.5, 0.0};
  const EdgeMap out = non_max_suppression(m, uniform_gradient(4, 1, 1.0, 0.0));
  EXPECT_EQ(out.data, (std::vector<double>{0.0, 0.5, 0.0, 0.0}));
}

TEST(Nms, ZeroMapStaysZero) {
  const EdgeMap m(5, 5, 0.0);
  EXPECT_EQ(non_max_suppression(m, uniform_gradient(5, 5, 1.0, 1.0)), m);
}

TEST(Nms, SuppressesBelowFloor) {
  EdgeMap m(3, 1, 0.0);
  m.at(1, 0) = 5e-7;
  EXPECT_EQ(non_max_suppression(m, uniform_gradient(3, 1, 1.0, 0.0)).at(1, 0), 0.0);
}

TEST(Nms, ShapeMismatchThrows) {
  EXPECT_THROW(non_max_suppression(EdgeMap(4, 4), uniform_gradient(4, 5, 0, 0)), std::invalid_argument);
}

TEST(Nms, IdempotentAndDominated) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> dim(1, 30);
  for (int trial = 0; trial < 40; ++trial) {
    const int w = dim(rng), h = dim(rng);
    const EdgeMap m = oracle::random_image(rng, w, h);
    const GradientPair g = random_gradient(rng, w, h);
    const EdgeMap once = non_max_suppression(m, g);
    EXPECT_EQ(non_max_suppression(once, g), once);
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_TRUE(once.data[i] == 0.0 || once.data[i] == m.data[i]);
      EXPECT_LE(once.data[i], m.data[i]);
    }
  }
}

TEST(Multiscale, DefaultsFollowPublishedValues) {
  const MultiscaleConfig cfg;
  EXPECT_EQ(cfg.scales, (std::vector<double>{1.5, 1.0, 0.5}));
  EXPECT_EQ(cfg.target_long_side, 1000);
  EXPECT_TRUE(cfg.nms_per_scale);
}

TEST(Multiscale, ConstantImageGivesZeroMap) {
  MultiscaleConfig cfg;
  cfg.target_long_side = 40;
  const EdgeMap m = multiscale_edge_map(GrayImage(30, 20, 0.5), cfg);
  EXPECT_EQ(m.width, 40);
  EXPECT_EQ(m.height, 27);
  for (double v : m.data) EXPECT_EQ(v, 0.0);
}

TEST(Multiscale, SingleScaleEqualsDetectorPlusNms) {
  std::mt19937_64 rng(10);
  const GrayImage img = oracle::random_image(rng, 24, 16);
  MultiscaleConfig cfg;
  cfg.scales = {1.0};
  cfg.target_long_side = 36;
  const EdgeResponse r = sobel_detector(img);
  const EdgeMap expected = normalize_max(resize_bilinear(non_max_suppression(r.strength, r.orientation), 36, 24));
  const EdgeMap got = multiscale_edge_map(img, cfg);
  ASSERT_TRUE(got.same_shape(expected));
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data[i], expected.data[i], 1e-15);
}

TEST(Multiscale, MaxIsExactlyOne) {
  std::mt19937_64 rng(11);
  MultiscaleConfig cfg;
  cfg.target_long_side = 50;
  for (bool per_scale : {true, false}) {
    cfg.nms_per_scale = per_scale;
    const EdgeMap m = multiscale_edge_map(oracle::random_image(rng, 33, 21), cfg);
    EXPECT_EQ(min_max(m).second, 1.0);
    EXPECT_GE(min_max(m).first, 0.0);
  }
}

TEST(Multiscale, RejectsBadConfig) {
  MultiscaleConfig cfg;
  cfg.scales = {};
  EXPECT_THROW(multiscale_edge_map(GrayImage(8, 8, 0.1), cfg), std::invalid_argument);
  cfg.scales = {1.0, -0.5};
  EXPECT_THROW(multiscale_edge_map(GrayImage(8, 8, 0.1), cfg), std::invalid_argument);
}

TEST(Binarize, FixedThreshold) {
  EdgeMap m(2, 1);
  m.data = {0.2, 0.7};
  EXPECT_EQ(binarize(m, FixedThreshold{0.5}).data, (std::vector<std::uint8_t>{0, 1}));
}

TEST(Binarize, FixedOutOfRangeThrows) {
  EXPECT_THROW(binarize(EdgeMap(2, 2), FixedThreshold{1.5}), std::invalid_argument);
  EXPECT_THROW(binarize(EdgeMap(2, 2), FixedThreshold{-0.1}), std::invalid_argument);
}

TEST(Binarize, OtsuSeparatesTwoPopulations) {
  EdgeMap m(10, 10);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = i < 40 ? 0.1 : 0.9;
  const BinaryEdgeMap b = binarize(m, OtsuThreshold{});
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(b.data[i], i < 40 ? 0 : 1);
  // Every split between bins 25 and 229 ties; the lowest wins.
  std::vector<double> values(m.data.begin(), m.data.end());
  EXPECT_EQ(oracle::otsu_split(values), 25);
}

TEST(Binarize, FlatMapsGiveEmptyMask) {
  for (double v : {0.0, 0.4, 1.0}) {
    const BinaryEdgeMap b = binarize(EdgeMap(6, 4, v), OtsuThreshold{});
    for (auto x : b.data) EXPECT_EQ(x, 0);
  }
}

TEST(Binarize, OtsuMatchesExhaustiveSearch) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> modes(1, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    EdgeMap m(20, 15);
    const int k = modes(rng);
    std::vector<double> centres(static_cast<std::size_t>(k));
    for (double& c : centres) c = u(rng);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (double& v : m.data) v = std::clamp(centres[rng() % centres.size()] + noise(rng), 0.0, 1.0);

    std::array<std::uint64_t, kOtsuBins> hist{};
    for (double v : m.data) ++hist[static_cast<std::size_t>(histogram_bin(v))];
    const int expected = oracle::otsu_split(m.data);
    EXPECT_EQ(otsu_bin(hist), expected);
    const BinaryEdgeMap b = binarize(m, OtsuThreshold{});
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_EQ(b.data[i], expected >= 0 && histogram_bin(m.data[i]) > expected ? 1 : 0);
    }
  }
}

TEST(ImportEdgeMap, RoundTripWithinQuantization) {
  std::mt19937_64 rng(13);
  const EdgeMap m = normalize_max(oracle::random_image(rng, 19, 12));
  const auto path = (std::filesystem::temp_directory_path() / "coi_import_edges.png").string();
  save_gray(m, path);
  const EdgeMap back = import_edge_map(path, 19, 12);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_LE(std::abs(back.data[i] - m.data[i]), 1.0 / 255 + 1e-12);

  const BinaryEdgeMap a = binarize(m, FixedThreshold{0.5});
  const BinaryEdgeMap b = binarize(back, FixedThreshold{0.5});
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (std::abs(m.data[i] - 0.5) > 1.0 / 255) {
      EXPECT_EQ(a.data[i], b.data[i]);
    }
  }
}

TEST(ImportEdgeMap, ResizesToTarget) {
  const auto path = (std::filesystem::temp_directory_path() / "coi_import_resize.pgm").string();
  save_gray(GrayImage(4, 4, 0.5), path);
  const EdgeMap m = import_edge_map(path, 10, 6);
  EXPECT_EQ(m.width, 10);
  EXPECT_EQ(m.height, 6);
  for (double v : m.data) EXPECT_EQ(v, 1.0);
}

TEST(ImportEdgeMap, MissingFileThrows) {
  EXPECT_THROW(import_edge_map("/nonexistent/edges.png", 4, 4), IoError);
}
