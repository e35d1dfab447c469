// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "coi/cli.hpp"
#include "coi/coi.hpp"
#include "coi/synthetic.hpp"
#include "oracles.hpp"

using namespace coi;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

// Recorded by the registration criterion and reused by the MI criterion.
std::vector<std::vector<double>> g_traces;

Outcome sobel_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> side(8, 64);
  double worst = 0.0;
  std::size_t magnitude_mismatches = 0;
  for (int n = 0; n < 200; ++n) {
    const GrayImage img = oracle::random_image(rng, side(rng), side(rng));
    const GradientPair g = sobel_gradients(img);
    const auto [ox, oy] = oracle::sobel(img);
    for (std::size_t i = 0; i < img.size(); ++i) {
      worst = std::max({worst, std::abs(g.gx.data[i] - ox.data[i]), std::abs(g.gy.data[i] - oy.data[i])});
    }
    const EdgeMap mag = gradient_magnitude(g);
    std::vector<double> raw(img.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      raw[i] = std::sqrt(g.gx.data[i] * g.gx.data[i] + g.gy.data[i] * g.gy.data[i]);
      peak = std::max(peak, raw[i]);
    }
    for (std::size_t i = 0; i < img.size(); ++i) {
      if (mag.data[i] != (peak > 0 ? raw[i] / peak : 0.0)) ++magnitude_mismatches;
    }
  }
  const double secs = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "max |diff| %.3g, magnitude mismatches %zu, %.2f s", worst,
                magnitude_mismatches, secs);
  return {worst <= 1e-6 && magnitude_mismatches == 0 && secs < 10.0, buf};
}

Outcome step_edge() {
  bool ok = true;
  for (double delta : {0.25, 0.3, 1.0 / 3.0, 0.7, 1.0}) {
    GrayImage img(8, 6, 0.0);
    for (int y = 0; y < 6; ++y) {
      for (int x = 4; x < 8; ++x) img.at(x, y) = delta;
    }
    const GradientPair g = sobel_gradients(img);
    for (int y = 0; y < 6; ++y) {
      for (int x : {3, 4}) ok = ok && std::abs(g.gx.at(x, y)) == 4.0 * delta && g.gy.at(x, y) == 0.0;
      for (int x : {0, 1, 6, 7}) ok = ok && g.gx.at(x, y) == 0.0;
    }
  }
  return {ok, "step heights 0.25, 0.3, 1/3, 0.7, 1.0"};
}

Outcome registration_recovery() {
  const auto t0 = Clock::now();
  const GrayImage base = synthetic::smooth_scene(256, 256, 2024);
  SearchRng rng(77);
  int passed = 0;
  std::string failures;
  g_traces.clear();
  for (int n = 0; n < 20; ++n) {
    SimilarityTransform truth;
    truth.theta = rng.symmetric(15.0 * std::numbers::pi / 180.0);
    truth.scale = 0.85 + rng.uniform01() * (1.18 - 0.85);
    truth.tx = rng.symmetric(12.0);
    truth.ty = rng.symmetric(12.0);
    truth.reflect = n % 2 == 1;
    const GrayImage reference = apply_transform(base, truth, 256, 256);
    SearchConfig cfg;
    cfg.rng_seed = static_cast<std::uint64_t>(n);
    const RegistrationResult r = best_first_register(base, reference, cfg);
    g_traces.push_back(r.score_trace);
    const SimilarityTransform& got = r.transform;
    const double dtheta = std::abs(normalize_angle(got.theta - truth.theta)) * 180.0 / std::numbers::pi;
    const bool ok = dtheta <= 0.5 && std::abs(got.scale - truth.scale) <= 0.02 &&
                    std::abs(got.tx - truth.tx) <= 1.5 && std::abs(got.ty - truth.ty) <= 1.5 &&
                    got.reflect == truth.reflect;
    if (ok) {
      ++passed;
    } else {
      failures += " #" + std::to_string(n);
    }
  }
  const double secs = seconds_since(t0);
  char buf[200];
  std::snprintf(buf, sizeof buf, "%d/20 recovered, %.1f s%s%s", passed, secs, failures.empty() ? "" : ", failed:",
                failures.c_str());
  return {passed >= 18 && secs < 300.0, buf};
}

Outcome mi_properties() {
  std::mt19937_64 rng(2002);
  bool symmetric = true, zero_const = true, self_entropy = true;
  for (int n = 0; n < 50; ++n) {
    const GrayImage a = oracle::random_image(rng, 40, 30);
    const GrayImage b = oracle::random_image(rng, 40, 30);
    symmetric = symmetric && mutual_information(a, b, 32) == mutual_information(b, a, 32);
    zero_const = zero_const && mutual_information(a, GrayImage(40, 30, 0.37), 32) == 0.0 &&
                 mutual_information(GrayImage(40, 30, 0.9), a, 32) == 0.0;
    const BinaryEdgeMap m = oracle::random_mask(rng, 40, 30, 0.05 + 0.9 * (n / 50.0));
    GrayImage bin(40, 30);
    for (std::size_t i = 0; i < m.size(); ++i) bin.data[i] = m.data[i];
    self_entropy = self_entropy && std::abs(mutual_information(bin, bin, 32) - entropy(bin, 32)) <= 1e-9;
  }
  bool monotone = !g_traces.empty();
  for (const auto& trace : g_traces) {
    for (std::size_t i = 1; i < trace.size(); ++i) monotone = monotone && trace[i] >= trace[i - 1];
  }
  const std::string detail = std::string("symmetry ") + (symmetric ? "ok" : "FAIL") + ", constant " +
                             (zero_const ? "ok" : "FAIL") + ", MI(a,a)=H(a) " + (self_entropy ? "ok" : "FAIL") +
                             ", " + std::to_string(g_traces.size()) + " traces monotone " +
                             (monotone ? "ok" : "FAIL");
  return {symmetric && zero_const && self_entropy && monotone, detail};
}

Outcome nms_properties() {
  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<int> side(4, 48);
  std::normal_distribution<double> normal(0.0, 1.0);
  bool ok = true;
  for (int n = 0; n < 100; ++n) {
    const int w = side(rng), h = side(rng);
    GradientPair g{Raster<double>(w, h), Raster<double>(w, h)};
    for (std::size_t i = 0; i < g.gx.size(); ++i) {
      g.gx.data[i] = normal(rng);
      g.gy.data[i] = normal(rng);
    }
    const EdgeMap mag = gradient_magnitude(g);
    const EdgeMap once = non_max_suppression(mag, g);
    const EdgeMap twice = non_max_suppression(once, g);
    ok = ok && once == twice;
    for (std::size_t i = 0; i < mag.size(); ++i) ok = ok && once.data[i] <= mag.data[i];
  }
  return {ok, "100 fields, idempotent and dominated"};
}

Outcome otsu_oracle() {
  std::mt19937_64 rng(4004);
  std::uniform_int_distribution<int> modes(1, 4), centre(0, 255), spread(0, 40), count(20, 3000);
  int agree = 0;
  for (int n = 0; n < 100; ++n) {
    std::array<std::uint64_t, kOtsuBins> hist{};
    std::vector<double> values;
    const int k = modes(rng);
    for (int m = 0; m < k; ++m) {
      const int c = centre(rng), s = spread(rng), cnt = count(rng);
      std::uniform_int_distribution<int> off(-s, s);
      for (int i = 0; i < cnt; ++i) {
        const int b = std::clamp(c + off(rng), 0, 255);
        ++hist[static_cast<std::size_t>(b)];
        values.push_back((b + 0.5) / 256.0);
      }
    }
    agree += otsu_bin(hist) == oracle::otsu_split(values);
  }
  return {agree == 100, std::to_string(agree) + "/100 histograms agree"};
}

Outcome interest_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(5005);
  std::uniform_int_distribution<int> side(8, 64);
  InterestParams params;
  params.extent_px = 1000;
  const int pad = extension_pixels(params.c, params.extent_px);
  int agree = 0;
  bool no_overlap = true, bounded = true;
  std::size_t total_boxes = 0;
  for (int n = 0; n < 100; ++n) {
    const BinaryEdgeMap m = oracle::random_stroke_mask(rng, side(rng), side(rng));
    const auto boxes = centres_of_interest(m, params);
    agree += oracle::as_oracle_boxes(boxes) == oracle::centres(m, params.a, params.p, pad);
    total_boxes += boxes.size();
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      for (std::size_t j = i + 1; j < boxes.size(); ++j) no_overlap = no_overlap && !boxes[i].overlaps(boxes[j]);
    }
    std::vector<InterestBox> initial;
    for (const Component& c : filter_components(connected_components(m), params)) {
      initial.push_back(pad_box(bounding_box(c), pad, m.width, m.height));
    }
    const MergeOutcome merged = merge_overlapping_counted(initial);
    bounded = bounded && merged.merges <= initial.size() && merged.boxes == boxes;
  }
  const double secs = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d/100 masks agree, %zu boxes, %.2f s", agree, total_boxes, secs);
  return {agree == 100 && no_overlap && bounded && secs < 30.0, buf};
}

// Photograph, plus a transformed copy carrying two strokes that pass the filters and one that does not.
struct StrokePair {
  fs::path photo, painting;
  std::vector<InterestBox> strokes;
};

StrokePair write_stroke_pair(const fs::path& dir) {
  const int n = 256;
  const GrayImage photo = synthetic::smooth_scene(n, n, 11);
  GrayImage painting = apply_transform(photo, SimilarityTransform{0.08, 1.06, 7.0, -5.0, false}, n, n);
  StrokePair p{dir / "photograph.png", dir / "painting.png", {{40, 50, 110, 66, 1}, {170, 150, 194, 220, 1}}};
  for (const InterestBox& s : p.strokes) synthetic::paint_rect(painting, s.x0, s.y0, s.x1, s.y1, s.y0 < 100 ? 0.05 : 0.95);
  synthetic::paint_rect(painting, 210, 30, 216, 36, 0.0);
  fs::create_directories(dir);
  save_gray(photo, p.photo.string());
  save_gray(painting, p.painting.string());
  return p;
}

PipelineConfig stroke_config(const StrokePair& p, const fs::path& out) {
  PipelineConfig cfg;
  cfg.moving_path = p.photo.string();
  cfg.reference_path = p.painting.string();
  cfg.multiscale.target_long_side = 256;
  cfg.search.rng_seed = 9;
  cfg.output_dir = out.string();
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const fs::path& work_dir() {
  static const fs::path d = [] {
    const fs::path p = fs::temp_directory_path() / "coi_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

Outcome end_to_end() {
  const StrokePair p = write_stroke_pair(work_dir() / "pair");
  const PipelineReport a = run_pipeline(stroke_config(p, work_dir() / "e2e_a"));
  const PipelineReport b = run_pipeline(stroke_config(p, work_dir() / "e2e_b"));
  bool covered = a.boxes.size() == 2;
  for (const InterestBox& s : p.strokes) {
    bool any = false;
    for (const InterestBox& box : a.boxes) {
      any = any || (box.x0 <= s.x0 && box.y0 <= s.y0 && box.x1 >= s.x1 && box.y1 >= s.y1);
    }
    covered = covered && any;
  }
  const bool deterministic = a.boxes == b.boxes && a.registration == b.registration;
  return {covered && deterministic, std::to_string(a.boxes.size()) + " boxes, strokes covered " +
                                        (covered ? "yes" : "no") + ", deterministic " +
                                        (deterministic ? "yes" : "no")};
}

Outcome reproducibility() {
  const StrokePair p = write_stroke_pair(work_dir() / "pair");
  const fs::path a = work_dir() / "cli_a", b = work_dir() / "cli_b";
  auto run = [&](const fs::path& out) {
    const std::string args[] = {"coi", "pipeline", p.photo.string(), p.painting.string(), "--long-side", "256",
                                "--seed", "9", "--out", out.string()};
    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    std::ostringstream sink_out, sink_err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), sink_out, sink_err);
  };
  if (run(a) != 0 || run(b) != 0) return {false, "pipeline command failed"};
  int files = 0, identical = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    if (name.extension() != ".png" && name.extension() != ".json") continue;
    ++files;
    identical += slurp(entry.path()) == slurp(b / name);
  }
  return {files == 9 && identical == files, std::to_string(identical) + "/" + std::to_string(files) +
                                                 " artifacts byte-identical"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"sobel oracle equivalence", sobel_oracle},
      {"step-edge analytic check", step_edge},
      {"registration recovery", registration_recovery},
      {"mutual information properties", mi_properties},
      {"nms idempotence and dominance", nms_properties},
      {"otsu exhaustive oracle", otsu_oracle},
      {"interest extraction oracle", interest_oracle},
      {"end-to-end synthetic strokes", end_to_end},
      {"pipeline reproducibility", reproducibility},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %s  (%s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
