#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coi/diffmap.hpp"
#include "coi/edges.hpp"
#include "coi/errors.hpp"
#include "coi/image_io.hpp"
#include "coi/interest.hpp"
#include "coi/json.hpp"
#include "coi/raster.hpp"
#include "coi/registration.hpp"

namespace coi {

struct CropRect {
  int x = 0, y = 0, width = 0, height = 0;
  friend bool operator==(const CropRect&, const CropRect&) = default;
};

template <typename T>
Raster<T> crop(const Raster<T>& img, const CropRect& r) {
  if (r.width <= 0 || r.height <= 0 || r.x < 0 || r.y < 0 || r.x + r.width > img.width ||
      r.y + r.height > img.height) {
    throw std::invalid_argument("crop rectangle " + std::to_string(r.x) + "," + std::to_string(r.y) +
                                "," + std::to_string(r.width) + "," + std::to_string(r.height) +
                                " lies outside the " + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + " image");
  }
  Raster<T> out(r.width, r.height);
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) out.at(x, y) = img.at(r.x + x, r.y + y);
  }
  return out;
}

// Photograph and painting paths are given once; the perspective decides which of the
// two is registered onto the other.
struct PipelineConfig {
  std::string moving_path;     // photograph
  std::string reference_path;  // painting
  std::optional<CropRect> crop;  // applied to the photograph before registration
  Perspective perspective = Perspective::Painter;
  MultiscaleConfig multiscale;
  SearchConfig search;
  InterestParams interest;
  BinarizeMethod binarize = OtsuThreshold{};
  std::string output_dir = "out";

  void validate() const {
    if (moving_path.empty() || reference_path.empty()) {
      throw std::invalid_argument("both image paths are required");
    }
    if (crop && (crop->width <= 0 || crop->height <= 0 || crop->x < 0 || crop->y < 0)) {
      throw std::invalid_argument("crop must have non-negative origin and positive size");
    }
    if (const auto* f = std::get_if<FixedThreshold>(&binarize); f && !(f->t >= 0.0 && f->t <= 1.0)) {
      throw std::invalid_argument("threshold must lie in [0,1]");
    }
    multiscale.validate();
    search.validate();
    interest.validate();
  }
};

inline std::string to_string(Perspective p) { return p == Perspective::Painter ? "painter" : "viewer"; }

inline Perspective perspective_from_string(const std::string& s) {
  if (s == "painter") return Perspective::Painter;
  if (s == "viewer") return Perspective::Viewer;
  throw std::invalid_argument("perspective must be 'painter' or 'viewer', got '" + s + "'");
}

// Every effective parameter, flat, keyed by the CLI flag names. The output directory is
// deliberately absent: it does not influence any artifact.
inline nlohmann::json params_to_json(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["moving"] = cfg.moving_path;
  j["reference"] = cfg.reference_path;
  j["crop"] = cfg.crop ? nlohmann::json{{"x", cfg.crop->x},
                                        {"y", cfg.crop->y},
                                        {"width", cfg.crop->width},
                                        {"height", cfg.crop->height}}
                       : nlohmann::json(nullptr);
  j["perspective"] = to_string(cfg.perspective);
  j["scales"] = cfg.multiscale.scales;
  j["long_side"] = cfg.multiscale.target_long_side;
  j["nms_per_scale"] = cfg.multiscale.nms_per_scale;
  if (const auto* f = std::get_if<FixedThreshold>(&cfg.binarize)) {
    j["threshold"] = f->t;
  } else {
    j["threshold"] = "otsu";
  }
  j["a"] = cfg.interest.a;
  j["p"] = cfg.interest.p;
  j["c"] = cfg.interest.c;
  j["extent"] = cfg.interest.extent_px;
  const SearchConfig& s = cfg.search;
  j["children"] = s.children_per_iter;
  j["step_theta"] = s.step_theta;
  j["step_log_scale"] = s.step_log_scale;
  j["step_translation"] = s.step_translation_frac;
  j["decay"] = s.decay;
  j["min_step"] = s.min_step_fraction;
  j["max_iters"] = s.max_iters;
  j["bins"] = s.histogram_bins;
  j["pyramid_levels"] = s.pyramid_levels;
  j["seed"] = s.rng_seed;
  j["mask_overlap"] = s.mask_overlap;
  j["max_working_side"] = s.max_working_side;
  return j;
}

// Overlays the keys present in `j` onto `cfg`. Unknown keys are rejected. A full
// report.json is accepted too; its "params" block is used.
inline void apply_params_json(PipelineConfig& cfg, const nlohmann::json& doc) {
  const nlohmann::json& j = doc.contains("params") && doc.at("params").is_object() ? doc.at("params") : doc;
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "moving") cfg.moving_path = v.get<std::string>();
    else if (key == "reference") cfg.reference_path = v.get<std::string>();
    else if (key == "output_dir") cfg.output_dir = v.get<std::string>();
    else if (key == "crop") {
      if (v.is_null()) cfg.crop.reset();
      else cfg.crop = CropRect{v.at("x").get<int>(), v.at("y").get<int>(), v.at("width").get<int>(),
                               v.at("height").get<int>()};
    }
    else if (key == "perspective") cfg.perspective = perspective_from_string(v.get<std::string>());
    else if (key == "scales") cfg.multiscale.scales = v.get<std::vector<double>>();
    else if (key == "long_side") cfg.multiscale.target_long_side = v.get<int>();
    else if (key == "nms_per_scale") cfg.multiscale.nms_per_scale = v.get<bool>();
    else if (key == "threshold") {
      if (v.is_string() && v.get<std::string>() == "otsu") cfg.binarize = OtsuThreshold{};
      else if (v.is_number()) cfg.binarize = FixedThreshold{v.get<double>()};
      else throw std::invalid_argument("threshold must be \"otsu\" or a number in [0,1]");
    }
    else if (key == "a") cfg.interest.a = v.get<double>();
    else if (key == "p") cfg.interest.p = v.get<double>();
    else if (key == "c") cfg.interest.c = v.get<double>();
    else if (key == "extent") cfg.interest.extent_px = v.get<int>();
    else if (key == "children") cfg.search.children_per_iter = v.get<int>();
    else if (key == "step_theta") cfg.search.step_theta = v.get<double>();
    else if (key == "step_log_scale") cfg.search.step_log_scale = v.get<double>();
    else if (key == "step_translation") cfg.search.step_translation_frac = v.get<double>();
    else if (key == "decay") cfg.search.decay = v.get<double>();
    else if (key == "min_step") cfg.search.min_step_fraction = v.get<double>();
    else if (key == "max_iters") cfg.search.max_iters = v.get<int>();
    else if (key == "bins") cfg.search.histogram_bins = v.get<int>();
    else if (key == "pyramid_levels") cfg.search.pyramid_levels = v.get<int>();
    else if (key == "seed") cfg.search.rng_seed = v.get<std::uint64_t>();
    else if (key == "mask_overlap") cfg.search.mask_overlap = v.get<bool>();
    else if (key == "max_working_side") cfg.search.max_working_side = v.get<int>();
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("malformed JSON in '" + path + "': " + e.what());
  }
}

inline void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline RgbImage resize_rgb(const RgbImage& img, int w, int h) {
  const GrayImage r = resize_bilinear(channel(img, 0), w, h);
  const GrayImage g = resize_bilinear(channel(img, 1), w, h);
  const GrayImage b = resize_bilinear(channel(img, 2), w, h);
  RgbImage out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data[i] = {to_byte(r.data[i]), to_byte(g.data[i]), to_byte(b.data[i])};
  }
  return out;
}

inline RgbImage warp_rgb(const RgbImage& img, const SimilarityTransform& t, int w, int h) {
  const GrayImage r = apply_transform(channel(img, 0), t, w, h);
  const GrayImage g = apply_transform(channel(img, 1), t, w, h);
  const GrayImage b = apply_transform(channel(img, 2), t, w, h);
  RgbImage out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data[i] = {to_byte(r.data[i]), to_byte(g.data[i]), to_byte(b.data[i])};
  }
  return out;
}

// Edge map as persisted: multiscale strengths snapped to the 8-bit grid, so a map
// reloaded from disk binarizes identically.
inline EdgeMap persisted_edge_map(const GrayImage& img, const MultiscaleConfig& cfg) {
  return quantize_8bit(multiscale_edge_map(img, cfg));
}

inline constexpr Rgb kBoxColor{255, 0, 0};

struct ArtifactNames {
  static constexpr const char* warped = "warped.png";
  static constexpr const char* edges_moving = "edges_moving.png";
  static constexpr const char* edges_reference = "edges_reference.png";
  static constexpr const char* binary_moving = "edges_moving_binary.png";
  static constexpr const char* binary_reference = "edges_reference_binary.png";
  static constexpr const char* overlay = "overlay.png";
  static constexpr const char* residual = "residual.png";
  static constexpr const char* centres = "centres.png";
  static constexpr const char* report = "report.json";
};

struct PipelineReport {
  RegistrationResult registration;
  ClassCounts diff_counts;
  std::vector<InterestBox> boxes;
  nlohmann::json json;
};

namespace detail {

template <typename F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(std::string(stage) + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(std::string(stage) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(stage) + ": " + e.what());
  }
}

}  // namespace detail

inline PipelineReport run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.output_dir);
  detail::run_stage("output", [&] {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    return 0;
  });
  auto out_path = [&](const char* name) { return (out_dir / name).string(); };

  RgbImage photo = detail::run_stage("load", [&] { return load_rgb(cfg.moving_path); });
  RgbImage painting = detail::run_stage("load", [&] { return load_rgb(cfg.reference_path); });
  if (cfg.crop) photo = detail::run_stage("crop", [&] { return crop(photo, *cfg.crop); });

  const bool painter = cfg.perspective == Perspective::Painter;
  const RgbImage& moving_rgb = painter ? photo : painting;
  const RgbImage& reference_rgb = painter ? painting : photo;
  const GrayImage moving = to_grayscale(moving_rgb);
  const GrayImage reference = to_grayscale(reference_rgb);

  PipelineReport report;
  report.registration =
      detail::run_stage("register", [&] { return best_first_register(moving, reference, cfg.search); });
  const SimilarityTransform& t = report.registration.transform;

  const GrayImage warped = quantize_8bit(apply_transform(moving, t, reference.width, reference.height));
  save_gray(warped, out_path(ArtifactNames::warped));

  const EdgeMap edges_m = detail::run_stage("edges", [&] { return persisted_edge_map(warped, cfg.multiscale); });
  const EdgeMap edges_r = detail::run_stage("edges", [&] { return persisted_edge_map(reference, cfg.multiscale); });
  save_gray(edges_m, out_path(ArtifactNames::edges_moving));
  save_gray(edges_r, out_path(ArtifactNames::edges_reference));

  const BinaryEdgeMap bin_m = binarize(edges_m, cfg.binarize);
  const BinaryEdgeMap bin_r = binarize(edges_r, cfg.binarize);
  save_mask(bin_m, out_path(ArtifactNames::binary_moving));
  save_mask(bin_r, out_path(ArtifactNames::binary_reference));

  const DifferenceMap diff = classify_difference(bin_m, bin_r);
  report.diff_counts = count_classes(diff);
  save_rgb(render_overlay(diff, OverlayPalette::for_perspective(cfg.perspective)),
           out_path(ArtifactNames::overlay));

  const BinaryEdgeMap residual = residual_mask(diff, painting_only_class(cfg.perspective));
  save_mask(residual, out_path(ArtifactNames::residual));
  report.boxes = centres_of_interest(residual, cfg.interest);

  // Boxes live in the edge-map frame; draw them over the painting in that frame.
  const RgbImage painting_in_frame =
      painter ? painting : warp_rgb(painting, t, reference.width, reference.height);
  save_rgb(draw_boxes(resize_rgb(painting_in_frame, residual.width, residual.height), report.boxes, kBoxColor),
           out_path(ArtifactNames::centres));

  nlohmann::json artifacts;
  for (const char* name : {ArtifactNames::warped, ArtifactNames::edges_moving, ArtifactNames::edges_reference,
                           ArtifactNames::binary_moving, ArtifactNames::binary_reference,
                           ArtifactNames::overlay, ArtifactNames::residual, ArtifactNames::centres}) {
    artifacts.push_back(name);
  }
  report.json = {{"params", params_to_json(cfg)},
                 {"registration", to_json(report.registration)},
                 {"diff_counts", to_json(report.diff_counts)},
                 {"boxes", to_json(report.boxes)},
                 {"artifact_paths", artifacts}};
  write_json_file(report.json, out_path(ArtifactNames::report));
  return report;
}

}  // namespace coi
