#pragma once

#include <algorithm>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coi/pipeline.hpp"

namespace coi::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kDegenerate = 4 };

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline CropRect parse_crop(const std::string& s) {
  std::vector<int> v;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("--crop expects x,y,width,height integers, got '" + s + "'");
    }
  }
  if (v.size() != 4) throw UsageError("--crop expects x,y,width,height, got '" + s + "'");
  return {v[0], v[1], v[2], v[3]};
}

inline BinarizeMethod parse_threshold(const std::string& s) {
  if (s == "otsu") return OtsuThreshold{};
  try {
    std::size_t used = 0;
    const double t = std::stod(s, &used);
    if (used == s.size()) return FixedThreshold{t};
  } catch (const std::exception&) {
  }
  throw UsageError("--threshold expects 'otsu' or a number in [0,1], got '" + s + "'");
}

// Collects flags for one subcommand. Each flag that was actually given is replayed onto
// a PipelineConfig after the config file, so precedence is flags > file > defaults.
class ConfigFlags {
 public:
  explicit ConfigFlags(CLI::App& app) : app_(app) {}

  void add_config_file() {
    app_.add_option("--config", config_path_, "JSON config (or a previous report.json)");
  }

  void add_edge_options() {
    bind<std::vector<double>>("--scales", "Edge scales, comma separated",
                              [](PipelineConfig& c, const auto& v) { c.multiscale.scales = v; })
        ->delimiter(',');
    bind<int>("--long-side", "Long side of the edge-map frame",
              [](PipelineConfig& c, int v) { c.multiscale.target_long_side = v; });
    flag("--nms-after-average", "Run NMS once on the averaged map instead of per scale",
         [](PipelineConfig& c) { c.multiscale.nms_per_scale = false; });
    bind<std::string>("--threshold", "'otsu' or a fixed value in [0,1]",
                      [](PipelineConfig& c, const std::string& v) { c.binarize = parse_threshold(v); });
  }

  void add_search_options() {
    bind<int>("--bins", "MI histogram bins", [](PipelineConfig& c, int v) { c.search.histogram_bins = v; });
    bind<std::uint64_t>("--seed", "Search RNG seed",
                        [](PipelineConfig& c, std::uint64_t v) { c.search.rng_seed = v; });
    bind<int>("--children", "Children per iteration",
              [](PipelineConfig& c, int v) { c.search.children_per_iter = v; });
    bind<double>("--step-theta", "Initial rotation step (rad)",
                 [](PipelineConfig& c, double v) { c.search.step_theta = v; });
    bind<double>("--step-log-scale", "Initial log-scale step",
                 [](PipelineConfig& c, double v) { c.search.step_log_scale = v; });
    bind<double>("--step-translation", "Initial translation step, fraction of the long side",
                 [](PipelineConfig& c, double v) { c.search.step_translation_frac = v; });
    bind<double>("--decay", "Step decay on a failed iteration",
                 [](PipelineConfig& c, double v) { c.search.decay = v; });
    bind<double>("--min-step", "Stop once the step is below this fraction of the initial",
                 [](PipelineConfig& c, double v) { c.search.min_step_fraction = v; });
    bind<int>("--max-iters", "Iterations per pyramid level",
              [](PipelineConfig& c, int v) { c.search.max_iters = v; });
    bind<int>("--pyramid-levels", "Coarse-to-fine levels (1 disables)",
              [](PipelineConfig& c, int v) { c.search.pyramid_levels = v; });
    bind<int>("--max-working-side", "Register on a copy downscaled to this long side (0 = off)",
              [](PipelineConfig& c, int v) { c.search.max_working_side = v; });
    flag("--mask-overlap", "Exclude out-of-overlap pixels from the MI histogram",
         [](PipelineConfig& c) { c.search.mask_overlap = true; });
  }

  void add_interest_options() {
    bind<double>("--a", "Minimum component area (exclusive)", [](PipelineConfig& c, double v) { c.interest.a = v; });
    bind<double>("--p", "Minimum component perimeter (exclusive)",
                 [](PipelineConfig& c, double v) { c.interest.p = v; });
    bind<double>("--c", "Box extension fraction", [](PipelineConfig& c, double v) { c.interest.c = v; });
    bind<int>("--extent", "Long side used to convert c to pixels (0 = mask long side)",
              [](PipelineConfig& c, int v) { c.interest.extent_px = v; });
  }

  void add_perspective() {
    bind<std::string>("--perspective", "painter (photograph moves) or viewer (painting moves)",
                      [](PipelineConfig& c, const std::string& v) { c.perspective = perspective_from_string(v); })
        ->check(CLI::IsMember({"painter", "viewer"}));
  }

  void add_crop() {
    bind<std::string>("--crop", "x,y,width,height rectangle cut from the photograph",
                      [](PipelineConfig& c, const std::string& v) { c.crop = parse_crop(v); });
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (!config_path_.empty()) apply_params_json(cfg, read_json_file(config_path_));
    for (const auto& s : setters_) s(cfg);
    return cfg;
  }

 private:
  template <typename T, typename F>
  CLI::Option* bind(const std::string& name, const std::string& help, F setter) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_.add_option(name, *value, help);
    setters_.push_back([opt, value, setter](PipelineConfig& c) {
      if (opt->count() > 0) setter(c, *value);
    });
    return opt;
  }

  template <typename F>
  void flag(const std::string& name, const std::string& help, F setter) {
    CLI::Option* opt = app_.add_flag(name, help);
    setters_.push_back([opt, setter](PipelineConfig& c) {
      if (opt->count() > 0) setter(c);
    });
  }

  CLI::App& app_;
  std::string config_path_;
  std::vector<std::function<void(PipelineConfig&)>> setters_;
};

namespace detail {

inline void check_crop_fits(const PipelineConfig& cfg) {
  if (!cfg.crop) return;
  const RgbImage img = load_rgb(cfg.moving_path);
  const CropRect& r = *cfg.crop;
  if (r.x < 0 || r.y < 0 || r.width <= 0 || r.height <= 0 || r.x + r.width > img.width ||
      r.y + r.height > img.height) {
    throw UsageError("crop rectangle lies outside the " + std::to_string(img.width) + "x" +
                     std::to_string(img.height) + " photograph");
  }
}

inline void add_pipeline_options(CLI::App& app, ConfigFlags& flags, std::string& moving,
                                 std::string& reference, std::string& out_dir) {
  app.add_option("photograph", moving, "Photograph (moving in the painter's perspective)");
  app.add_option("painting", reference, "Painting (reference in the painter's perspective)");
  app.add_option("-o,--out", out_dir, "Output directory");
  flags.add_config_file();
  flags.add_perspective();
  flags.add_crop();
  flags.add_edge_options();
  flags.add_search_options();
  flags.add_interest_options();
}

inline PipelineConfig finish_pipeline_config(const ConfigFlags& flags, const std::string& moving,
                                             const std::string& reference, const std::string& out_dir) {
  PipelineConfig cfg = flags.resolve();
  if (!moving.empty()) cfg.moving_path = moving;
  if (!reference.empty()) cfg.reference_path = reference;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  check_crop_fits(cfg);
  return cfg;
}

}  // namespace detail

// Parses pipeline arguments (no program or subcommand name) into a validated config.
// Throws UsageError, or IoError when the config file or photograph cannot be read.
inline PipelineConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app("pipeline");
  ConfigFlags flags(app);
  std::string moving, reference, out_dir;
  detail::add_pipeline_options(app, flags, moving, reference, out_dir);
  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  return detail::finish_pipeline_config(flags, moving, reference, out_dir);
}

// Entry point for the `coi` tool. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app("Centres of interest: compare a painting with its source photograph");
  app.require_subcommand(1);

  // edges
  CLI::App* edges = app.add_subcommand("edges", "Multiscale Sobel (or imported) edge map of one image");
  ConfigFlags edges_flags(*edges);
  std::string edges_image, edges_out, edges_binary, edges_import;
  edges->add_option("image", edges_image, "Grayscale or colour image")->required();
  edges->add_option("-o,--output", edges_out, "Edge map PNG/PGM")->required();
  edges->add_option("--binary", edges_binary, "Also write the binarized map here");
  edges->add_option("--import", edges_import, "Take strengths from this externally computed edge map");
  edges_flags.add_config_file();
  edges_flags.add_edge_options();

  // register
  CLI::App* reg = app.add_subcommand("register", "Best-first MI registration of moving onto reference");
  ConfigFlags reg_flags(*reg);
  std::string reg_moving, reg_reference, reg_out;
  reg->add_option("moving", reg_moving)->required();
  reg->add_option("reference", reg_reference)->required();
  reg->add_option("-o,--output", reg_out, "Registration JSON")->required();
  reg_flags.add_config_file();
  reg_flags.add_crop();
  reg_flags.add_search_options();

  // warp
  CLI::App* warp = app.add_subcommand("warp", "Resample moving into the reference frame");
  ConfigFlags warp_flags(*warp);
  std::string warp_moving, warp_reference, warp_registration, warp_out;
  warp->add_option("moving", warp_moving)->required();
  warp->add_option("reference", warp_reference, "Supplies the output frame")->required();
  warp->add_option("--registration", warp_registration, "Registration JSON")->required();
  warp->add_option("-o,--output", warp_out, "Warped image")->required();
  warp_flags.add_config_file();
  warp_flags.add_crop();

  // diff
  CLI::App* diff = app.add_subcommand("diff", "Classify two binary edge maps and render the overlay");
  ConfigFlags diff_flags(*diff);
  std::string diff_moving, diff_reference, diff_out, diff_counts, diff_residual;
  diff->add_option("moving_edges", diff_moving, "Binary edge map of the moving image")->required();
  diff->add_option("reference_edges", diff_reference, "Binary edge map of the reference image")->required();
  diff->add_option("-o,--output", diff_out, "Overlay PNG")->required();
  diff->add_option("--counts", diff_counts, "Class counts JSON");
  diff->add_option("--residual", diff_residual, "Painting-only mask");
  diff_flags.add_config_file();
  diff_flags.add_perspective();

  // centres
  CLI::App* centres = app.add_subcommand("centres", "Centres of interest from a painting-only mask");
  ConfigFlags centres_flags(*centres);
  std::string centres_mask, centres_out, centres_annotate, centres_annotated;
  centres->add_option("mask", centres_mask, "Binary residual mask")->required();
  centres->add_option("-o,--output", centres_out, "Boxes JSON")->required();
  centres->add_option("--annotate", centres_annotate, "Image to draw the boxes on");
  centres->add_option("--annotated", centres_annotated, "Where to write the annotated image");
  centres_flags.add_config_file();
  centres_flags.add_interest_options();

  // pipeline
  CLI::App* pipe = app.add_subcommand("pipeline", "Register, compare edges and extract centres of interest");
  ConfigFlags pipe_flags(*pipe);
  std::string pipe_moving, pipe_reference, pipe_out;
  detail::add_pipeline_options(*pipe, pipe_flags, pipe_moving, pipe_reference, pipe_out);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        app.exit(e, out, err);
        return kOk;
      }
      throw UsageError(e.what());
    }

    if (edges->parsed()) {
      const PipelineConfig cfg = edges_flags.resolve();
      cfg.multiscale.validate();
      const GrayImage img = load_gray(edges_image);
      EdgeMap m;
      if (edges_import.empty()) {
        m = persisted_edge_map(img, cfg.multiscale);
      } else {
        const auto [w, h] = fit_long_side(img.width, img.height, cfg.multiscale.target_long_side);
        m = quantize_8bit(import_edge_map(edges_import, w, h));
      }
      save_gray(m, edges_out);
      if (!edges_binary.empty()) save_mask(binarize(m, cfg.binarize), edges_binary);
    } else if (reg->parsed()) {
      const PipelineConfig cfg = reg_flags.resolve();
      GrayImage moving = load_gray(reg_moving);
      if (cfg.crop) moving = crop(moving, *cfg.crop);
      const RegistrationResult r = best_first_register(moving, load_gray(reg_reference), cfg.search);
      write_json_file(to_json(r), reg_out);
      out << to_json(r).dump() << '\n';
    } else if (warp->parsed()) {
      const PipelineConfig cfg = warp_flags.resolve();
      GrayImage moving = load_gray(warp_moving);
      if (cfg.crop) moving = crop(moving, *cfg.crop);
      const GrayImage reference = load_gray(warp_reference);
      const RegistrationResult r = registration_from_json(read_json_file(warp_registration));
      save_gray(quantize_8bit(apply_transform(moving, r.transform, reference.width, reference.height)),
                warp_out);
    } else if (diff->parsed()) {
      const PipelineConfig cfg = diff_flags.resolve();
      const DifferenceMap d = classify_difference(load_mask(diff_moving), load_mask(diff_reference));
      save_rgb(render_overlay(d, OverlayPalette::for_perspective(cfg.perspective)), diff_out);
      const ClassCounts counts = count_classes(d);
      if (!diff_counts.empty()) write_json_file(to_json(counts), diff_counts);
      if (!diff_residual.empty()) save_mask(residual_mask(d, painting_only_class(cfg.perspective)), diff_residual);
      out << to_json(counts).dump() << '\n';
    } else if (centres->parsed()) {
      const PipelineConfig cfg = centres_flags.resolve();
      const BinaryEdgeMap mask = load_mask(centres_mask);
      const auto boxes = centres_of_interest(mask, cfg.interest);
      write_json_file(to_json(boxes), centres_out);
      if (!centres_annotate.empty() && !centres_annotated.empty()) {
        const RgbImage base = resize_rgb(load_rgb(centres_annotate), mask.width, mask.height);
        save_rgb(draw_boxes(base, boxes, kBoxColor), centres_annotated);
      }
      out << boxes.size() << " centre(s) of interest\n";
    } else if (pipe->parsed()) {
      const PipelineConfig cfg = detail::finish_pipeline_config(pipe_flags, pipe_moving, pipe_reference, pipe_out);
      const PipelineReport report = run_pipeline(cfg);
      out << "registration " << to_json(report.registration).dump() << '\n'
          << "diff " << to_json(report.diff_counts).dump() << '\n'
          << report.boxes.size() << " centre(s) of interest, report in "
          << (std::filesystem::path(cfg.output_dir) / ArtifactNames::report).string() << '\n';
    }
    return kOk;
  } catch (const DegenerateInputError& e) {
    err << "error: " << e.what() << '\n';
    return kDegenerate;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "usage error: bad JSON value: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace coi::cli
