#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "slscan/calibration.hpp"
#include "slscan/decode.hpp"
#include "slscan/error.hpp"
#include "slscan/evaluate.hpp"
#include "slscan/frame_io.hpp"
#include "slscan/image_io.hpp"
#include "slscan/patterns.hpp"
#include "slscan/pipeline.hpp"
#include "slscan/ply.hpp"
#include "slscan/sync.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slscan;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

struct GenPatternsArgs {
  fs::path out = "patterns";
  std::string orientation = "vertical";
  int steps = 3;
  int n_fringe = 16;
  int width = 912;
  int height = 1140;
  int bits = 8;
  std::string format = "pgm";
};

int gen_patterns(const GenPatternsArgs& a, const json& cfg, const CLI::App& cmd) {
  PatternSpec spec;
  if (cfg.contains("pattern")) spec = pattern_spec_from_json(cfg["pattern"].dump());
  if (cmd.count("--orientation") || !cfg.contains("pattern")) spec.orientation = orientation_from_string(a.orientation);
  if (cmd.count("--steps") || !cfg.contains("pattern")) spec.steps = a.steps;
  if (cmd.count("--n-fringe") || !cfg.contains("pattern")) spec.n_fringe = a.n_fringe;
  if (cmd.count("--width") || !cfg.contains("pattern")) spec.projector_width = a.width;
  if (cmd.count("--height") || !cfg.contains("pattern")) spec.projector_height = a.height;
  spec.validate();
  if (a.format == "png" && a.bits != 8 && a.bits != 16) throw ConfigError("PNG patterns need --bits 8 or 16");

  const PatternSequence seq = quantize(generate(spec), a.bits);
  fs::create_directories(a.out);
  json meta{{"pattern", json::parse(pattern_spec_to_json(spec))}, {"bit_depth", a.bits}, {"files", json::array()}};
  for (FringeSet set : {FringeSet::high, FringeSet::unit}) {
    for (int step = 0; step < spec.steps; ++step) {
      const std::string name = pattern_file_name(set, step, a.format);
      write_gray(a.out / name, from_unit(seq.image(set, step), a.bits));
      meta["files"].push_back(name);
    }
  }
  write_text(a.out / "patterns.json", meta.dump(2) + "\n");
  std::cout << "wrote " << 2 * spec.steps << " patterns to " << a.out.string() << "\n";
  return 0;
}

struct SimulateArgs {
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed;
};

int simulate(const SimulateArgs& a, const std::optional<fs::path>& config_path) {
  if (!config_path) throw ConfigError("simulate needs --config");
  SimulationConfig cfg = SimulationConfig::load(*config_path);
  if (a.out) cfg.output_dir = *a.out;
  if (a.seed) cfg.render.seed = *a.seed;
  const SimulationOutputs out = run_simulate(cfg);
  std::cout << "rig:    " << out.rig.string() << "\n"
            << "frames: " << out.frames.string() << "\n"
            << "truth:  " << out.truth.string() << "\n";
  return 0;
}

int sync_check(const fs::path& manifest) {
  const SyncStreams s = read_sync_manifest(manifest);
  const SyncOutput out = assemble(s.triggers, s.images, s.sequence_length, s.config);
  json report;
  report["complete"] = json::array();
  for (const auto& set : out.sets) {
    json ids = json::array();
    for (const auto& im : set.images) ids.push_back(im.id);
    report["complete"].push_back({{"sequence", set.sequence_id}, {"first_trigger", set.first_trigger_time}, {"images", ids}});
  }
  report["rejected"] = json::array();
  for (const auto& r : out.incomplete) {
    report["rejected"].push_back({{"sequence", r.sequence_id}, {"missing_slots", r.missing_slots}, {"reason", r.reason}});
  }
  report["conflicts"] = json::array();
  for (const auto& c : out.conflicts) {
    report["conflicts"].push_back({{"sequence", c.sequence_id},
                                   {"pattern_index", c.pattern_index},
                                   {"kept", c.kept_image},
                                   {"rejected", c.rejected_images}});
  }
  report["unmatched_images"] = out.unmatched_images;
  std::cout << report.dump(2) << "\n";
  if (out.sets.empty()) {
    std::cerr << "sync-check: no complete frame set\n";
    return exit_code(ErrorKind::data);
  }
  return 0;
}

struct DecodeArgs {
  std::optional<fs::path> frames;
  fs::path out = "decoded";
  std::optional<double> threshold;
};

int decode(const DecodeArgs& a, const json& cfg) {
  fs::path manifest;
  if (a.frames) {
    manifest = *a.frames;
  } else if (cfg.contains("frames")) {
    manifest = cfg["frames"].get<std::string>();
  } else {
    throw ConfigError("decode needs --frames");
  }
  DecodeOptions opts;
  opts.modulation_threshold = a.threshold.value_or(cfg.value("modulation_threshold", opts.modulation_threshold));
  const FrameSet frames = read_frame_set(manifest);
  fs::create_directories(a.out);
  const DecodeResult r = decode_full(frames, opts);
  write_map_bundle(a.out / "maps.json", {{"absolute_phase", r.phases.absolute},
                                         {"projector_coord", r.coords.coord},
                                         {"modulation", r.phases.modulation}});
  GrayImage mask;
  mask.maxval = 255;
  mask.pixels = Image<std::uint16_t>(r.coords.mask.width(), r.coords.mask.height());
  std::size_t valid = 0;
  for (std::size_t i = 0; i < mask.pixels.size(); ++i) {
    mask.pixels[i] = r.coords.mask[i] ? 255 : 0;
    valid += r.coords.mask[i] != 0;
  }
  write_pgm(a.out / "mask.pgm", mask);
  std::cout << "valid pixels: " << valid << " of " << mask.pixels.size() << "\n";
  return 0;
}

struct ReconstructArgs {
  std::optional<fs::path> rig;
  std::optional<fs::path> frames;
  std::optional<fs::path> out;
  std::optional<std::string> format;
  bool motion_comp = false;
  std::optional<std::string> motion_axis;
  std::optional<int> reference;
  std::optional<std::string> interpolation;
  std::optional<fs::path> debug_motion;
  std::optional<fs::path> report;
  std::optional<double> threshold;
  std::optional<std::string> projector_distortion;
};

int reconstruct_cmd(const ReconstructArgs& a, const std::optional<fs::path>& config_path) {
  PipelineConfig c = config_path ? PipelineConfig::load(*config_path) : PipelineConfig{};
  if (a.rig) c.rig = *a.rig;
  if (a.frames) c.frames = *a.frames;
  if (a.out) c.output = *a.out;
  if (a.format) {
    if (*a.format == "ascii") {
      c.ply_format = PlyFormat::ascii;
    } else if (*a.format == "binary") {
      c.ply_format = PlyFormat::binary_little_endian;
    } else {
      throw ConfigError("--format must be ascii or binary");
    }
  }
  if (a.motion_comp) c.options.motion.enabled = true;
  if (a.motion_axis) c.options.motion.axis = axis_constraint_from_string(*a.motion_axis);
  if (a.reference) c.options.motion.reference = *a.reference;
  if (a.interpolation) c.options.motion.interpolation = interpolation_from_string(*a.interpolation);
  if (a.debug_motion) c.debug_motion = *a.debug_motion;
  if (a.report) c.report = *a.report;
  if (a.threshold) c.options.decode.modulation_threshold = *a.threshold;
  if (a.projector_distortion) {
    c.options.triangulation.projector_distortion = projector_distortion_mode_from_string(*a.projector_distortion);
  }
  if (c.rig.empty() && c.frames.has_parent_path()) {
    const fs::path guess = c.frames.parent_path().parent_path() / "rig.json";
    if (fs::exists(guess)) c.rig = guess;
  }
  const ReconstructRun run = run_reconstruct(c);
  std::cout << "points: " << run.result.cloud.size() << " (dropped " << run.result.dropped << ")\n";
  for (const auto& t : run.result.timings) {
    std::printf("  %-12s %9.4f s", t.stage.c_str(), t.seconds);
    if (t.mpixel_per_s > 0.0) std::printf("  %8.2f Mpixel/s", t.mpixel_per_s);
    std::printf("\n");
  }
  if (run.result.motion && !c.debug_motion) {
    for (std::size_t i = 0; i < run.result.motion->shifts.size(); ++i) {
      const auto& s = run.result.motion->shifts[i].estimate;
      std::printf("  shift[%zu] = (%.3f, %.3f)\n", i, s.dx, s.dy);
    }
  }
  return 0;
}

struct EvaluateArgs {
  std::vector<fs::path> clouds;
  std::optional<fs::path> rig;
  int width = 0;
  int height = 0;
  std::vector<int> patch;  // x0 y0 x1 y1
  std::optional<fs::path> seeds;
  std::vector<double> reference_mm;
  std::optional<int> row;
  std::optional<int> column;
  std::vector<double> from;
  std::vector<double> to;
  std::optional<fs::path> csv;
};

std::pair<int, int> image_size(const EvaluateArgs& a) {
  if (a.rig) {
    const StereoRig rig = load_rig(*a.rig);
    return {rig.camera().intrinsics().width(), rig.camera().intrinsics().height()};
  }
  if (a.width <= 0 || a.height <= 0) throw ConfigError("give --rig or --width and --height");
  return {a.width, a.height};
}

std::vector<ConeSeed> load_seeds(const fs::path& path) {
  const json j = read_json(path);
  std::vector<ConeSeed> seeds;
  try {
    for (const auto& s : j.at("seeds")) {
      ConeSeed seed;
      const auto& apex = s.at("apex");
      seed.apex = Vec3(apex[0].get<double>(), apex[1].get<double>(), apex[2].get<double>());
      if (s.contains("axis")) {
        const auto& ax = s["axis"];
        seed.axis = Vec3(ax[0].get<double>(), ax[1].get<double>(), ax[2].get<double>()).normalized();
      }
      seed.radius = s.at("radius").get<double>();
      if (s.contains("half_angle_deg")) seed.half_angle = s["half_angle_deg"].get<double>() * std::numbers::pi / 180.0;
      seeds.push_back(seed);
    }
  } catch (const json::exception& e) {
    throw ConfigError("seeds '" + path.string() + "': " + e.what());
  }
  return seeds;
}

int evaluate(const std::string& mode, const EvaluateArgs& a) {
  if (a.clouds.empty()) throw ConfigError("evaluate needs at least one --cloud");
  json report{{"mode", mode}};
  if (mode == "precision") {
    const auto [w, h] = image_size(a);
    std::vector<ImageD> depths;
    for (const auto& c : a.clouds) depths.push_back(depth_map(read_ply(c).cloud, w, h));
    const PrecisionReport r = depth_std(depths);
    report.update({{"scans", r.scan_count}, {"pixels", r.pixel_count}, {"mean_std_mm", r.mean_mm}, {"max_std_mm", r.max_mm}});
  } else if (mode == "esd") {
    if (a.patch.size() != 4) throw ConfigError("esd needs --patch x0 y0 x1 y1");
    const PixelRect patch{a.patch[0], a.patch[1], a.patch[2], a.patch[3]};
    report["patches"] = json::array();
    for (const auto& c : a.clouds) {
      const RoughnessReport r = plane_esd(read_ply(c).cloud, patch);
      report["patches"].push_back({{"cloud", c.string()},
                                   {"esd_mm", r.esd_mm},
                                   {"points", r.point_count},
                                   {"area_cm2", r.area_m2 * 1e4},
                                   {"normal", {r.plane.normal.x(), r.plane.normal.y(), r.plane.normal.z()}},
                                   {"offset_m", r.plane.offset}});
    }
  } else if (mode == "cones") {
    if (!a.seeds) throw ConfigError("cones needs --seeds");
    const std::vector<ConeSeed> seeds = load_seeds(*a.seeds);
    std::vector<ConeReport> scans;
    report["scans"] = json::array();
    for (const auto& c : a.clouds) {
      scans.push_back(fit_cones(read_ply(c).cloud, seeds));
      json cones = json::array();
      for (const auto& f : scans.back().cones) {
        cones.push_back({{"apex_m", {f.apex.x(), f.apex.y(), f.apex.z()}},
                         {"axis", {f.axis.x(), f.axis.y(), f.axis.z()}},
                         {"half_angle_deg", f.half_angle * 180.0 / std::numbers::pi},
                         {"rms_mm", f.rms * 1e3},
                         {"points", f.point_count},
                         {"good", f.good}});
      }
      report["scans"].push_back({{"cloud", c.string()}, {"cones", cones}, {"distances_mm", scans.back().distances_mm}});
    }
    if (!a.reference_mm.empty()) {
      const DistanceStatistics st = distance_statistics(scans, a.reference_mm);
      report["statistics"] = {{"mean_mm", st.mean_mm}, {"rmse_mm", st.rmse_mm}, {"std_mm", st.std_mm}};
    }
  } else if (mode == "cross-section") {
    const auto [w, h] = image_size(a);
    const ImageD depth = depth_map(read_ply(a.clouds.front()).cloud, w, h);
    Profile p;
    if (a.row) {
      p = cross_section_row(depth, *a.row);
    } else if (a.column) {
      p = cross_section_column(depth, *a.column);
    } else if (a.from.size() == 2 && a.to.size() == 2) {
      p = cross_section(depth, Vec2(a.from[0], a.from[1]), Vec2(a.to[0], a.to[1]));
    } else {
      throw ConfigError("cross-section needs --row, --column, or --from x y --to x y");
    }
    report.update({{"samples", p.depth_mm.size()}, {"ripple_mm", ripple_amplitude(p)}});
    if (a.csv) {
      std::ostringstream csv;
      csv << "position_px,depth_mm\n";
      for (std::size_t i = 0; i < p.depth_mm.size(); ++i) csv << p.position[i] << "," << p.depth_mm[i] << "\n";
      write_text(*a.csv, csv.str());
      report["csv"] = a.csv->string();
    }
  } else {
    throw ConfigError("unknown evaluate mode '" + mode + "'");
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured-light scanner toolkit: patterns, simulation, sync, decoding, reconstruction, evaluation"};
  app.require_subcommand(1);
  std::optional<fs::path> config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  GenPatternsArgs gp;
  auto* gen = app.add_subcommand("gen-patterns", "Write the 2N phase-shift patterns");
  gen->add_option("--out", gp.out, "Output directory");
  gen->add_option("--orientation", gp.orientation, "vertical or horizontal");
  gen->add_option("--steps", gp.steps, "Phase steps per set");
  gen->add_option("--n-fringe", gp.n_fringe, "Fringes of the high-frequency set");
  gen->add_option("--width", gp.width, "Projector width");
  gen->add_option("--height", gp.height, "Projector height");
  gen->add_option("--bits", gp.bits, "Bit depth: 8, 10, 12 or 16");
  gen->add_option("--format", gp.format, "pgm or png")->check(CLI::IsMember({"pgm", "png"}));

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Render a frame set from a simulation config");
  sim->add_option("--out", sa.out, "Output directory (overrides the config)");
  sim->add_option("--seed", sa.seed, "Noise seed (overrides the config)");

  fs::path sync_manifest;
  auto* sync = app.add_subcommand("sync-check", "Group trigger and image timestamps into frame sets");
  sync->add_option("manifest", sync_manifest, "Sync manifest")->required();

  DecodeArgs da;
  auto* dec = app.add_subcommand("decode", "Decode a frame set into phase and projector-coordinate maps");
  dec->add_option("--frames", da.frames, "Frame manifest");
  dec->add_option("--out", da.out, "Output directory");
  dec->add_option("--modulation-threshold", da.threshold, "Minimum modulation B");

  ReconstructArgs ra;
  auto* rec = app.add_subcommand("reconstruct", "Decode and triangulate a frame set into a PLY cloud");
  rec->add_option("--rig", ra.rig, "Calibration file");
  rec->add_option("--frames", ra.frames, "Frame manifest");
  rec->add_option("--out", ra.out, "Output PLY");
  rec->add_option("--format", ra.format, "ascii or binary");
  rec->add_flag("--motion-comp", ra.motion_comp, "Register images to a reference before decoding");
  rec->add_option("--motion-axis", ra.motion_axis, "x, y or none");
  rec->add_option("--reference", ra.reference, "Reference image index (0-based)");
  rec->add_option("--interpolation", ra.interpolation, "nearest or bilinear");
  rec->add_option("--debug-motion", ra.debug_motion, "Write the motion plan as JSON");
  rec->add_option("--report", ra.report, "Write a JSON run report");
  rec->add_option("--modulation-threshold", ra.threshold, "Minimum modulation B");
  rec->add_option("--projector-distortion", ra.projector_distortion, "none or iterative");

  EvaluateArgs ea;
  std::string mode;
  auto* ev = app.add_subcommand("evaluate", "Precision, ESD, cone distances or cross-section ripple");
  ev->add_option("mode", mode, "precision | esd | cones | cross-section")
      ->required()
      ->check(CLI::IsMember({"precision", "esd", "cones", "cross-section"}));
  ev->add_option("--cloud", ea.clouds, "PLY cloud(s)")->required();
  ev->add_option("--rig", ea.rig, "Calibration file giving the camera size");
  ev->add_option("--width", ea.width, "Camera width");
  ev->add_option("--height", ea.height, "Camera height");
  ev->add_option("--patch", ea.patch, "x0 y0 x1 y1 pixel rectangle")->expected(4);
  ev->add_option("--seeds", ea.seeds, "Cone seeds JSON");
  ev->add_option("--reference-mm", ea.reference_mm, "Reference cone-1 distances");
  ev->add_option("--row", ea.row, "Image row");
  ev->add_option("--column", ea.column, "Image column");
  ev->add_option("--from", ea.from, "Segment start x y")->expected(2);
  ev->add_option("--to", ea.to, "Segment end x y")->expected(2);
  ev->add_option("--csv", ea.csv, "Write the profile as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const json cfg = config_path && !sim->parsed() && !rec->parsed() ? read_json(*config_path) : json::object();
    if (gen->parsed()) return gen_patterns(gp, cfg, *gen);
    if (sim->parsed()) return simulate(sa, config_path);
    if (sync->parsed()) return sync_check(sync_manifest);
    if (dec->parsed()) return decode(da, cfg);
    if (rec->parsed()) return reconstruct_cmd(ra, config_path);
    if (ev->parsed()) return evaluate(mode, ea);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::data);
  } catch (const json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return exit_code(ErrorKind::config);
  }
  return 1;
}
