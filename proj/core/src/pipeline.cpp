#include "slscan/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "json_support.hpp"
#include "slscan/calibration.hpp"
#include "slscan/frame_io.hpp"
#include "slscan/image_io.hpp"

namespace slscan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
auto staged(const char* stage, std::vector<StageTiming>& timings, double mpixels, F&& fn) {
  const auto start = Clock::now();
  try {
    auto out = fn();
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    timings.push_back({stage, s, mpixels > 0.0 && s > 0.0 ? mpixels / s : 0.0});
    return out;
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.empty() || p.is_absolute() || base.empty() ? p : base / p;
}

Vec3 vec3_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + " must be a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Distortion distortion_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 5) throw ConfigError(what + " must hold [k1, k2, p1, p2, k3]");
  return Distortion(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>(),
                    j[4].get<double>());
}

Scene scene_from(const json& j) {
  const std::string type = j.value("type", std::string("plane"));
  if (type == "plane") {
    Plane p;
    if (j.contains("point")) p.point = vec3_from(j["point"], "scene.point");
    if (j.contains("normal")) p.normal = vec3_from(j["normal"], "scene.normal").normalized();
    return Scene(p);
  }
  if (type == "sphere") {
    Sphere s;
    if (j.contains("centre")) s.centre = vec3_from(j["centre"], "scene.centre");
    s.radius = j.value("radius", s.radius);
    return Scene(s);
  }
  if (type == "cone_board") {
    ConeBoard board;
    board.base.point = Vec3(0.0, 0.0, j.value("base_z", 0.5));
    for (const auto& c : j.at("cones")) {
      Cone cone;
      cone.apex = vec3_from(c.at("apex"), "cone.apex");
      if (c.contains("axis")) cone.axis = vec3_from(c["axis"], "cone.axis").normalized();
      if (c.contains("half_angle_deg")) {
        cone.half_angle = c["half_angle_deg"].get<double>() * std::numbers::pi / 180.0;
      } else {
        cone.half_angle = c.value("half_angle", cone.half_angle);
      }
      cone.height = c.value("height", cone.height);
      board.cones.push_back(cone);
    }
    return Scene(board);
  }
  if (type == "corrugation") {
    const double base_z = j.value("base_z", 0.5);
    const double amplitude = j.value("amplitude", 0.005);
    const double period = j.value("period", 0.03);
    const double extent = j.value("extent", 0.4);
    const double spacing = j.value("spacing", 0.001);
    if (!(spacing > 0.0) || !(extent > spacing) || !(period > 0.0)) throw ConfigError("corrugation: bad dimensions");
    const int n = static_cast<int>(std::ceil(extent / spacing)) + 1;
    const Vec2 origin(-0.5 * extent, -0.5 * extent);
    std::vector<double> h(static_cast<std::size_t>(n) * n);
    for (int jy = 0; jy < n; ++jy) {
      for (int ix = 0; ix < n; ++ix) {
        const double x = origin.x() + ix * spacing;
        h[static_cast<std::size_t>(jy) * n + ix] = amplitude * std::sin(2.0 * std::numbers::pi * x / period);
      }
    }
    return Scene(HeightField(base_z, origin, spacing, n, n, std::move(h)));
  }
  throw ConfigError("unknown scene type '" + type + "'");
}

Texture texture_from(const json& j) {
  return Texture(j.value("amplitude", 0.0), j.value("seed", std::uint64_t{0}), j.value("min_wavelength", 0.004),
                 j.value("max_wavelength", 0.02), j.value("components", 8));
}

RigSpec rig_spec_from(const json& j) {
  RigSpec s;
  s.camera_width = j.value("camera_width", s.camera_width);
  s.camera_height = j.value("camera_height", s.camera_height);
  s.camera_focal = j.value("camera_focal", s.camera_focal);
  s.projector_width = j.value("projector_width", s.projector_width);
  s.projector_height = j.value("projector_height", s.projector_height);
  s.projector_focal = j.value("projector_focal", s.projector_focal);
  s.baseline = j.value("baseline", s.baseline);
  s.baseline_axis = j.value("baseline_axis", s.baseline_axis);
  s.convergence = j.value("convergence", s.convergence);
  if (j.contains("camera_dist")) s.camera_distortion = distortion_from(j["camera_dist"], "rig.camera_dist");
  if (j.contains("projector_dist")) s.projector_distortion = distortion_from(j["projector_dist"], "rig.projector_dist");
  return s;
}

RenderConfig render_from(const json& j, std::uint64_t seed) {
  RenderConfig r;
  r.seed = seed;
  r.reflectance = j.value("reflectance", r.reflectance);
  r.modulation = j.value("modulation", r.modulation);
  r.ambient = j.value("ambient", r.ambient);
  r.noise_sigma = j.value("noise_sigma", r.noise_sigma);
  if (j.contains("quantize_bits") && !j["quantize_bits"].is_null()) r.quantize_bits = j["quantize_bits"].get<int>();
  if (j.contains("sampling")) {
    const auto s = j["sampling"].get<std::string>();
    if (s == "bilinear") {
      r.sampling = PatternSampling::bilinear;
    } else if (s == "analytic") {
      r.sampling = PatternSampling::analytic;
    } else {
      throw ConfigError("render.sampling must be bilinear or analytic");
    }
  }
  if (j.contains("shading")) {
    const auto s = j["shading"].get<std::string>();
    if (s == "uniform") {
      r.shading = Shading::uniform;
    } else if (s == "lambertian") {
      r.shading = Shading::lambertian;
    } else {
      throw ConfigError("render.shading must be uniform or lambertian");
    }
  }
  if (j.contains("motion_per_frame")) r.motion_per_frame = vec3_from(j["motion_per_frame"], "render.motion_per_frame");
  if (j.contains("motion_schedule")) {
    for (const auto& m : j["motion_schedule"]) r.motion_schedule.push_back(vec3_from(m, "render.motion_schedule entry"));
  }
  if (j.contains("sensor_origin")) r.sensor_origin = vec3_from(j["sensor_origin"], "render.sensor_origin");
  r.reference_frame = j.value("reference_frame", r.reference_frame);
  r.frame_interval = j.value("frame_interval", r.frame_interval);
  r.start_time = j.value("start_time", r.start_time);
  return r;
}

template <typename F>
auto config_section(const char* what, F&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

void require_parent(const fs::path& p, const char* what) {
  const fs::path parent = p.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw ConfigError(std::string(what) + " directory '" + parent.string() + "' does not exist");
  }
}

}  // namespace

Reconstruction reconstruct(const FrameSet& frames, const StereoRig& rig, const ReconstructOptions& options,
                           const TriangulationTable* table) {
  Reconstruction r;
  const double mpix = static_cast<double>(frames.width()) * frames.height() / 1e6;
  staged("input", r.timings, 0.0, [&] {
    frames.check_consistent();
    const auto& k = rig.camera().intrinsics();
    if (frames.width() != k.width() || frames.height() != k.height()) {
      throw DataError("frames are " + std::to_string(frames.width()) + "x" + std::to_string(frames.height()) +
                      " but the camera is " + std::to_string(k.width()) + "x" + std::to_string(k.height()));
    }
    return 0;
  });

  FrameSet working = frames;
  if (options.motion.enabled) {
    working = staged("motion", r.timings, mpix * static_cast<double>(frames.size()), [&] {
      const int ref = options.motion.reference.value_or(default_reference_index(static_cast<int>(frames.size())));
      r.motion = plan_motion(frames, ref, options.motion.axis, options.motion.correlation);
      return align(frames, *r.motion, options.motion.interpolation);
    });
  }
  r.decoded = staged("decode", r.timings, mpix, [&] { return decode_full(working, options.decode); });

  std::optional<TriangulationTable> built;
  if (!table) {
    built = staged("table", r.timings, 0.0,
                   [&] { return TriangulationTable::build(rig, r.decoded.coords.axis); });
    table = &*built;
  }
  auto tri = staged("triangulate", r.timings, mpix, [&] {
    return triangulate_map(r.decoded.coords, rig, *table, options.triangulation, &r.decoded.phases.shading);
  });
  r.cloud = std::move(tri.cloud);
  r.dropped = tri.dropped;
  return r;
}

std::vector<std::string> ply_comments(const StereoRig& rig, const PatternSpec& spec) {
  char fp[32];
  std::snprintf(fp, sizeof(fp), "%016llx", static_cast<unsigned long long>(rig.fingerprint()));
  return {std::string("rig_fingerprint ") + fp,
          "pattern orientation=" + to_string(spec.orientation) + " steps=" + std::to_string(spec.steps) +
              " n_fringe=" + std::to_string(spec.n_fringe) + " projector=" + std::to_string(spec.projector_width) +
              "x" + std::to_string(spec.projector_height)};
}

std::string reconstruction_report_json(const Reconstruction& r, const FrameSet& frames) {
  std::size_t valid = 0;
  for (auto m : r.decoded.coords.mask.pixels()) valid += m != 0;
  json j{{"width", frames.width()},
         {"height", frames.height()},
         {"valid_pixels", valid},
         {"points", r.cloud.size()},
         {"dropped", r.dropped}};
  j["timings"] = json::array();
  for (const auto& t : r.timings) {
    j["timings"].push_back({{"stage", t.stage}, {"seconds", t.seconds}, {"mpixel_per_s", t.mpixel_per_s}});
  }
  if (r.motion) j["motion"] = json::parse(motion_plan_to_json(*r.motion));
  return j.dump(2);
}

PipelineConfig PipelineConfig::from_json(const std::string& text, const fs::path& base_dir) {
  const json j = detail::parse_json(text, "config", ErrorKind::config);
  if (!j.is_object()) throw ConfigError("config: expected an object");
  return config_section("config", [&] {
    PipelineConfig c;
    if (j.contains("rig")) c.rig = resolve(base_dir, j["rig"].get<std::string>());
    if (j.contains("frames")) c.frames = resolve(base_dir, j["frames"].get<std::string>());
    if (j.contains("output")) c.output = resolve(base_dir, j["output"].get<std::string>());
    if (j.contains("ply_format")) {
      const auto f = j["ply_format"].get<std::string>();
      if (f == "ascii") {
        c.ply_format = PlyFormat::ascii;
      } else if (f == "binary" || f == "binary_little_endian") {
        c.ply_format = PlyFormat::binary_little_endian;
      } else {
        throw ConfigError("config: ply_format must be ascii or binary");
      }
    }
    if (j.contains("pattern")) c.pattern = detail::pattern_spec_from(j["pattern"]);
    if (j.contains("motion_compensation")) {
      const json& m = j["motion_compensation"];
      c.options.motion.enabled = m.value("enabled", false);
      if (m.contains("axis")) c.options.motion.axis = axis_constraint_from_string(m["axis"].get<std::string>());
      if (m.contains("reference") && !m["reference"].is_null()) c.options.motion.reference = m["reference"].get<int>();
      if (m.contains("interpolation")) {
        c.options.motion.interpolation = interpolation_from_string(m["interpolation"].get<std::string>());
      }
    }
    c.options.decode.modulation_threshold = j.value("modulation_threshold", c.options.decode.modulation_threshold);
    if (j.contains("projector_distortion")) {
      c.options.triangulation.projector_distortion =
          projector_distortion_mode_from_string(j["projector_distortion"].get<std::string>());
    }
    if (j.contains("debug_motion")) c.debug_motion = resolve(base_dir, j["debug_motion"].get<std::string>());
    if (j.contains("report")) c.report = resolve(base_dir, j["report"].get<std::string>());
    return c;
  });
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  return from_json(detail::read_text(path, ErrorKind::config), path.parent_path());
}

ReconstructRun run_reconstruct(const PipelineConfig& config) {
  if (config.rig.empty()) throw ConfigError("config: no rig file given");
  if (config.frames.empty()) throw ConfigError("config: no frame manifest given");
  if (config.output.empty()) throw ConfigError("config: no output path given");
  if (!(config.options.decode.modulation_threshold >= 0.0)) throw ConfigError("config: modulation_threshold must be >= 0");
  require_parent(config.output, "output");
  if (config.debug_motion) require_parent(*config.debug_motion, "debug_motion");
  if (config.report) require_parent(*config.report, "report");

  std::vector<StageTiming> load_timings;
  const StereoRig rig = staged("load", load_timings, 0.0, [&] { return load_rig(config.rig); });
  const FrameSet frames = staged("load", load_timings, 0.0, [&] {
    if (!fs::exists(config.frames)) throw ConfigError("frame manifest '" + config.frames.string() + "' does not exist");
    return read_frame_set(config.frames);
  });
  if (config.pattern && !(*config.pattern == frames.spec)) {
    throw ConfigError("config: pattern differs from the frame manifest's pattern");
  }
  if (config.options.motion.reference &&
      (*config.options.motion.reference < 0 || *config.options.motion.reference >= static_cast<int>(frames.size()))) {
    throw ConfigError("config: motion reference index out of range");
  }

  ReconstructRun run;
  run.result = reconstruct(frames, rig, config.options);
  run.result.timings.insert(run.result.timings.begin(), load_timings.begin(), load_timings.end());
  run.report_json = reconstruction_report_json(run.result, frames);

  write_ply(config.output, run.result.cloud, config.ply_format, ply_comments(rig, frames.spec));
  if (config.debug_motion) {
    const MotionPlan empty{};
    detail::write_text(*config.debug_motion,
                       (run.result.motion ? motion_plan_to_json(*run.result.motion) : motion_plan_to_json(empty)) + "\n");
  }
  if (config.report) detail::write_text(*config.report, run.report_json + "\n");
  return run;
}

Scene scene_from_json(const std::string& text) {
  const json j = detail::parse_json(text, "scene", ErrorKind::config);
  return config_section("scene", [&] { return scene_from(j); });
}

SimulationConfig SimulationConfig::from_json(const std::string& text, const fs::path& base_dir) {
  const json j = detail::parse_json(text, "simulation config", ErrorKind::config);
  if (!j.is_object()) throw ConfigError("simulation config: expected an object");
  return config_section("simulation config", [&] {
    const std::uint64_t seed = j.value("seed", std::uint64_t{0});
    const fs::path out = resolve(base_dir, j.value("output_dir", std::string("sim")));
    StereoRig rig = j.contains("rig_file") ? load_rig(resolve(base_dir, j["rig_file"].get<std::string>()))
                                           : make_rig(rig_spec_from(j.value("rig", json::object())));
    PatternSpec pattern = j.contains("pattern") ? detail::pattern_spec_from(j["pattern"]) : PatternSpec{};
    Scene scene = scene_from(j.value("scene", json{{"type", "plane"}}));
    if (j.contains("texture")) scene = Scene(scene.shape(), texture_from(j["texture"]));
    RenderConfig render = render_from(j.value("render", json::object()), seed);
    const int bits = j.value("bit_depth", 16);
    if (bits != 8 && bits != 16) throw ConfigError("simulation config: bit_depth must be 8 or 16");
    render.validate(2 * pattern.steps);
    return SimulationConfig{out, std::move(rig), pattern, std::move(scene), std::move(render), bits};
  });
}

SimulationConfig SimulationConfig::load(const fs::path& path) {
  return from_json(detail::read_text(path, ErrorKind::config), path.parent_path());
}

SimulationOutputs run_simulate(const SimulationConfig& config) {
  config.pattern.validate();
  config.render.validate(2 * config.pattern.steps);
  const PatternSequence seq = generate(config.pattern);
  RenderResult rendered = render_sequence(config.rig, config.scene, seq, config.render);

  SimulationOutputs out;
  fs::create_directories(config.output_dir / "frames");
  fs::create_directories(config.output_dir / "truth");
  out.rig = config.output_dir / "rig.json";
  save_rig(config.rig, out.rig);
  FrameWriteOptions fw;
  fw.bit_depth = config.bit_depth;
  out.frames = write_frame_set(config.output_dir / "frames", rendered.frames, fw);
  ImageD valid(rendered.truth.valid.width(), rendered.truth.valid.height());
  for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = rendered.truth.valid[i] ? 1.0 : 0.0;
  out.truth = config.output_dir / "truth" / "maps.json";
  write_map_bundle(out.truth, {{"depth", rendered.truth.depth},
                               {"projector_u", rendered.truth.projector_u},
                               {"projector_v", rendered.truth.projector_v},
                               {"valid", valid}});
  json summary{{"seed", config.render.seed},
               {"reference_frame", rendered.truth.reference_frame},
               {"frames", "frames/frames.json"},
               {"truth", "truth/maps.json"},
               {"rig", "rig.json"}};
  summary["sensor_offsets"] = json::array();
  for (const auto& o : rendered.truth.sensor_offsets) summary["sensor_offsets"].push_back({o.x(), o.y(), o.z()});
  out.summary = config.output_dir / "simulation.json";
  detail::write_text(out.summary, summary.dump(2) + "\n");
  return out;
}

}  // namespace slscan
