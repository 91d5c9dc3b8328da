#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slscan/decode.hpp"
#include "slscan/frame_set.hpp"
#include "slscan/geometry.hpp"
#include "slscan/ply.hpp"
#include "slscan/point_cloud.hpp"
#include "slscan/register.hpp"
#include "slscan/scene.hpp"
#include "slscan/simulator.hpp"
#include "slscan/triangulate.hpp"

namespace slscan {

struct MotionCompensation {
  bool enabled = false;
  AxisConstraint axis = AxisConstraint::none;
  std::optional<int> reference;  // 0-based; default is the middle image
  Interpolation interpolation = Interpolation::bilinear;
  PhaseCorrelationOptions correlation;
};

struct ReconstructOptions {
  MotionCompensation motion;
  DecodeOptions decode;
  TriangulationOptions triangulation;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
  double mpixel_per_s = 0.0;  // 0 for stages without a per-pixel workload
};

struct Reconstruction {
  PointCloud cloud;
  DecodeResult decoded;
  std::optional<MotionPlan> motion;
  std::size_t dropped = 0;
  std::vector<StageTiming> timings;
};

/// motion compensation (optional) -> decode -> triangulate. When `table` is null
/// one is built for the rig. Any stage failure is rethrown as StageError naming
/// the stage.
Reconstruction reconstruct(const FrameSet& frames, const StereoRig& rig, const ReconstructOptions& options = {},
                           const TriangulationTable* table = nullptr);

/// Header comments recording the rig fingerprint and pattern spec.
std::vector<std::string> ply_comments(const StereoRig& rig, const PatternSpec& spec);

// Reconstruction config (JSON); relative paths resolve against the config file:
//
//   {"rig": "rig.json", "frames": "frames/frames.json", "output": "cloud.ply",
//    "ply_format": "binary", "pattern": {...},
//    "motion_compensation": {"enabled": false, "axis": "none", "reference": 2,
//                            "interpolation": "bilinear"},
//    "modulation_threshold": 0.02, "projector_distortion": "iterative",
//    "debug_motion": "motion.json", "report": "report.json"}
//
// "pattern", when present, must equal the frame manifest's pattern.

struct PipelineConfig {
  std::filesystem::path rig;
  std::filesystem::path frames;
  std::filesystem::path output;
  PlyFormat ply_format = PlyFormat::binary_little_endian;
  std::optional<PatternSpec> pattern;
  ReconstructOptions options;
  std::optional<std::filesystem::path> debug_motion;
  std::optional<std::filesystem::path> report;

  static PipelineConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);
};

struct ReconstructRun {
  Reconstruction result;
  std::string report_json;
};

/// Loads and checks every input before writing anything, then reconstructs and
/// writes the cloud and optional reports.
ReconstructRun run_reconstruct(const PipelineConfig& config);

std::string reconstruction_report_json(const Reconstruction& r, const FrameSet& frames);

// Simulation config (JSON):
//
//   {"output_dir": "sim", "seed": 7,
//    "rig": {"camera_width": 640, ..., "camera_dist": [k1, k2, p1, p2, k3]}
//       or "rig_file": "rig.json",
//    "pattern": {...},
//    "scene": {"type": "plane", "point": [0, 0, 0.5], "normal": [0, 0, -1]}
//           | {"type": "sphere", "centre": [...], "radius": r}
//           | {"type": "cone_board", "base_z": 0.5, "cones": [{"apex": [...], "half_angle_deg": 30, "height": 0.03}]}
//           | {"type": "corrugation", "base_z": 0.5, "amplitude": 0.005, "period": 0.03, "extent": 0.4, "spacing": 0.001},
//    "texture": {"amplitude": 0.3, "seed": 1},
//    "render": {"reflectance": 0.5, "modulation": 0.4, "ambient": 0, "noise_sigma": 0,
//               "quantize_bits": 10, "sampling": "bilinear", "shading": "uniform",
//               "motion_per_frame": [0, 0, 0], "motion_schedule": [[...], ...],
//               "reference_frame": 0, "frame_interval": 0.0333},
//    "bit_depth": 16}

struct SimulationConfig {
  std::filesystem::path output_dir;
  StereoRig rig;
  PatternSpec pattern;
  Scene scene;
  RenderConfig render;
  int bit_depth = 16;

  static SimulationConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
  static SimulationConfig load(const std::filesystem::path& path);
};

struct SimulationOutputs {
  std::filesystem::path rig;        // rig.json
  std::filesystem::path frames;     // frames/frames.json
  std::filesystem::path truth;      // truth/maps.json
  std::filesystem::path summary;    // simulation.json: seed and per-frame sensor offsets
};

/// Renders the sequence and writes the rig, frames and ground-truth maps.
SimulationOutputs run_simulate(const SimulationConfig& config);

/// Scene from its JSON description (see SimulationConfig).
Scene scene_from_json(const std::string& text);

}  // namespace slscan
