#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "slscan/calibration.hpp"
#include "slscan/frame_io.hpp"
#include "slscan/image_io.hpp"
#include "slscan/pipeline.hpp"

namespace slscan {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kPlaneSim = R"({
  "output_dir": "sim", "seed": 3,
  "rig": {"camera_dist": [0.05, 0, 0, 0, 0], "projector_dist": [0.05, 0, 0, 0, 0]},
  "pattern": {"orientation": "vertical", "steps": 3, "n_fringe": 16},
  "scene": {"type": "plane", "point": [0, 0, 0.5], "normal": [0, 0, -1]},
  "render": {"sampling": "analytic", "noise_sigma": 0.0}
})";

SimulationOutputs simulate_into(const testing::TempDir& dir, const std::string& text = kPlaneSim) {
  return run_simulate(SimulationConfig::from_json(text, dir.path()));
}

PipelineConfig config_for(const SimulationOutputs& sim, const fs::path& out) {
  PipelineConfig c;
  c.rig = sim.rig;
  c.frames = sim.frames;
  c.output = out;
  return c;
}

TEST(Simulate, WritesAllOutputs) {
  testing::TempDir dir("sim");
  const SimulationOutputs sim = simulate_into(dir);
  EXPECT_EQ(sim.rig, dir / "sim" / "rig.json");
  for (const fs::path& p : {sim.rig, sim.frames, sim.truth, sim.summary}) EXPECT_TRUE(fs::exists(p)) << p;
  EXPECT_EQ(read_frame_set(sim.frames).size(), 6u);
  const auto summary = nlohmann::json::parse(slurp(sim.summary));
  EXPECT_EQ(summary["seed"], 3);
  EXPECT_EQ(read_map_bundle(sim.truth).count("depth"), 1u);
}

TEST(Reconstruct, NoiselessPlaneEndToEnd) {
  testing::TempDir dir("recplane");
  const SimulationOutputs sim = simulate_into(dir);
  const ReconstructRun run = run_reconstruct(config_for(sim, dir / "cloud.ply"));
  const PlyFile ply = read_ply(dir / "cloud.ply");
  ASSERT_EQ(ply.cloud.size(), run.result.cloud.size());
  std::size_t illuminated = 0;
  for (double v : read_map_bundle(sim.truth).at("valid").pixels()) illuminated += v > 0.5 ? 1 : 0;
  ASSERT_GT(illuminated, 250000u);
  ASSERT_GE(ply.cloud.size(), 0.999 * static_cast<double>(illuminated));
  double ss = 0.0;
  for (const auto& p : ply.cloud.points) ss += (p.position.z() - 0.5) * (p.position.z() - 0.5);
  EXPECT_LT(std::sqrt(ss / static_cast<double>(ply.cloud.size())), 1e-4);
  const auto& c = ply.comments;
  EXPECT_TRUE(std::any_of(c.begin(), c.end(), [](const std::string& s) { return s.rfind("rig_fingerprint ", 0) == 0; }));
  const auto report = nlohmann::json::parse(run.report_json);
  EXPECT_EQ(report["points"], ply.cloud.size());
}

TEST(Reconstruct, MissingCalibrationWritesNothing) {
  testing::TempDir dir("recmissing");
  const SimulationOutputs sim = simulate_into(dir);
  PipelineConfig c = config_for(sim, dir / "cloud.ply");
  c.rig = dir / "absent.json";
  c.report = dir / "report.json";
  try {
    run_reconstruct(c);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
  EXPECT_FALSE(fs::exists(dir / "cloud.ply"));
  EXPECT_FALSE(fs::exists(dir / "report.json"));
}

TEST(Reconstruct, MissingOutputDirectoryRejectedUpFront) {
  testing::TempDir dir("recnodir");
  const SimulationOutputs sim = simulate_into(dir);
  EXPECT_THROW(run_reconstruct(config_for(sim, dir / "no" / "cloud.ply")), ConfigError);
}

TEST(Reconstruct, PatternDisagreementRejected) {
  testing::TempDir dir("recpattern");
  const SimulationOutputs sim = simulate_into(dir);
  PipelineConfig c = config_for(sim, dir / "cloud.ply");
  c.pattern = testing::pattern(Orientation::vertical, 3, 8);
  EXPECT_THROW(run_reconstruct(c), ConfigError);
  EXPECT_FALSE(fs::exists(dir / "cloud.ply"));
}

TEST(Reconstruct, StageErrorNamesTheStage) {
  const StereoRig rig = testing::default_rig();
  FrameSet fs;
  fs.spec = testing::pattern();
  for (int i = 0; i < 6; ++i) fs.images.push_back(make_handle(ImageD(640, 480, 0.3)));
  ReconstructOptions opts;
  opts.motion.enabled = true;
  opts.motion.axis = AxisConstraint::x_only;
  try {
    reconstruct(fs, rig, opts);
    FAIL() << "expected a StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "motion");
    EXPECT_EQ(e.kind(), ErrorKind::numerical);
  }
}

TEST(Reconstruct, FrameSizeMustMatchCamera) {
  const StereoRig rig = testing::default_rig();
  FrameSet fs;
  fs.spec = testing::pattern();
  for (int i = 0; i < 6; ++i) fs.images.push_back(make_handle(ImageD(320, 240, 0.3)));
  try {
    reconstruct(fs, rig);
    FAIL() << "expected a StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "input");
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
}

TEST(Reconstruct, BinaryPlyIsDeterministic) {
  testing::TempDir dir("recdet");
  auto j = nlohmann::json::parse(kPlaneSim);
  j.merge_patch(nlohmann::json::parse(R"({"render": {"noise_sigma": 0.01, "sampling": "bilinear"}})"));
  const std::string text = j.dump();
  const SimulationOutputs sim = simulate_into(dir, text);
  run_reconstruct(config_for(sim, dir / "a.ply"));
  run_reconstruct(config_for(sim, dir / "b.ply"));
  EXPECT_EQ(slurp(dir / "a.ply"), slurp(dir / "b.ply"));
}

TEST(PipelineConfigJson, ParsesAndResolvesPaths) {
  const PipelineConfig c = PipelineConfig::from_json(R"({
    "rig": "rig.json", "frames": "f/frames.json", "output": "/tmp/out.ply", "ply_format": "ascii",
    "motion_compensation": {"enabled": true, "axis": "x", "reference": 1, "interpolation": "nearest"},
    "modulation_threshold": 0.05, "projector_distortion": "none"})",
                                                     "/base");
  EXPECT_EQ(c.rig, fs::path("/base/rig.json"));
  EXPECT_EQ(c.frames, fs::path("/base/f/frames.json"));
  EXPECT_EQ(c.output, fs::path("/tmp/out.ply"));
  EXPECT_EQ(c.ply_format, PlyFormat::ascii);
  EXPECT_TRUE(c.options.motion.enabled);
  EXPECT_EQ(c.options.motion.axis, AxisConstraint::x_only);
  EXPECT_EQ(c.options.motion.reference, 1);
  EXPECT_EQ(c.options.motion.interpolation, Interpolation::nearest);
  EXPECT_DOUBLE_EQ(c.options.decode.modulation_threshold, 0.05);
  EXPECT_EQ(c.options.triangulation.projector_distortion, ProjectorDistortionMode::none);
  EXPECT_THROW(PipelineConfig::from_json(R"({"ply_format": "xml"})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json("[1, 2"), ConfigError);
}

TEST(SceneJson, ShapesParse) {
  const Scene plane = scene_from_json(R"({"type": "plane", "point": [0, 0, 0.5], "normal": [0, 0, -1]})");
  ASSERT_TRUE(std::holds_alternative<Plane>(plane.shape()));
  const Scene sphere = scene_from_json(R"({"type": "sphere", "centre": [0, 0, 0.5], "radius": 0.1})");
  EXPECT_DOUBLE_EQ(std::get<Sphere>(sphere.shape()).radius, 0.1);
  const Scene board = scene_from_json(
      R"({"type": "cone_board", "base_z": 0.5, "cones": [{"apex": [0, 0, 0.47], "half_angle_deg": 30, "height": 0.03}]})");
  const auto& cb = std::get<ConeBoard>(board.shape());
  ASSERT_EQ(cb.cones.size(), 1u);
  EXPECT_NEAR(cb.cones[0].half_angle, M_PI / 6, 1e-15);
  const Scene corr = scene_from_json(
      R"({"type": "corrugation", "base_z": 0.5, "amplitude": 0.005, "period": 0.03, "extent": 0.4, "spacing": 0.001})");
  EXPECT_TRUE(std::holds_alternative<HeightField>(corr.shape()));
  EXPECT_THROW(scene_from_json(R"({"type": "torus"})"), ConfigError);
  EXPECT_THROW(scene_from_json(R"({"type": "corrugation", "base_z": 0.5, "amplitude": 0.005, "period": 0.03,
                                   "extent": 0.4, "spacing": 0})"),
               ConfigError);
}

}  // namespace
}  // namespace slscan
