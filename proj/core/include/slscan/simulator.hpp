#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "slscan/frame_set.hpp"
#include "slscan/geometry.hpp"
#include "slscan/patterns.hpp"
#include "slscan/point_cloud.hpp"
#include "slscan/scene.hpp"

namespace slscan {

enum class PatternSampling {
  bilinear,  ///< interpolate the (possibly quantized) pattern image
  analytic,  ///< evaluate the sinusoid exactly at the projector coordinate
};

enum class Shading {
  uniform,     ///< shading factor 1
  lambertian,  ///< |n . l| towards the projector
};

/// Rendering model for one camera pixel lit by the projector:
///   I = ambient + albedo * shading * (A0 + B0 * (2 s - 1))
/// where s in [0, 1] is the pattern value. For an analytic sinusoid this is
/// I = ambient + A + B cos(phase). Unlit pixels read `ambient`.
struct RenderConfig {
  double reflectance = 0.5;  // A0
  double modulation = 0.4;   // B0
  double ambient = 0.0;
  double noise_sigma = 0.0;  // Gaussian, per pixel per frame
  std::uint64_t seed = 0;
  /// Sensor translation between consecutive captures (camera frame, metres).
  Vec3 motion_per_frame = Vec3::Zero();
  /// Optional per-step override: entry i is the translation between frame i and
  /// i + 1. Must then hold frames - 1 entries.
  std::vector<Vec3> motion_schedule;
  /// Sensor position at the first frame.
  Vec3 sensor_origin = Vec3::Zero();
  std::optional<int> quantize_bits;
  PatternSampling sampling = PatternSampling::bilinear;
  Shading shading = Shading::uniform;
  /// Frame whose sensor pose the ground truth describes.
  int reference_frame = 0;
  double frame_interval = 1.0 / 30.0;  // seconds between captures
  double start_time = 0.0;

  /// Throws ConfigError; `frames` is the sequence length being rendered.
  void validate(int frames) const;
  /// Accumulated sensor position at `frame`.
  Vec3 sensor_offset(int frame) const;
};

/// Exact per-pixel answers for the reference frame. Invalid pixels hold NaN.
struct GroundTruth {
  ImageD depth;         // z in the camera frame, metres
  ImageD projector_u;   // distorted projector pixel coordinates
  ImageD projector_v;
  Mask valid;           // hit, inside the projector footprint, not shadowed
  std::vector<Vec3> sensor_offsets;  // per frame
  int reference_frame = 0;
};

struct RenderResult {
  FrameSet frames;
  GroundTruth truth;
};

class EmptyVisibility : public DataError {
 public:
  using DataError::DataError;
};

/// Renders one camera image per pattern. The scene stays fixed; the sensor moves.
/// Throws EmptyVisibility when no pixel is lit in the reference frame.
RenderResult render_sequence(const StereoRig& rig, const Scene& scene, const PatternSequence& seq,
                             const RenderConfig& config);

/// Exact camera-frame intersection points for every camera pixel whose ray hits
/// the scene, with the sensor at `sensor_offset`.
PointCloud ground_truth_cloud(const Scene& scene, const StereoRig& rig,
                              const Vec3& sensor_offset = Vec3::Zero());

/// Camera-frame rig where the projector sits `baseline` along `baseline_axis`
/// (0 = x, 1 = y) and is rotated so both optical axes meet at `convergence`
/// metres in front of the camera.
struct RigSpec {
  int camera_width = 640;
  int camera_height = 480;
  double camera_focal = 800.0;
  int projector_width = 912;
  int projector_height = 1140;
  double projector_focal = 1100.0;
  double baseline = 0.1;
  int baseline_axis = 0;
  double convergence = 0.5;
  Distortion camera_distortion;
  Distortion projector_distortion;
};

StereoRig make_rig(const RigSpec& spec);

}  // namespace slscan
