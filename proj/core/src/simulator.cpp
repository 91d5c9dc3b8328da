#include "slscan/simulator.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace slscan {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Normalized camera rays (x, y, 1) for every pixel; with a unit z component the
/// ray parameter at a hit equals the camera-frame depth.
std::vector<Vec3> camera_rays(const DeviceModel& camera) {
  const auto& k = camera.intrinsics();
  std::vector<Vec3> rays;
  rays.reserve(static_cast<std::size_t>(k.width()) * k.height());
  for (int v = 0; v < k.height(); ++v) {
    for (int u = 0; u < k.width(); ++u) rays.push_back(undistort_pixel(camera, Vec2(u, v)));
  }
  return rays;
}

struct Illumination {
  bool lit = false;
  Vec3 camera_point;  // camera frame
  Vec2 projector_pixel;
  double shading = 1.0;
  double albedo = 1.0;
};

Illumination illuminate(const StereoRig& rig, const Scene& scene, const Vec3& sensor,
                        const Vec3& ray, Shading shading) {
  Illumination out;
  const auto hit = scene.intersect(sensor, ray);
  if (!hit) return out;
  out.camera_point = hit->point - sensor;
  const Vec3 in_projector = rig.projector_pose().apply(out.camera_point);
  if (!(in_projector.z() > 0.0)) return out;
  const auto& kp = rig.projector().intrinsics();
  out.projector_pixel = kp.to_pixel(rig.projector().distortion().distort(
      Vec2(in_projector.x() / in_projector.z(), in_projector.y() / in_projector.z())));
  if (!kp.in_bounds(out.projector_pixel)) return out;

  const Vec3 projector_centre = sensor + rig.projector_pose().centre();
  const Vec3 to_point = hit->point - projector_centre;
  if (const auto blocker = scene.intersect(projector_centre, to_point);
      blocker && blocker->t < 1.0 - 1e-7) {
    return out;
  }
  if (shading == Shading::lambertian) {
    out.shading = std::abs(hit->normal.dot(-to_point.normalized()));
  }
  out.albedo = scene.albedo(hit->point);
  out.lit = true;
  return out;
}

}  // namespace

void RenderConfig::validate(int frames) const {
  for (double v : {reflectance, modulation, ambient}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("render: reflectance, modulation and ambient must be in [0, 1]");
  }
  if (ambient + reflectance + modulation > 1.0 + 1e-12) {
    throw ConfigError("render: ambient + reflectance + modulation must not exceed 1 (saturation)");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("render: noise sigma must be >= 0");
  if (!motion_schedule.empty() && static_cast<int>(motion_schedule.size()) != frames - 1) {
    throw ConfigError("render: motion schedule needs one entry per frame transition");
  }
  if (reference_frame < 0 || reference_frame >= frames) {
    throw ConfigError("render: reference frame out of range");
  }
  if (quantize_bits && (*quantize_bits < 1 || *quantize_bits > 16)) {
    throw ConfigError("render: quantize bits must be in [1, 16]");
  }
  if (!(frame_interval > 0.0)) throw ConfigError("render: frame interval must be positive");
}

Vec3 RenderConfig::sensor_offset(int frame) const {
  Vec3 offset = sensor_origin;
  for (int i = 0; i < frame; ++i) {
    offset += motion_schedule.empty() ? motion_per_frame : motion_schedule[static_cast<std::size_t>(i)];
  }
  return offset;
}

RenderResult render_sequence(const StereoRig& rig, const Scene& scene, const PatternSequence& seq,
                             const RenderConfig& config) {
  const int frames = static_cast<int>(seq.images.size());
  if (frames != 2 * seq.spec.steps) throw ConfigError("render: pattern sequence must hold 2N images");
  config.validate(frames);

  const auto& kc = rig.camera().intrinsics();
  const int width = kc.width();
  const int height = kc.height();
  const std::vector<Vec3> rays = camera_rays(rig.camera());
  const bool vertical = seq.spec.orientation == Orientation::vertical;

  RenderResult result;
  result.frames.spec = seq.spec;
  GroundTruth& truth = result.truth;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  truth.depth = ImageD(width, height, nan);
  truth.projector_u = ImageD(width, height, nan);
  truth.projector_v = ImageD(width, height, nan);
  truth.valid = Mask(width, height, 0);
  truth.reference_frame = config.reference_frame;

  for (int f = 0; f < frames; ++f) {
    const Vec3 sensor = config.sensor_offset(f);
    truth.sensor_offsets.push_back(sensor);
    const FringeSet set = f < seq.spec.steps ? FringeSet::high : FringeSet::unit;
    const int step = f % seq.spec.steps;
    const ImageD& pattern = seq.images[static_cast<std::size_t>(f)];

    std::mt19937_64 rng(splitmix64(config.seed ^ splitmix64(static_cast<std::uint64_t>(f) + 1)));
    std::normal_distribution<double> noise(0.0, 1.0);

    ImageD image(width, height, config.ambient);
    for (int v = 0; v < height; ++v) {
      for (int u = 0; u < width; ++u) {
        const std::size_t idx = static_cast<std::size_t>(v) * width + u;
        const Illumination lit = illuminate(rig, scene, sensor, rays[idx], config.shading);
        double value = config.ambient;
        if (lit.lit) {
          const double s = config.sampling == PatternSampling::analytic
                               ? pattern_value(seq.spec, set, step,
                                               vertical ? lit.projector_pixel.x() : lit.projector_pixel.y())
                               : sample_bilinear(pattern, lit.projector_pixel.x(), lit.projector_pixel.y());
          value += lit.albedo * lit.shading *
                   (config.reflectance + config.modulation * (2.0 * s - 1.0));
        }
        if (f == config.reference_frame && lit.lit) {
          truth.depth(u, v) = lit.camera_point.z();
          truth.projector_u(u, v) = lit.projector_pixel.x();
          truth.projector_v(u, v) = lit.projector_pixel.y();
          truth.valid(u, v) = 1;
        }
        const double n = noise(rng);
        if (config.noise_sigma > 0.0) value += config.noise_sigma * n;
        value = std::clamp(value, 0.0, 1.0);
        if (config.quantize_bits) value = quantize_value(value, *config.quantize_bits);
        image(u, v) = value;
      }
    }
    result.frames.images.push_back(make_handle(std::move(image)));
    result.frames.timestamps.push_back(config.start_time + f * config.frame_interval);
  }

  bool any = false;
  for (auto m : truth.valid.pixels()) any = any || m != 0;
  if (!any) throw EmptyVisibility("render: no camera pixel sees the projector-lit scene");
  return result;
}

PointCloud ground_truth_cloud(const Scene& scene, const StereoRig& rig, const Vec3& sensor_offset) {
  const auto& kc = rig.camera().intrinsics();
  const std::vector<Vec3> rays = camera_rays(rig.camera());
  PointCloud cloud;
  for (int v = 0; v < kc.height(); ++v) {
    for (int u = 0; u < kc.width(); ++u) {
      const auto hit = scene.intersect(sensor_offset, rays[static_cast<std::size_t>(v) * kc.width() + u]);
      if (!hit) continue;
      cloud.points.push_back({hit->point - sensor_offset, static_cast<float>(u), static_cast<float>(v), 0.0f});
    }
  }
  return cloud;
}

StereoRig make_rig(const RigSpec& spec) {
  const DeviceModel camera(Intrinsics(spec.camera_focal, spec.camera_focal, 0.5 * (spec.camera_width - 1),
                                      0.5 * (spec.camera_height - 1), spec.camera_width, spec.camera_height),
                           spec.camera_distortion);
  const DeviceModel projector(
      Intrinsics(spec.projector_focal, spec.projector_focal, 0.5 * (spec.projector_width - 1),
                 0.5 * (spec.projector_height - 1), spec.projector_width, spec.projector_height),
      spec.projector_distortion);
  if (spec.baseline_axis != 0 && spec.baseline_axis != 1) throw ConfigError("rig: baseline axis must be 0 (x) or 1 (y)");
  Vec3 centre = Vec3::Zero();
  centre(spec.baseline_axis) = spec.baseline;
  const Mat3 rotation = look_rotation(Vec3(0.0, 0.0, spec.convergence) - centre);
  return StereoRig(camera, projector, Extrinsics(rotation, -rotation * centre));
}

}  // namespace slscan
