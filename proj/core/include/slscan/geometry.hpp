#pragma once

#include <cstdint>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "slscan/error.hpp"

namespace slscan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

/// Pinhole intrinsics in pixels. Pixel centres sit on integer coordinates.
class Intrinsics {
 public:
  Intrinsics(double fx, double fy, double cx, double cy, int width, int height);

  double fx() const noexcept { return fx_; }
  double fy() const noexcept { return fy_; }
  double cx() const noexcept { return cx_; }
  double cy() const noexcept { return cy_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  Mat3 matrix() const;

  Vec2 to_pixel(const Vec2& normalized) const {
    return {fx_ * normalized.x() + cx_, fy_ * normalized.y() + cy_};
  }
  Vec2 to_normalized(const Vec2& pixel) const {
    return {(pixel.x() - cx_) / fx_, (pixel.y() - cy_) / fy_};
  }
  bool in_bounds(const Vec2& pixel) const noexcept;

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;

 private:
  double fx_, fy_, cx_, cy_;
  int width_, height_;
};

/// Five-coefficient radial/tangential lens model. Coefficient order on disk is
/// [k1, k2, p1, p2, k3].
class Distortion {
 public:
  Distortion() = default;
  Distortion(double k1, double k2, double p1, double p2, double k3);

  double k1() const noexcept { return k1_; }
  double k2() const noexcept { return k2_; }
  double p1() const noexcept { return p1_; }
  double p2() const noexcept { return p2_; }
  double k3() const noexcept { return k3_; }
  bool is_zero() const noexcept;

  /// Maps an ideal normalized point to its distorted normalized position.
  Vec2 distort(const Vec2& normalized) const;
  /// d distort / d normalized.
  Eigen::Matrix2d jacobian(const Vec2& normalized) const;

  friend bool operator==(const Distortion&, const Distortion&) = default;

 private:
  double k1_ = 0.0, k2_ = 0.0, p1_ = 0.0, p2_ = 0.0, k3_ = 0.0;
};

/// A camera or projector lens: intrinsics plus distortion. Construction checks
/// that the distortion map is injective over the sensor footprint.
class DeviceModel {
 public:
  DeviceModel(Intrinsics intrinsics, Distortion distortion = {});

  const Intrinsics& intrinsics() const noexcept { return intrinsics_; }
  const Distortion& distortion() const noexcept { return distortion_; }

  friend bool operator==(const DeviceModel&, const DeviceModel&) = default;

 private:
  Intrinsics intrinsics_;
  Distortion distortion_;
};

/// Rigid transform x_device = R x_world + t. Rotation is checked on construction.
class Extrinsics {
 public:
  Extrinsics() = default;
  Extrinsics(const Mat3& rotation, const Vec3& translation);

  static Extrinsics identity() { return {}; }

  const Mat3& rotation() const noexcept { return rotation_; }
  const Vec3& translation() const noexcept { return translation_; }
  Vec3 apply(const Vec3& point) const { return rotation_ * point + translation_; }
  /// Device optical centre in world coordinates.
  Vec3 centre() const { return -rotation_.transpose() * translation_; }

  friend bool operator==(const Extrinsics&, const Extrinsics&) = default;

 private:
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

enum class Device { camera, projector };

/// Camera-projector pair. The world frame is the camera frame; `projector_pose`
/// maps camera-frame points into the projector frame.
class StereoRig {
 public:
  StereoRig(DeviceModel camera, DeviceModel projector, Extrinsics projector_pose);

  const DeviceModel& camera() const noexcept { return camera_; }
  const DeviceModel& projector() const noexcept { return projector_; }
  const Extrinsics& projector_pose() const noexcept { return projector_pose_; }
  const DeviceModel& device(Device d) const noexcept {
    return d == Device::camera ? camera_ : projector_;
  }
  double baseline() const { return projector_pose_.translation().norm(); }

  /// Stable 64-bit hash of every calibration parameter.
  std::uint64_t fingerprint() const;

  friend bool operator==(const StereoRig&, const StereoRig&) = default;

 private:
  DeviceModel camera_;
  DeviceModel projector_;
  Extrinsics projector_pose_;
};

class PointBehindDevice : public DataError {
 public:
  using DataError::DataError;
};

class UndistortionDiverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Projects a world point to a distorted pixel: transform, divide by z, distort,
/// apply intrinsics. Throws PointBehindDevice when z <= 0 in the device frame.
Vec2 project(const DeviceModel& model, const Extrinsics& pose, const Vec3& point);

inline Vec2 project(const DeviceModel& model, const Vec3& point) {
  return project(model, Extrinsics::identity(), point);
}

struct UndistortOptions {
  int max_iterations = 20;
  double tolerance = 1e-10;  // normalized units
};

/// Inverts the distortion map with damped Newton iterations starting at the
/// distorted point. Throws UndistortionDiverged when the residual stays above
/// tolerance.
Vec2 undistort_normalized(const Distortion& distortion, const Vec2& distorted,
                          const UndistortOptions& options = {});

/// Normalized ray (x, y, 1) through a distorted in-bounds pixel.
Vec3 undistort_pixel(const DeviceModel& model, const Vec2& pixel,
                     const UndistortOptions& options = {});

/// Pixel position the point would have under a distortion-free lens.
Vec2 ideal_pixel(const DeviceModel& model, const Vec2& pixel,
                 const UndistortOptions& options = {});

/// M_c = K_c [I | 0] for the camera, M_p = K_p [R | t] for the projector.
/// Distortion is not part of the matrix.
Mat34 projection_matrix(const StereoRig& rig, Device device);

/// Rotation whose third row (the device optical axis in world coordinates) is
/// `forward`, with `down` used to fix roll. Useful for building rigs.
Mat3 look_rotation(const Vec3& forward, const Vec3& down = Vec3::UnitY());

}  // namespace slscan
