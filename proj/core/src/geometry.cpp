#include "slscan/geometry.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

namespace slscan {

Intrinsics::Intrinsics(double fx, double fy, double cx, double cy, int width, int height)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height) {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw ConfigError("intrinsics: focal lengths must be positive and finite");
  }
  if (width <= 0 || height <= 0) {
    throw ConfigError("intrinsics: sensor size must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw ConfigError("intrinsics: principal point outside the sensor");
  }
}

Mat3 Intrinsics::matrix() const {
  Mat3 k;
  k << fx_, 0.0, cx_, 0.0, fy_, cy_, 0.0, 0.0, 1.0;
  return k;
}

bool Intrinsics::in_bounds(const Vec2& pixel) const noexcept {
  return pixel.x() >= 0.0 && pixel.y() >= 0.0 && pixel.x() <= width_ - 1.0 &&
         pixel.y() <= height_ - 1.0;
}

Distortion::Distortion(double k1, double k2, double p1, double p2, double k3)
    : k1_(k1), k2_(k2), p1_(p1), p2_(p2), k3_(k3) {
  for (double c : {k1, k2, p1, p2, k3}) {
    if (!std::isfinite(c)) throw ConfigError("distortion: coefficients must be finite");
  }
}

bool Distortion::is_zero() const noexcept {
  return k1_ == 0.0 && k2_ == 0.0 && p1_ == 0.0 && p2_ == 0.0 && k3_ == 0.0;
}

Vec2 Distortion::distort(const Vec2& n) const {
  const double x = n.x();
  const double y = n.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (k1_ + r2 * (k2_ + r2 * k3_));
  return {x * radial + 2.0 * p1_ * x * y + p2_ * (r2 + 2.0 * x * x),
          y * radial + p1_ * (r2 + 2.0 * y * y) + 2.0 * p2_ * x * y};
}

Eigen::Matrix2d Distortion::jacobian(const Vec2& n) const {
  const double x = n.x();
  const double y = n.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (k1_ + r2 * (k2_ + r2 * k3_));
  const double dradial = k1_ + r2 * (2.0 * k2_ + 3.0 * k3_ * r2);  // d radial / d r2
  Eigen::Matrix2d j;
  j(0, 0) = radial + 2.0 * x * x * dradial + 2.0 * p1_ * y + 6.0 * p2_ * x;
  j(0, 1) = 2.0 * x * y * dradial + 2.0 * p1_ * x + 2.0 * p2_ * y;
  j(1, 0) = 2.0 * x * y * dradial + 2.0 * p1_ * x + 2.0 * p2_ * y;
  j(1, 1) = radial + 2.0 * y * y * dradial + 6.0 * p1_ * y + 2.0 * p2_ * x;
  return j;
}

DeviceModel::DeviceModel(Intrinsics intrinsics, Distortion distortion)
    : intrinsics_(intrinsics), distortion_(distortion) {
  if (distortion_.is_zero()) return;
  // The distortion map must be locally invertible (positive Jacobian) everywhere
  // on a grid spanning the sensor footprint plus a 10% margin.
  constexpr int kGrid = 33;
  const Vec2 lo = intrinsics_.to_normalized({0.0, 0.0});
  const Vec2 hi = intrinsics_.to_normalized(
      {static_cast<double>(intrinsics_.width() - 1), static_cast<double>(intrinsics_.height() - 1)});
  const Vec2 centre = 0.5 * (lo + hi);
  const Vec2 half = 0.55 * (hi - lo);
  for (int iy = 0; iy < kGrid; ++iy) {
    for (int ix = 0; ix < kGrid; ++ix) {
      const Vec2 n(centre.x() + half.x() * (2.0 * ix / (kGrid - 1) - 1.0),
                   centre.y() + half.y() * (2.0 * iy / (kGrid - 1) - 1.0));
      if (!(distortion_.jacobian(n).determinant() > 0.0)) {
        std::ostringstream os;
        os << "distortion: map is not injective over the sensor footprint (fold near "
           << n.transpose() << ")";
        throw ConfigError(os.str());
      }
    }
  }
}

Extrinsics::Extrinsics(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw ConfigError("extrinsics: non-finite entries");
  }
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9) throw ConfigError("extrinsics: rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw ConfigError("extrinsics: rotation determinant is not +1");
  }
}

StereoRig::StereoRig(DeviceModel camera, DeviceModel projector, Extrinsics projector_pose)
    : camera_(std::move(camera)), projector_(std::move(projector)),
      projector_pose_(std::move(projector_pose)) {
  if (!(projector_pose_.translation().norm() > 0.0)) {
    throw ConfigError("rig: camera-projector baseline must be nonzero");
  }
}

namespace {

class Fnv1a {
 public:
  void add(double v) { add_bytes(std::bit_cast<std::uint64_t>(v)); }
  void add(int v) { add_bytes(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
  std::uint64_t value() const { return hash_; }

 private:
  void add_bytes(std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      hash_ ^= (word >> (8 * i)) & 0xffu;
      hash_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

void hash_device(Fnv1a& h, const DeviceModel& d) {
  const auto& k = d.intrinsics();
  h.add(k.fx());
  h.add(k.fy());
  h.add(k.cx());
  h.add(k.cy());
  h.add(k.width());
  h.add(k.height());
  const auto& dist = d.distortion();
  for (double c : {dist.k1(), dist.k2(), dist.p1(), dist.p2(), dist.k3()}) h.add(c);
}

}  // namespace

std::uint64_t StereoRig::fingerprint() const {
  Fnv1a h;
  hash_device(h, camera_);
  hash_device(h, projector_);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) h.add(projector_pose_.rotation()(r, c));
  }
  for (int i = 0; i < 3; ++i) h.add(projector_pose_.translation()(i));
  return h.value();
}

Vec2 project(const DeviceModel& model, const Extrinsics& pose, const Vec3& point) {
  const Vec3 p = pose.apply(point);
  if (!(p.z() > 0.0)) {
    throw PointBehindDevice("project: point is not in front of the device");
  }
  const Vec2 normalized(p.x() / p.z(), p.y() / p.z());
  return model.intrinsics().to_pixel(model.distortion().distort(normalized));
}

Vec2 undistort_normalized(const Distortion& distortion, const Vec2& distorted,
                          const UndistortOptions& options) {
  if (distortion.is_zero()) return distorted;
  Vec2 x = distorted;
  Vec2 residual = distortion.distort(x) - distorted;
  for (int it = 0; it < options.max_iterations; ++it) {
    if (residual.norm() < options.tolerance) {
      // One more full Newton step drives the residual to rounding level.
      const Vec2 step = distortion.jacobian(x).partialPivLu().solve(residual);
      const Vec2 refined = x - step;
      if ((distortion.distort(refined) - distorted).norm() <= residual.norm()) x = refined;
      return x;
    }
    const Vec2 step = distortion.jacobian(x).partialPivLu().solve(residual);
    double damping = 1.0;
    Vec2 candidate = x - step;
    Vec2 candidate_residual = distortion.distort(candidate) - distorted;
    while (candidate_residual.norm() > residual.norm() && damping > 1e-4) {
      damping *= 0.5;
      candidate = x - damping * step;
      candidate_residual = distortion.distort(candidate) - distorted;
    }
    x = candidate;
    residual = candidate_residual;
  }
  if (residual.norm() < options.tolerance) return x;
  std::ostringstream os;
  os << "undistort: no convergence after " << options.max_iterations
     << " iterations at normalized point " << distorted.transpose();
  throw UndistortionDiverged(os.str());
}

Vec3 undistort_pixel(const DeviceModel& model, const Vec2& pixel, const UndistortOptions& options) {
  const auto& k = model.intrinsics();
  if (!k.in_bounds(pixel)) throw DataError("undistort: pixel outside the sensor");
  const Vec2 n = undistort_normalized(model.distortion(), k.to_normalized(pixel), options);
  return {n.x(), n.y(), 1.0};
}

Vec2 ideal_pixel(const DeviceModel& model, const Vec2& pixel, const UndistortOptions& options) {
  const Vec3 ray = undistort_pixel(model, pixel, options);
  return model.intrinsics().to_pixel(ray.head<2>());
}

Mat34 projection_matrix(const StereoRig& rig, Device device) {
  Mat34 rt = Mat34::Zero();
  if (device == Device::camera) {
    rt.leftCols<3>() = Mat3::Identity();
    return rig.camera().intrinsics().matrix() * rt;
  }
  rt.leftCols<3>() = rig.projector_pose().rotation();
  rt.col(3) = rig.projector_pose().translation();
  return rig.projector().intrinsics().matrix() * rt;
}

Mat3 look_rotation(const Vec3& forward, const Vec3& down) {
  const Vec3 z = forward.normalized();
  const Vec3 x = down.cross(z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return r;
}

}  // namespace slscan
