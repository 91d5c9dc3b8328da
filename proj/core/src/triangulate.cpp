#include "slscan/triangulate.hpp"

#include <cmath>

#include <Eigen/LU>

namespace slscan {

namespace {

using Row = Eigen::Matrix<double, 1, 4>;

int axis_row(ProjectorAxis axis) { return axis == ProjectorAxis::u ? 0 : 1; }

/// Signed 3x3 minors of the 3x4 matrix [r1; r2; r3] with column j removed,
/// i.e. the homogeneous null vector of the system.
Eigen::Vector4d null_vector(const Row& r1, const Row& r2, const Row& r3) {
  Eigen::Matrix<double, 3, 4> m;
  m << r1, r2, r3;
  Eigen::Vector4d out;
  for (int j = 0; j < 4; ++j) {
    Mat3 minor;
    int col = 0;
    for (int c = 0; c < 4; ++c) {
      if (c == j) continue;
      minor.col(col++) = m.col(c);
    }
    out(j) = ((j % 2) == 0 ? 1.0 : -1.0) * minor.determinant();
  }
  return out;
}

}  // namespace

std::string to_string(ProjectorDistortionMode m) {
  return m == ProjectorDistortionMode::none ? "none" : "iterative";
}

ProjectorDistortionMode projector_distortion_mode_from_string(const std::string& s) {
  if (s == "none") return ProjectorDistortionMode::none;
  if (s == "iterative") return ProjectorDistortionMode::iterative;
  throw ConfigError("unknown projector distortion mode '" + s + "'");
}

std::optional<Vec3> triangulate_pixel(const StereoRig& rig, const Vec2& camera_pixel, double p,
                                      ProjectorAxis axis) {
  const Mat34 mc = projection_matrix(rig, Device::camera);
  const Mat34 mp = projection_matrix(rig, Device::projector);
  Eigen::Matrix<double, 3, 4> a;
  a.row(0) = camera_pixel.x() * mc.row(2) - mc.row(0);
  a.row(1) = camera_pixel.y() * mc.row(2) - mc.row(1);
  a.row(2) = p * mp.row(2) - mp.row(axis_row(axis));
  const Mat3 lhs = a.leftCols<3>();
  const double det = lhs.determinant();
  const double scale = lhs.row(0).norm() * lhs.row(1).norm() * lhs.row(2).norm();
  if (!(std::abs(det) > 1e-12 * scale)) return std::nullopt;
  return Vec3(lhs.partialPivLu().solve(-a.col(3)));
}

TriangulationTable::Coefficients table_coefficients(const Mat34& camera, const Mat34& projector,
                                                    const Vec2& camera_pixel, ProjectorAxis axis) {
  const Row r1 = camera_pixel.x() * camera.row(2) - camera.row(0);
  const Row r2 = camera_pixel.y() * camera.row(2) - camera.row(1);
  // Row 3 is p * slope - offset; every minor is linear in row 3.
  const Row slope = projector.row(2);
  const Row offset = -projector.row(axis_row(axis));
  const Eigen::Vector4d n1 = null_vector(r1, r2, slope);
  const Eigen::Vector4d n0 = null_vector(r1, r2, offset);
  return {n0(0), n1(0), n0(1), n1(1), n0(2), n1(2), n0(3), n1(3)};
}

TriangulationTable TriangulationTable::build(const StereoRig& rig, ProjectorAxis axis) {
  const auto& kc = rig.camera().intrinsics();
  const Mat34 mc = projection_matrix(rig, Device::camera);
  const Mat34 mp = projection_matrix(rig, Device::projector);
  TriangulationTable t;
  t.width_ = kc.width();
  t.height_ = kc.height();
  t.axis_ = axis;
  t.fingerprint_ = rig.fingerprint();
  t.table_.reserve(static_cast<std::size_t>(t.width_) * t.height_);
  t.ideal_.reserve(static_cast<std::size_t>(t.width_) * t.height_);
  for (int v = 0; v < t.height_; ++v) {
    for (int u = 0; u < t.width_; ++u) {
      const Vec2 ideal = slscan::ideal_pixel(rig.camera(), Vec2(u, v));
      t.ideal_.push_back(ideal);
      t.table_.push_back(table_coefficients(mc, mp, ideal, axis));
    }
  }
  return t;
}

double correct_projector_coordinate(const StereoRig& rig, ProjectorAxis axis, double observed,
                                    const Vec3& estimate) {
  const Vec3 in_projector = rig.projector_pose().apply(estimate);
  const Vec2 ideal(in_projector.x() / in_projector.z(), in_projector.y() / in_projector.z());
  const Vec2 distorted = rig.projector().distortion().distort(ideal);
  const auto& kp = rig.projector().intrinsics();
  const int i = axis_row(axis);
  const double focal = i == 0 ? kp.fx() : kp.fy();
  const double centre = i == 0 ? kp.cx() : kp.cy();
  const double observed_n = (observed - centre) / focal;
  return focal * (ideal(i) + (observed_n - distorted(i))) + centre;
}

TriangulationResult triangulate_map(const ProjectorCoordMap& coords, const StereoRig& rig,
                                    const TriangulationTable& table, const TriangulationOptions& options,
                                    const ImageD* shading) {
  if (!table.matches(rig)) throw TableMismatch("triangulate: table was built for a different rig");
  if (table.axis() != coords.axis) throw TableMismatch("triangulate: table axis differs from the coordinate map");
  if (table.width() != coords.coord.width() || table.height() != coords.coord.height()) {
    throw TableMismatch("triangulate: table size differs from the coordinate map");
  }
  if (!coords.coord.same_size(coords.mask)) throw DataError("triangulate: mask size differs");
  if (shading && !shading->same_size(coords.coord)) throw DataError("triangulate: shading size differs");

  const bool correct = options.projector_distortion == ProjectorDistortionMode::iterative &&
                       !rig.projector().distortion().is_zero();
  TriangulationResult result;
  result.cloud.has_intensity = shading != nullptr;
  for (int v = 0; v < coords.coord.height(); ++v) {
    for (int u = 0; u < coords.coord.width(); ++u) {
      if (coords.mask(u, v) == 0) continue;
      const double observed = coords.coord(u, v);
      std::optional<Vec3> point = table.evaluate(u, v, observed);
      for (int it = 0; correct && point && point->z() > 0.0 && it < options.iterations; ++it) {
        point = table.evaluate(u, v, correct_projector_coordinate(rig, coords.axis, observed, *point));
      }
      if (!point || !point->allFinite() || !(point->z() > 0.0)) {
        ++result.dropped;
        continue;
      }
      result.cloud.points.push_back({*point, static_cast<float>(u), static_cast<float>(v),
                                     shading ? static_cast<float>((*shading)(u, v)) : 0.0f});
    }
  }
  return result;
}

}  // namespace slscan
