#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "slscan/decode.hpp"
#include "slscan/geometry.hpp"
#include "slscan/point_cloud.hpp"

namespace slscan {

/// Intersects the camera ray through `camera_pixel` with the projector plane
/// p = const on `axis`. Both inputs are ideal (undistorted) pixel coordinates.
/// The 3x3 system has rows (u m3 - m1), (v m3 - m2) of M_c and (p m3 - m_axis)
/// of M_p. Returns nullopt when the system is near singular (rays parallel to
/// the projector plane).
std::optional<Vec3> triangulate_pixel(const StereoRig& rig, const Vec2& camera_pixel, double p,
                                      ProjectorAxis axis);

/// Per-pixel determinant tensor. For a fixed camera pixel every cofactor of the
/// triangulation system is affine in the projector coordinate p, so
///   X(p) = (n_x0 + n_x1 p, n_y0 + n_y1 p, n_z0 + n_z1 p) / (d_0 + d_1 p).
/// The camera pixel is undistorted once at build time.
class TriangulationTable {
 public:
  static constexpr int kCoefficients = 8;
  using Coefficients = std::array<double, kCoefficients>;  // nx0 nx1 ny0 ny1 nz0 nz1 d0 d1

  static TriangulationTable build(const StereoRig& rig, ProjectorAxis axis);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  ProjectorAxis axis() const noexcept { return axis_; }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  bool matches(const StereoRig& rig) const { return rig.fingerprint() == fingerprint_; }

  const Coefficients& coefficients(int u, int v) const {
    return table_[static_cast<std::size_t>(v) * width_ + u];
  }
  /// Ideal camera pixel used for (u, v).
  const Vec2& ideal_pixel(int u, int v) const { return ideal_[static_cast<std::size_t>(v) * width_ + u]; }

  /// Same contract as triangulate_pixel for the undistorted position of (u, v).
  std::optional<Vec3> evaluate(int u, int v, double p) const {
    const Coefficients& c = coefficients(u, v);
    const double d = c[6] + c[7] * p;
    const double scale = std::abs(c[4] + c[5] * p);
    if (!(std::abs(d) > 1e-12 * scale)) return std::nullopt;
    return Vec3((c[0] + c[1] * p) / d, (c[2] + c[3] * p) / d, (c[4] + c[5] * p) / d);
  }

  friend bool operator==(const TriangulationTable&, const TriangulationTable&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  ProjectorAxis axis_ = ProjectorAxis::u;
  std::uint64_t fingerprint_ = 0;
  std::vector<Coefficients> table_;
  std::vector<Vec2> ideal_;
};

/// Cofactor coefficients for one ideal camera pixel (exposed for benchmarks/tests).
TriangulationTable::Coefficients table_coefficients(const Mat34& camera, const Mat34& projector,
                                                    const Vec2& camera_pixel, ProjectorAxis axis);

enum class ProjectorDistortionMode {
  none,       ///< treat decoded projector coordinates as ideal
  iterative,  ///< undo projector distortion along the encoded axis using the current depth estimate
};

std::string to_string(ProjectorDistortionMode m);
ProjectorDistortionMode projector_distortion_mode_from_string(const std::string& s);

struct TriangulationOptions {
  ProjectorDistortionMode projector_distortion = ProjectorDistortionMode::iterative;
  int iterations = 2;
};

struct TriangulationResult {
  PointCloud cloud;
  std::size_t dropped = 0;  // masked-in pixels that produced no point
};

class TableMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// One point per valid pixel, in row-major pixel order. Throws TableMismatch when
/// the table was built for a different rig, axis, or image size.
TriangulationResult triangulate_map(const ProjectorCoordMap& coords, const StereoRig& rig,
                                    const TriangulationTable& table, const TriangulationOptions& options = {},
                                    const ImageD* shading = nullptr);

/// Maps an observed (distorted) projector coordinate to its ideal value given a
/// camera-frame point estimate, by one fixed-point step.
double correct_projector_coordinate(const StereoRig& rig, ProjectorAxis axis, double observed,
                                    const Vec3& estimate);

}  // namespace slscan
