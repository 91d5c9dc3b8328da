#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "slscan/error.hpp"
#include "slscan/geometry.hpp"
#include "slscan/image.hpp"
#include "slscan/point_cloud.hpp"

namespace slscan {

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool contains(double u, double v) const noexcept { return u >= x0 && u < x1 && v >= y0 && v < y1; }
  bool empty() const noexcept { return x1 <= x0 || y1 <= y0; }
};

/// Depth (z, metres) per source camera pixel; NaN where the cloud has no point.
ImageD depth_map(const PointCloud& cloud, int width, int height);

struct PrecisionReport {
  ImageD std_mm;  // NaN outside `valid`
  Mask valid;     // valid in every scan
  double mean_mm = 0.0;
  double max_mm = 0.0;
  std::size_t pixel_count = 0;
  int scan_count = 0;
};

/// Per-pixel unbiased standard deviation of depth over repeated scans. Depth maps
/// are in metres with NaN marking invalid pixels; `mask` optionally restricts
/// the region further.
PrecisionReport depth_std(std::span<const ImageD> scans, const Mask* mask = nullptr);

class DegenerateFit : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Plane n . x = offset with unit normal n.
struct PlaneFit {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  Vec3 centroid = Vec3::Zero();

  double signed_distance(const Vec3& x) const { return normal.dot(x) - offset; }
};

/// Total least squares plane: the normal is the eigenvector of the smallest
/// eigenvalue of the centred scatter matrix. Throws DegenerateFit for fewer than
/// three points or collinear points.
PlaneFit fit_plane(std::span<const Vec3> points);

struct RoughnessReport {
  double esd_mm = 0.0;
  PlaneFit plane;
  std::optional<PixelRect> patch;
  std::size_t point_count = 0;
  double area_m2 = 0.0;  // convex hull of the patch projected onto the plane
};

/// ESD: sample standard deviation of signed orthogonal distances to the plane.
RoughnessReport plane_esd(std::span<const Vec3> points);
RoughnessReport plane_esd(const PointCloud& cloud, const PixelRect& patch);

struct ConeSeed {
  Vec3 apex = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();  // from the apex into the solid
  double radius = 0.0;        // neighbourhood radius around the apex, metres
  std::optional<double> half_angle;
};

struct ConeFitOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-10;    // metres
  double residual_threshold = 1e-3; // RMS above this flags a bad fit
  std::size_t min_points = 100;
};

struct ConeFit {
  Vec3 apex = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double half_angle = 0.0;
  double rms = 0.0;  // metres
  std::size_t point_count = 0;
  int iterations = 0;
  bool good = false;  // rms <= residual_threshold
};

class ConeFitDiverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Orthogonal distance from x to the cone surface (negative inside).
double cone_distance(const Vec3& x, const Vec3& apex, const Vec3& axis, double half_angle);

/// Levenberg-Marquardt fit over apex, unit axis and half-angle. Throws
/// DegenerateFit with too few points and ConeFitDiverged when the step never
/// falls below the tolerance.
ConeFit fit_cone(std::span<const Vec3> points, const ConeSeed& seed, const ConeFitOptions& options = {});

struct ConeReport {
  std::vector<ConeFit> cones;
  std::vector<double> distances_mm;  // apex of cone 1 to apex of cone j, j = 2..n
};

/// Fits one cone per seed from the cloud points within the seed radius.
ConeReport fit_cones(const PointCloud& cloud, std::span<const ConeSeed> seeds,
                     const ConeFitOptions& options = {});

struct DistanceStatistics {
  std::vector<double> mean_mm;
  std::vector<double> rmse_mm;  // against the reference
  std::vector<double> std_mm;   // unbiased spread across scans
};

/// Aggregates cone-1 distances over repeated scans against reference values (mm).
DistanceStatistics distance_statistics(std::span<const ConeReport> scans, std::span<const double> reference_mm);

struct Profile {
  std::vector<double> position;  // pixels along the line from its start
  std::vector<double> depth_mm;  // NaN where the depth map is invalid
};

/// Depth along the segment from `from` to `to` (pixel coordinates), sampled at
/// unit spacing with bilinear interpolation. Any invalid neighbour yields NaN.
/// Throws ConfigError when an endpoint lies outside the map.
Profile cross_section(const ImageD& depth_m, const Vec2& from, const Vec2& to);
Profile cross_section_row(const ImageD& depth_m, int row);
Profile cross_section_column(const ImageD& depth_m, int column);

/// Max minus min of the profile after removing its least-squares line.
/// NaN samples are skipped; returns 0 for fewer than two finite samples.
double ripple_amplitude(const Profile& profile);

}  // namespace slscan
