#include "slscan/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace slscan {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Two unit vectors completing `v` to an orthonormal basis.
std::pair<Vec3, Vec3> tangent_basis(const Vec3& v) {
  const Vec3 helper = std::abs(v.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = v.cross(helper).normalized();
  return {e1, v.cross(e1)};
}

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double hull_area(std::vector<Vec2> pts) {
  if (pts.size() < 3) return 0.0;
  std::sort(pts.begin(), pts.end(),
            [](const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  double area = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % hull.size()];
    area += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(area);
}

double sample_depth(const ImageD& img, double x, double y) {
  const int x0 = std::min(static_cast<int>(std::floor(x)), img.width() - 1);
  const int y0 = std::min(static_cast<int>(std::floor(y)), img.height() - 1);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double ax = x - x0;
  const double ay = y - y0;
  // Neighbours with zero weight do not poison the sample.
  auto term = [](double weight, double value) { return weight == 0.0 ? 0.0 : weight * value; };
  return term((1.0 - ax) * (1.0 - ay), img(x0, y0)) + term(ax * (1.0 - ay), img(x1, y0)) +
         term((1.0 - ax) * ay, img(x0, y1)) + term(ax * ay, img(x1, y1));
}

struct ConeState {
  Vec3 apex;
  Vec3 axis;
  double half_angle;
};

double cost_of(std::span<const Vec3> pts, const ConeState& s) {
  double c = 0.0;
  for (const auto& p : pts) {
    const double d = cone_distance(p, s.apex, s.axis, s.half_angle);
    c += d * d;
  }
  return c;
}

}  // namespace

ImageD depth_map(const PointCloud& cloud, int width, int height) {
  ImageD out(width, height, kNaN);
  for (const auto& p : cloud.points) {
    const int u = static_cast<int>(std::lround(p.u_c));
    const int v = static_cast<int>(std::lround(p.v_c));
    if (out.contains(u, v)) out(u, v) = p.position.z();
  }
  return out;
}

PrecisionReport depth_std(std::span<const ImageD> scans, const Mask* mask) {
  if (scans.size() < 2) throw DataError("depth_std: need at least two scans");
  const ImageD& first = scans.front();
  for (const auto& s : scans) {
    if (!s.same_size(first)) throw DataError("depth_std: scans differ in size");
  }
  if (mask && !mask->same_size(first)) throw DataError("depth_std: mask size differs from the scans");

  PrecisionReport r;
  r.scan_count = static_cast<int>(scans.size());
  r.std_mm = ImageD(first.width(), first.height(), kNaN);
  r.valid = Mask(first.width(), first.height(), 0);
  const double n = static_cast<double>(scans.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (mask && (*mask)[i] == 0) continue;
    double mean = 0.0;
    bool ok = true;
    for (const auto& s : scans) {
      ok = ok && std::isfinite(s[i]);
      mean += s[i];
    }
    if (!ok) continue;
    mean /= n;
    double ss = 0.0;
    for (const auto& s : scans) ss += (s[i] - mean) * (s[i] - mean);
    const double sd = 1000.0 * std::sqrt(ss / (n - 1.0));
    r.std_mm[i] = sd;
    r.valid[i] = 1;
    sum += sd;
    r.max_mm = std::max(r.max_mm, sd);
    ++r.pixel_count;
  }
  if (r.pixel_count == 0) throw DataError("depth_std: no pixel is valid in every scan");
  r.mean_mm = sum / static_cast<double>(r.pixel_count);
  return r;
}

PlaneFit fit_plane(std::span<const Vec3> points) {
  if (points.size() < 3) throw DegenerateFit("plane fit: need at least three points");
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - centroid;
    scatter += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  const Eigen::Vector3d ev = eig.eigenvalues();
  if (!(ev(1) > 1e-12 * ev(2)) || ev(2) <= 0.0) throw DegenerateFit("plane fit: points are collinear");
  PlaneFit fit;
  fit.normal = eig.eigenvectors().col(0).normalized();
  fit.centroid = centroid;
  fit.offset = fit.normal.dot(centroid);
  return fit;
}

RoughnessReport plane_esd(std::span<const Vec3> points) {
  RoughnessReport r;
  r.plane = fit_plane(points);
  r.point_count = points.size();
  double ss = 0.0;
  for (const auto& p : points) {
    const double d = r.plane.signed_distance(p);
    ss += d * d;
  }
  // Signed distances to the fitted plane have zero mean by construction.
  r.esd_mm = 1000.0 * std::sqrt(ss / static_cast<double>(points.size() - 1));
  const auto [e1, e2] = tangent_basis(r.plane.normal);
  std::vector<Vec2> projected;
  projected.reserve(points.size());
  for (const auto& p : points) {
    const Vec3 d = p - r.plane.centroid;
    projected.emplace_back(d.dot(e1), d.dot(e2));
  }
  r.area_m2 = hull_area(std::move(projected));
  return r;
}

RoughnessReport plane_esd(const PointCloud& cloud, const PixelRect& patch) {
  if (patch.empty()) throw ConfigError("plane_esd: empty patch");
  std::vector<Vec3> pts;
  for (const auto& p : cloud.points) {
    if (patch.contains(p.u_c, p.v_c)) pts.push_back(p.position);
  }
  RoughnessReport r = plane_esd(pts);
  r.patch = patch;
  return r;
}

double cone_distance(const Vec3& x, const Vec3& apex, const Vec3& axis, double half_angle) {
  const Vec3 w = x - apex;
  const double h = w.dot(axis);
  const double rho = (w - h * axis).norm();
  return rho * std::cos(half_angle) - h * std::sin(half_angle);
}

ConeFit fit_cone(std::span<const Vec3> points, const ConeSeed& seed, const ConeFitOptions& options) {
  if (points.size() < std::max<std::size_t>(options.min_points, 6)) {
    throw DegenerateFit("cone fit: " + std::to_string(points.size()) + " points in the neighbourhood, need " +
                        std::to_string(options.min_points));
  }
  ConeState s{seed.apex, seed.axis.normalized(), 0.0};
  if (seed.half_angle) {
    s.half_angle = *seed.half_angle;
  } else {
    std::vector<double> angles;
    for (const auto& p : points) {
      const Vec3 w = p - s.apex;
      const double h = w.dot(s.axis);
      if (h > 0.0) angles.push_back(std::atan2((w - h * s.axis).norm(), h));
    }
    if (angles.empty()) throw DegenerateFit("cone fit: no points in front of the seed apex");
    std::nth_element(angles.begin(), angles.begin() + angles.size() / 2, angles.end());
    s.half_angle = angles[angles.size() / 2];
  }

  double lever = 0.0;
  for (const auto& p : points) lever = std::max(lever, (p - s.apex).norm());

  const std::size_t n = points.size();
  Eigen::MatrixXd jac(n, 6);
  Eigen::VectorXd res(n);
  double cost = cost_of(points, s);
  double lambda = 1e-3;
  ConeFit fit;
  bool converged = false;
  for (int iter = 0; iter < options.max_iterations && !converged; ++iter) {
    fit.iterations = iter + 1;
    const auto [e1, e2] = tangent_basis(s.axis);
    const double ca = std::cos(s.half_angle);
    const double sa = std::sin(s.half_angle);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 w = points[i] - s.apex;
      const double h = w.dot(s.axis);
      const Vec3 radial = w - h * s.axis;
      const double rho = radial.norm();
      const Vec3 rhat = rho > 0.0 ? Vec3(radial / rho) : Vec3(e1);
      res(static_cast<Eigen::Index>(i)) = rho * ca - h * sa;
      const Vec3 d_apex = -(ca * rhat - sa * s.axis);
      const double we1 = w.dot(e1);
      const double we2 = w.dot(e2);
      const double safe_rho = std::max(rho, 1e-15);
      const auto row = static_cast<Eigen::Index>(i);
      jac.row(row).head<3>() = d_apex.transpose();
      jac(row, 3) = -ca * h * we1 / safe_rho - sa * we1;
      jac(row, 4) = -ca * h * we2 / safe_rho - sa * we2;
      jac(row, 5) = -rho * sa - h * ca;
    }
    const Eigen::Matrix<double, 6, 6> a = jac.transpose() * jac;
    const Eigen::Matrix<double, 6, 1> g = jac.transpose() * res;

    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix<double, 6, 6> damped = a;
      for (int k = 0; k < 6; ++k) damped(k, k) += lambda * std::max(a(k, k), 1e-18);
      const Eigen::Matrix<double, 6, 1> delta = damped.ldlt().solve(-g);
      ConeState trial;
      trial.apex = s.apex + delta.head<3>();
      trial.axis = (s.axis + delta(3) * e1 + delta(4) * e2).normalized();
      trial.half_angle = s.half_angle + delta(5);
      const double step = std::sqrt(delta.head<3>().squaredNorm() +
                                    lever * lever * (delta(3) * delta(3) + delta(4) * delta(4) + delta(5) * delta(5)));
      const double trial_cost = cost_of(points, trial);
      if (trial_cost <= cost && delta.allFinite()) {
        s = trial;
        cost = trial_cost;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        converged = step < options.step_tolerance;
      } else {
        lambda *= 10.0;
        if (lambda > 1e12 || step < options.step_tolerance) {
          // No representable improvement is left.
          converged = true;
          break;
        }
      }
    }
  }
  if (!converged) throw ConeFitDiverged("cone fit did not converge within " + std::to_string(options.max_iterations) + " iterations");

  fit.apex = s.apex;
  fit.axis = s.axis;
  fit.half_angle = s.half_angle;
  fit.point_count = n;
  fit.rms = std::sqrt(cost / static_cast<double>(n));
  fit.good = fit.rms <= options.residual_threshold;
  return fit;
}

ConeReport fit_cones(const PointCloud& cloud, std::span<const ConeSeed> seeds, const ConeFitOptions& options) {
  ConeReport report;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const ConeSeed& seed = seeds[i];
    if (!(seed.radius > 0.0)) throw ConfigError("fit_cones: seed radius must be positive");
    std::vector<Vec3> pts;
    for (const auto& p : cloud.points) {
      if ((p.position - seed.apex).norm() <= seed.radius) pts.push_back(p.position);
    }
    try {
      report.cones.push_back(fit_cone(pts, seed, options));
    } catch (const NumericalError& e) {
      throw NumericalError("cone " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  for (std::size_t j = 1; j < report.cones.size(); ++j) {
    report.distances_mm.push_back(1000.0 * (report.cones[j].apex - report.cones[0].apex).norm());
  }
  return report;
}

DistanceStatistics distance_statistics(std::span<const ConeReport> scans, std::span<const double> reference_mm) {
  if (scans.empty()) throw DataError("distance statistics: no scans");
  const std::size_t m = reference_mm.size();
  for (const auto& s : scans) {
    if (s.distances_mm.size() != m) throw DataError("distance statistics: scan and reference distance counts differ");
  }
  const double n = static_cast<double>(scans.size());
  DistanceStatistics out;
  for (std::size_t j = 0; j < m; ++j) {
    double mean = 0.0;
    double se = 0.0;
    for (const auto& s : scans) {
      mean += s.distances_mm[j];
      se += (s.distances_mm[j] - reference_mm[j]) * (s.distances_mm[j] - reference_mm[j]);
    }
    mean /= n;
    double ss = 0.0;
    for (const auto& s : scans) ss += (s.distances_mm[j] - mean) * (s.distances_mm[j] - mean);
    out.mean_mm.push_back(mean);
    out.rmse_mm.push_back(std::sqrt(se / n));
    out.std_mm.push_back(scans.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0);
  }
  return out;
}

Profile cross_section(const ImageD& depth_m, const Vec2& from, const Vec2& to) {
  auto inside = [&](const Vec2& p) {
    return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= depth_m.width() - 1.0 && p.y() <= depth_m.height() - 1.0;
  };
  if (depth_m.empty() || !inside(from) || !inside(to)) throw ConfigError("cross section: line leaves the depth map");
  const double length = (to - from).norm();
  const int samples = static_cast<int>(std::floor(length + 1e-9)) + 1;
  const Vec2 dir = length > 0.0 ? Vec2((to - from) / length) : Vec2(0.0, 0.0);
  Profile p;
  p.position.reserve(static_cast<std::size_t>(samples));
  p.depth_mm.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const Vec2 q = from + i * dir;
    const double d = sample_depth(depth_m, std::clamp(q.x(), 0.0, depth_m.width() - 1.0),
                                  std::clamp(q.y(), 0.0, depth_m.height() - 1.0));
    p.position.push_back(i);
    p.depth_mm.push_back(std::isfinite(d) ? 1000.0 * d : kNaN);
  }
  return p;
}

Profile cross_section_row(const ImageD& depth_m, int row) {
  return cross_section(depth_m, Vec2(0.0, row), Vec2(depth_m.width() - 1.0, row));
}

Profile cross_section_column(const ImageD& depth_m, int column) {
  return cross_section(depth_m, Vec2(column, 0.0), Vec2(column, depth_m.height() - 1.0));
}

double ripple_amplitude(const Profile& profile) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < profile.depth_mm.size(); ++i) {
    const double y = profile.depth_mm[i];
    if (!std::isfinite(y)) continue;
    const double x = profile.position[i];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  const double dn = static_cast<double>(n);
  const double denom = dn * sxx - sx * sx;
  const double slope = denom > 0.0 ? (dn * sxy - sx * sy) / denom : 0.0;
  const double intercept = (sy - slope * sx) / dn;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < profile.depth_mm.size(); ++i) {
    const double y = profile.depth_mm[i];
    if (!std::isfinite(y)) continue;
    const double r = y - (intercept + slope * profile.position[i]);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return hi - lo;
}

}  // namespace slscan
