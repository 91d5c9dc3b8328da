#include "slscan/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace slscan {

namespace {

constexpr double kMinT = 1e-12;

Vec3 facing(const Vec3& normal, const Vec3& direction) {
  return normal.dot(direction) > 0.0 ? Vec3(-normal) : normal;
}

void keep_nearest(std::optional<Hit>& best, std::optional<Hit> candidate) {
  if (candidate && (!best || candidate->t < best->t)) best = candidate;
}

}  // namespace

HeightField::HeightField(double base_z, Vec2 origin, double spacing, int nx, int ny,
                         std::vector<double> heights)
    : base_z_(base_z), origin_(origin), spacing_(spacing), nx_(nx), ny_(ny),
      heights_(std::move(heights)) {
  if (!(spacing > 0.0)) throw ConfigError("height field: grid spacing must be positive");
  if (nx < 2 || ny < 2) throw ConfigError("height field: grid needs at least 2x2 nodes");
  if (heights_.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)) {
    throw ConfigError("height field: heights size does not match nx * ny");
  }
  const auto [lo, hi] = std::minmax_element(heights_.begin(), heights_.end());
  min_h_ = *lo;
  max_h_ = *hi;
}

bool HeightField::contains(double x, double y) const noexcept {
  const double gx = (x - origin_.x()) / spacing_;
  const double gy = (y - origin_.y()) / spacing_;
  return gx >= 0.0 && gy >= 0.0 && gx <= nx_ - 1.0 && gy <= ny_ - 1.0;
}

double HeightField::height(double x, double y) const {
  const double gx = (x - origin_.x()) / spacing_;
  const double gy = (y - origin_.y()) / spacing_;
  const int i = std::clamp(static_cast<int>(std::floor(gx)), 0, nx_ - 2);
  const int j = std::clamp(static_cast<int>(std::floor(gy)), 0, ny_ - 2);
  const double ax = gx - i;
  const double ay = gy - j;
  const double top = (1.0 - ax) * node(i, j) + ax * node(i + 1, j);
  const double bottom = (1.0 - ax) * node(i, j + 1) + ax * node(i + 1, j + 1);
  return (1.0 - ay) * top + ay * bottom;
}

Vec2 HeightField::gradient(double x, double y) const {
  const double gx = (x - origin_.x()) / spacing_;
  const double gy = (y - origin_.y()) / spacing_;
  const int i = std::clamp(static_cast<int>(std::floor(gx)), 0, nx_ - 2);
  const int j = std::clamp(static_cast<int>(std::floor(gy)), 0, ny_ - 2);
  const double ax = gx - i;
  const double ay = gy - j;
  const double dx = (1.0 - ay) * (node(i + 1, j) - node(i, j)) +
                    ay * (node(i + 1, j + 1) - node(i, j + 1));
  const double dy = (1.0 - ax) * (node(i, j + 1) - node(i, j)) +
                    ax * (node(i + 1, j + 1) - node(i + 1, j));
  return Vec2(dx, dy) / spacing_;
}

HeightField HeightField::translated(const Vec3& offset) const {
  HeightField out = *this;
  out.base_z_ += offset.z();
  out.origin_ += offset.head<2>();
  return out;
}

Texture::Texture(double amplitude, std::uint64_t seed, double min_wavelength,
                 double max_wavelength, int components)
    : amplitude_(amplitude) {
  if (amplitude < 0.0 || amplitude > 1.0) throw ConfigError("texture: amplitude must be in [0, 1]");
  if (!(min_wavelength > 0.0) || max_wavelength < min_wavelength || components < 1) {
    throw ConfigError("texture: invalid wavelength range or component count");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 0; c < components; ++c) {
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    const double wavelength = min_wavelength + (max_wavelength - min_wavelength) * unit(rng);
    const double k = 2.0 * std::numbers::pi / wavelength;
    waves_.push_back({Vec2(k * std::cos(angle), k * std::sin(angle)),
                      2.0 * std::numbers::pi * unit(rng)});
  }
}

double Texture::albedo(const Vec3& world) const {
  if (amplitude_ == 0.0 || waves_.empty()) return 1.0;
  const Vec2 p = world.head<2>() - origin_;
  double s = 0.0;
  for (const auto& w : waves_) s += std::sin(w.k.dot(p) + w.phase);
  s /= std::sqrt(static_cast<double>(waves_.size()));
  return 1.0 - amplitude_ * (0.5 + 0.5 * std::tanh(s));
}

Texture Texture::translated(const Vec3& offset) const {
  Texture out = *this;
  out.origin_ += offset.head<2>();
  return out;
}

std::optional<Hit> intersect(const Plane& plane, const Vec3& origin, const Vec3& direction) {
  const Vec3 n = plane.normal.normalized();
  const double denom = n.dot(direction);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = n.dot(plane.point - origin) / denom;
  if (!(t > kMinT)) return std::nullopt;
  return Hit{t, origin + t * direction, facing(n, direction)};
}

std::optional<Hit> intersect(const Sphere& sphere, const Vec3& origin, const Vec3& direction) {
  const Vec3 oc = origin - sphere.centre;
  const double a = direction.squaredNorm();
  const double half_b = oc.dot(direction);
  const double c = oc.squaredNorm() - sphere.radius * sphere.radius;
  const double disc = half_b * half_b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = half_b > 0.0 ? -(half_b + root) : -(half_b - root);
  double t0 = q / a;
  double t1 = q != 0.0 ? c / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  const double t = t0 > kMinT ? t0 : t1;
  if (!(t > kMinT)) return std::nullopt;
  const Vec3 p = origin + t * direction;
  return Hit{t, p, facing((p - sphere.centre).normalized(), direction)};
}

std::optional<Hit> intersect(const HeightField& field, const Vec3& origin, const Vec3& direction) {
  if (std::abs(direction.z()) < 1e-12) return std::nullopt;
  // Bracket the ray segment lying inside the slab of possible surface heights.
  const double za = field.base_z() + field.min_height();
  const double zb = field.base_z() + field.max_height();
  double t_lo = (za - origin.z()) / direction.z();
  double t_hi = (zb - origin.z()) / direction.z();
  if (t_lo > t_hi) std::swap(t_lo, t_hi);
  t_lo = std::max(t_lo, kMinT);
  const double margin = 1e-9 / direction.norm();
  t_lo = std::max(kMinT, t_lo - margin);
  t_hi += margin;
  if (t_hi <= t_lo) return std::nullopt;

  auto gap = [&](double t) {  // signed distance along z; sign flips at the surface
    const Vec3 p = origin + t * direction;
    return (p.z() - field.base_z() - field.height(p.x(), p.y())) * (direction.z() > 0 ? 1.0 : -1.0);
  };
  auto inside = [&](double t) {
    const Vec3 p = origin + t * direction;
    return field.contains(p.x(), p.y());
  };

  const double xy_speed = direction.head<2>().norm();
  const double dz = (zb - za) / std::abs(direction.z());
  double step = (t_hi - t_lo) / 8.0;
  if (xy_speed > 0.0) step = std::min(step, 0.25 * field.spacing() / xy_speed);
  step = std::max(step, std::max(dz, 1e-9) / 4096.0);

  double prev_t = t_lo;
  bool prev_in = inside(prev_t);
  double prev_gap = prev_in ? gap(prev_t) : -1.0;
  for (double t = t_lo + step;; t += step) {
    const bool last = t >= t_hi;
    if (last) t = t_hi;
    const bool in = inside(t);
    const double g = in ? gap(t) : -1.0;
    if (in && prev_in && prev_gap < 0.0 && g >= 0.0) {
      double a = prev_t;
      double b = t;
      while ((b - a) * direction.norm() > 1e-9) {
        const double mid = 0.5 * (a + b);
        (gap(mid) < 0.0 ? a : b) = mid;
      }
      const double th = 0.5 * (a + b);
      const Vec3 p = origin + th * direction;
      const Vec2 grad = field.gradient(p.x(), p.y());
      const Vec3 n = Vec3(-grad.x(), -grad.y(), 1.0).normalized();
      return Hit{th, p, facing(n, direction)};
    }
    prev_t = t;
    prev_in = in;
    prev_gap = g;
    if (last) break;
  }
  return std::nullopt;
}

std::optional<Hit> intersect(const Cone& cone, const Vec3& origin, const Vec3& direction) {
  const Vec3 a = cone.axis.normalized();
  const double c2 = std::pow(std::cos(cone.half_angle), 2);
  const Vec3 w = origin - cone.apex;
  const double dv = direction.dot(a);
  const double wv = w.dot(a);
  const double qa = dv * dv - c2 * direction.squaredNorm();
  const double qb = 2.0 * (dv * wv - c2 * direction.dot(w));
  const double qc = wv * wv - c2 * w.squaredNorm();

  double roots[2];
  int count = 0;
  if (std::abs(qa) < 1e-15) {
    if (std::abs(qb) > 1e-15) roots[count++] = -qc / qb;
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    const double q = -0.5 * (qb + (qb >= 0.0 ? root : -root));
    roots[count++] = q / qa;
    if (q != 0.0) roots[count++] = qc / q;
  }
  std::optional<Hit> best;
  for (int i = 0; i < count; ++i) {
    const double t = roots[i];
    if (!(t > kMinT)) continue;
    const Vec3 p = origin + t * direction;
    const Vec3 v = p - cone.apex;
    const double h = v.dot(a);
    if (h < 0.0 || h > cone.height) continue;  // mirror nappe or beyond the base
    if (best && best->t <= t) continue;
    Vec3 n = h * a - c2 * v;  // gradient direction of (v.a)^2 - c2 |v|^2, outward
    n = (-n).normalized();
    best = Hit{t, p, facing(n, direction)};
  }
  return best;
}

std::optional<Hit> intersect(const ConeBoard& board, const Vec3& origin, const Vec3& direction) {
  std::optional<Hit> best = intersect(board.base, origin, direction);
  for (const auto& cone : board.cones) keep_nearest(best, intersect(cone, origin, direction));
  return best;
}

Scene::Scene(Shape shape, Texture texture) : shape_(std::move(shape)), texture_(std::move(texture)) {
  if (const auto* s = std::get_if<Sphere>(&shape_); s && !(s->radius > 0.0)) {
    throw ConfigError("scene: sphere radius must be positive");
  }
  if (const auto* p = std::get_if<Plane>(&shape_); p && !(p->normal.norm() > 0.0)) {
    throw ConfigError("scene: plane normal must be nonzero");
  }
  if (const auto* b = std::get_if<ConeBoard>(&shape_)) {
    for (const auto& c : b->cones) {
      if (!(c.half_angle > 0.0 && c.half_angle < std::numbers::pi / 2) || !(c.height > 0.0)) {
        throw ConfigError("scene: cone half-angle must be in (0, pi/2) and height positive");
      }
    }
  }
}

std::optional<Hit> Scene::intersect(const Vec3& origin, const Vec3& direction) const {
  return std::visit([&](const auto& s) { return slscan::intersect(s, origin, direction); }, shape_);
}

Scene Scene::translated(const Vec3& offset) const {
  Shape moved = std::visit(
      [&](const auto& s) -> Shape {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Plane>) {
          return Plane{s.point + offset, s.normal};
        } else if constexpr (std::is_same_v<T, Sphere>) {
          return Sphere{s.centre + offset, s.radius};
        } else if constexpr (std::is_same_v<T, HeightField>) {
          return s.translated(offset);
        } else {
          ConeBoard b{Plane{s.base.point + offset, s.base.normal}, s.cones};
          for (auto& c : b.cones) c.apex += offset;
          return b;
        }
      },
      shape_);
  return Scene(std::move(moved), texture_.translated(offset));
}

}  // namespace slscan
