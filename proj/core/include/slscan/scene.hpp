#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "slscan/geometry.hpp"

namespace slscan {

struct Plane {
  Vec3 point = Vec3(0.0, 0.0, 0.5);
  Vec3 normal = Vec3(0.0, 0.0, -1.0);
};

struct Sphere {
  Vec3 centre = Vec3(0.0, 0.0, 0.6);
  double radius = 0.1;
};

/// Bilinearly interpolated height grid over the plane z = base_z. Grid node (i, j)
/// sits at origin + (i, j) * spacing; the surface is z = base_z + h(x, y).
/// Rays that land outside the grid miss.
class HeightField {
 public:
  HeightField(double base_z, Vec2 origin, double spacing, int nx, int ny,
              std::vector<double> heights);

  double base_z() const noexcept { return base_z_; }
  const Vec2& origin() const noexcept { return origin_; }
  double spacing() const noexcept { return spacing_; }
  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double min_height() const noexcept { return min_h_; }
  double max_height() const noexcept { return max_h_; }

  bool contains(double x, double y) const noexcept;
  /// Height offset at (x, y); requires contains(x, y).
  double height(double x, double y) const;
  /// (dh/dx, dh/dy) of the bilinear patch containing (x, y).
  Vec2 gradient(double x, double y) const;

  HeightField translated(const Vec3& offset) const;

 private:
  double node(int i, int j) const { return heights_[static_cast<std::size_t>(j) * nx_ + i]; }

  double base_z_;
  Vec2 origin_;
  double spacing_;
  int nx_, ny_;
  std::vector<double> heights_;
  double min_h_ = 0.0, max_h_ = 0.0;
};

/// Right circular cone, apex toward the viewer, `axis` pointing from the apex
/// into the solid. Lateral surface only, truncated at `height` along the axis.
struct Cone {
  Vec3 apex;
  Vec3 axis = Vec3::UnitZ();
  double half_angle = 0.5;  // radians
  double height = 0.03;     // metres
};

/// Evaluation board: a base plane carrying several cones.
struct ConeBoard {
  Plane base;
  std::vector<Cone> cones;
};

using Shape = std::variant<Plane, Sphere, HeightField, ConeBoard>;

/// Procedural albedo: a sum of random plane waves over world (x, y), mapped into
/// [1 - amplitude, 1]. Amplitude 0 means uniform reflectance.
class Texture {
 public:
  Texture() = default;
  Texture(double amplitude, std::uint64_t seed, double min_wavelength = 0.004,
          double max_wavelength = 0.02, int components = 8);

  double amplitude() const noexcept { return amplitude_; }
  double albedo(const Vec3& world) const;
  Texture translated(const Vec3& offset) const;

 private:
  struct Wave {
    Vec2 k;
    double phase;
  };
  double amplitude_ = 0.0;
  std::vector<Wave> waves_;
  Vec2 origin_ = Vec2::Zero();
};

struct Hit {
  double t;      // ray parameter; distance when the direction is unit length
  Vec3 point;
  Vec3 normal;   // unit, facing the ray origin
};

class Scene {
 public:
  explicit Scene(Shape shape, Texture texture = {});

  const Shape& shape() const noexcept { return shape_; }
  const Texture& texture() const noexcept { return texture_; }

  /// Nearest intersection with t > 0 along origin + t * direction.
  std::optional<Hit> intersect(const Vec3& origin, const Vec3& direction) const;

  double albedo(const Vec3& point) const { return texture_.albedo(point); }

  /// The same scene moved rigidly by `offset` (texture included).
  Scene translated(const Vec3& offset) const;

 private:
  Shape shape_;
  Texture texture_;
};

/// Individual ray-primitive intersections, exposed for tests.
std::optional<Hit> intersect(const Plane& plane, const Vec3& origin, const Vec3& direction);
std::optional<Hit> intersect(const Sphere& sphere, const Vec3& origin, const Vec3& direction);
std::optional<Hit> intersect(const HeightField& field, const Vec3& origin, const Vec3& direction);
std::optional<Hit> intersect(const Cone& cone, const Vec3& origin, const Vec3& direction);
std::optional<Hit> intersect(const ConeBoard& board, const Vec3& origin, const Vec3& direction);

}  // namespace slscan
