#pragma once

#include <vector>

#include "slscan/geometry.hpp"

namespace slscan {

struct CloudPoint {
  Vec3 position;        // metres, camera frame
  float u_c = 0.0f;     // source camera pixel
  float v_c = 0.0f;
  float intensity = 0.0f;
};

struct PointCloud {
  std::vector<CloudPoint> points;
  bool has_intensity = false;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
};

}  // namespace slscan
