#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "slscan/decode.hpp"
#include "slscan/simulator.hpp"
#include "slscan/triangulate.hpp"

namespace slscan {
namespace {

StereoRig unit_rig() {
  const DeviceModel dev(Intrinsics(1, 1, 0, 0, 2, 2));
  return StereoRig(dev, dev, Extrinsics(Mat3::Identity(), Vec3(-1, 0, 0)));
}

TEST(TriangulatePixel, OnAxisPoint) {
  const auto x = triangulate_pixel(unit_rig(), Vec2(0, 0), -1.0, ProjectorAxis::u);
  ASSERT_TRUE(x);
  EXPECT_NEAR((*x - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
}

TEST(TriangulatePixel, ForwardBackwardRoundtrip) {
  const StereoRig rig = unit_rig();
  const Vec3 truth(0.5, 0, 1);
  const double p = project(rig.projector(), rig.projector_pose(), truth).x();
  EXPECT_NEAR(p, -0.5, 1e-15);
  const auto x = triangulate_pixel(rig, Vec2(0.5, 0), p, ProjectorAxis::u);
  ASSERT_TRUE(x);
  EXPECT_NEAR((*x - truth).norm(), 0.0, 1e-15);
}

TEST(TriangulatePixel, RayParallelToProjectorPlaneIsDegenerate) {
  EXPECT_FALSE(triangulate_pixel(unit_rig(), Vec2(0, 0), 0.0, ProjectorAxis::u));
}

TEST(TriangulatePixel, ScalesWithBaseline) {
  const StereoRig rig = testing::default_rig();
  const Extrinsics& pose = rig.projector_pose();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 639), v(0, 479), p(100, 800);
  for (double alpha : {0.5, 2.0, 3.7}) {
    const StereoRig scaled(rig.camera(), rig.projector(), Extrinsics(pose.rotation(), alpha * pose.translation()));
    for (int i = 0; i < 200; ++i) {
      const Vec2 px(u(rng), v(rng));
      const double q = p(rng);
      const auto a = triangulate_pixel(rig, px, q, ProjectorAxis::u);
      const auto b = triangulate_pixel(scaled, px, q, ProjectorAxis::u);
      ASSERT_TRUE(a && b);
      ASSERT_LT((*b - alpha * *a).norm(), 1e-12 * a->norm() * alpha);
    }
  }
}

TEST(Table, MatchesDirectSolve) {
  const StereoRig rig = testing::default_rig(0.05, 0.05);
  for (ProjectorAxis axis : {ProjectorAxis::u, ProjectorAxis::v}) {
    const TriangulationTable table = TriangulationTable::build(rig, axis);
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> u(0, 639), v(0, 479);
    std::uniform_real_distribution<double> p(0.0, axis == ProjectorAxis::u ? 912.0 : 1140.0);
    double worst = 0.0;
    int compared = 0;
    for (int i = 0; i < 1000; ++i) {
      const int cu = u(rng), cv = v(rng);
      const double q = p(rng);
      const auto direct = triangulate_pixel(rig, table.ideal_pixel(cu, cv), q, axis);
      const auto fast = table.evaluate(cu, cv, q);
      ASSERT_EQ(direct.has_value(), fast.has_value());
      if (!direct) continue;
      worst = std::max(worst, (*direct - *fast).norm());
      ++compared;
    }
    EXPECT_GT(compared, 900);
    EXPECT_LT(worst, 1e-9);
  }
}

TEST(Table, RebuildIsBitIdentical) {
  const StereoRig rig = testing::default_rig(0.05, 0.05);
  EXPECT_EQ(TriangulationTable::build(rig, ProjectorAxis::u), TriangulationTable::build(rig, ProjectorAxis::u));
}

TEST(Table, MismatchedRigRejected) {
  const StereoRig rig = testing::default_rig();
  const StereoRig other = testing::default_rig(0.01);
  const TriangulationTable table = TriangulationTable::build(rig, ProjectorAxis::u);
  EXPECT_TRUE(table.matches(rig));
  EXPECT_FALSE(table.matches(other));
  ProjectorCoordMap coords{ImageD(640, 480), ProjectorAxis::u, Mask(640, 480)};
  EXPECT_THROW(triangulate_map(coords, other, table), TableMismatch);
  coords.axis = ProjectorAxis::v;
  EXPECT_THROW(triangulate_map(coords, rig, table), TableMismatch);
}

TEST(TriangulateMap, EmptyMaskGivesEmptyCloud) {
  const StereoRig rig = testing::default_rig();
  const TriangulationTable table = TriangulationTable::build(rig, ProjectorAxis::u);
  const ProjectorCoordMap coords{ImageD(640, 480, 300.0), ProjectorAxis::u, Mask(640, 480, 0)};
  const TriangulationResult r = triangulate_map(coords, rig, table);
  EXPECT_TRUE(r.cloud.empty());
  EXPECT_EQ(r.dropped, 0u);
}

struct Decoded {
  RenderResult render;
  DecodeResult decode;
};

Decoded decode_scene(const StereoRig& rig, const Scene& scene, Orientation o = Orientation::vertical) {
  Decoded d{render_sequence(rig, scene, generate(testing::pattern(o)), testing::analytic_render()), {}};
  d.decode = decode_full(d.render.frames);
  return d;
}

TEST(TriangulateMap, NoiselessPlaneDepth) {
  const StereoRig rig = testing::default_rig(0.05, 0.05);
  const Decoded d = decode_scene(rig, testing::fronto_plane(0.5));
  const TriangulationTable table = TriangulationTable::build(rig, d.decode.coords.axis);
  const TriangulationResult r = triangulate_map(d.decode.coords, rig, table);
  ASSERT_GT(r.cloud.size(), 300000u);
  for (const auto& p : r.cloud.points) ASSERT_NEAR(p.position.z(), 0.5, 1e-4);
}

TEST(TriangulateMap, HorizontalPatternsWithVerticalBaseline) {
  const StereoRig rig = testing::default_rig(0.05, 0.05, 1);
  const Decoded d = decode_scene(rig, testing::fronto_plane(0.5), Orientation::horizontal);
  const TriangulationTable table = TriangulationTable::build(rig, ProjectorAxis::v);
  const TriangulationResult r = triangulate_map(d.decode.coords, rig, table);
  ASSERT_GT(r.cloud.size(), 300000u);
  for (const auto& p : r.cloud.points) ASSERT_NEAR(p.position.z(), 0.5, 1e-4);
}

TEST(TriangulateMap, IgnoringProjectorDistortionBiasesDepth) {
  const StereoRig rig = testing::default_rig(0.0, 0.1);
  const Decoded d = decode_scene(rig, testing::fronto_plane(0.5));
  const TriangulationTable table = TriangulationTable::build(rig, ProjectorAxis::u);
  TriangulationOptions none;
  none.projector_distortion = ProjectorDistortionMode::none;
  double worst_none = 0.0, worst_iter = 0.0;
  for (const auto& p : triangulate_map(d.decode.coords, rig, table, none).cloud.points) {
    worst_none = std::max(worst_none, std::abs(p.position.z() - 0.5));
  }
  for (const auto& p : triangulate_map(d.decode.coords, rig, table).cloud.points) {
    worst_iter = std::max(worst_iter, std::abs(p.position.z() - 0.5));
  }
  EXPECT_GT(worst_none, 1e-3);
  EXPECT_LT(worst_iter, 1e-4);
}

/// Algebraic least-squares sphere: |x|^2 = 2 c.x + (r^2 - |c|^2).
std::pair<Vec3, double> fit_sphere(const PointCloud& cloud) {
  Eigen::MatrixXd a(cloud.size(), 4);
  Eigen::VectorXd b(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& x = cloud.points[i].position;
    a.row(static_cast<Eigen::Index>(i)) << 2 * x.x(), 2 * x.y(), 2 * x.z(), 1.0;
    b(static_cast<Eigen::Index>(i)) = x.squaredNorm();
  }
  const Eigen::Vector4d s = a.colPivHouseholderQr().solve(b);
  const Vec3 c = s.head<3>();
  return {c, std::sqrt(s(3) + c.squaredNorm())};
}

TEST(TriangulateMap, SphereRadiusRecovered) {
  const StereoRig rig = testing::default_rig(0.05, 0.05);
  const Sphere sphere{Vec3(0.01, 0.0, 0.55), 0.08};
  const Decoded d = decode_scene(rig, Scene(sphere));
  const TriangulationTable table = TriangulationTable::build(rig, ProjectorAxis::u);
  const TriangulationResult r = triangulate_map(d.decode.coords, rig, table);
  ASSERT_GT(r.cloud.size(), 20000u);
  const auto [centre, radius] = fit_sphere(r.cloud);
  EXPECT_LT(std::abs(radius - sphere.radius), 1e-4);
  EXPECT_LT((centre - sphere.centre).norm(), 1e-4);
}

TEST(TriangulateMap, ReprojectionIntoBothDevices) {
  const StereoRig rig = testing::default_rig(0.05, 0.05);
  const Decoded d = decode_scene(rig, Scene(Sphere{Vec3(0, 0.01, 0.52), 0.1}));
  const TriangulationTable table = TriangulationTable::build(rig, ProjectorAxis::u);
  const ImageD& shading = d.decode.phases.shading;
  const TriangulationResult r = triangulate_map(d.decode.coords, rig, table, {}, &shading);
  ASSERT_TRUE(r.cloud.has_intensity);
  double cam = 0.0, proj = 0.0;
  for (const auto& p : r.cloud.points) {
    cam = std::max(cam, (project(rig.camera(), p.position) - Vec2(p.u_c, p.v_c)).norm());
    const double observed = d.decode.coords.coord(static_cast<int>(p.u_c), static_cast<int>(p.v_c));
    proj = std::max(proj, std::abs(project(rig.projector(), rig.projector_pose(), p.position).x() - observed));
  }
  EXPECT_LT(cam, 1e-6);
  EXPECT_LT(proj, 1e-3);
}

TEST(TriangulateMap, RowMajorPixelOrder) {
  const StereoRig rig = testing::default_rig();
  const Decoded d = decode_scene(rig, testing::fronto_plane(0.5));
  const TriangulationResult r =
      triangulate_map(d.decode.coords, rig, TriangulationTable::build(rig, ProjectorAxis::u));
  for (std::size_t i = 1; i < r.cloud.size(); ++i) {
    const auto& a = r.cloud.points[i - 1];
    const auto& b = r.cloud.points[i];
    ASSERT_TRUE(a.v_c < b.v_c || (a.v_c == b.v_c && a.u_c < b.u_c));
  }
}

TEST(ProjectorDistortionMode, Parsing) {
  EXPECT_EQ(projector_distortion_mode_from_string("none"), ProjectorDistortionMode::none);
  EXPECT_EQ(to_string(ProjectorDistortionMode::iterative), "iterative");
  EXPECT_THROW(projector_distortion_mode_from_string("exact"), ConfigError);
}

}  // namespace
}  // namespace slscan
