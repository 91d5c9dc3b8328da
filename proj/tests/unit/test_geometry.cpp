#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "slscan/calibration.hpp"
#include "slscan/geometry.hpp"

namespace slscan {
namespace {

DeviceModel unit_model() { return DeviceModel(Intrinsics(1, 1, 0, 0, 4, 4)); }

Extrinsics random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::Quaterniond q = Eigen::Quaterniond(u(rng), 0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng)).normalized();
  return Extrinsics(q.toRotationMatrix(), Vec3(0.2 * u(rng), 0.05 * u(rng), 0.02 * u(rng)));
}

TEST(Project, OpticalAxisLandsOnPrincipalPoint) {
  const Vec2 px = project(unit_model(), Vec3(0, 0, 1));
  EXPECT_EQ(px, Vec2(0, 0));
}

TEST(Project, PinholeRatio) {
  const Vec2 px = project(unit_model(), Vec3(0.5, 0, 1));
  EXPECT_DOUBLE_EQ(px.x(), 0.5);
  EXPECT_DOUBLE_EQ(px.y(), 0.0);
}

TEST(Project, RadialDistortionPolynomial) {
  const DeviceModel model(Intrinsics(1400, 1400, 720, 540, 1440, 1080), Distortion(0.1, 0, 0, 0, 0));
  const Vec2 px = project(model, Vec3(0.1, 0, 0.5));
  // r^2 = 0.04, radial factor 1 + 0.1 * 0.04.
  EXPECT_NEAR(px.x(), 720.0 + 1400.0 * 0.2 * 1.004, 1e-9);
  EXPECT_NEAR(px.y(), 540.0, 1e-12);
}

TEST(Project, PointBehindDeviceThrows) {
  EXPECT_THROW(project(unit_model(), Vec3(0, 0, -1)), PointBehindDevice);
  EXPECT_THROW(project(unit_model(), Vec3(0, 0, 0)), PointBehindDevice);
}

TEST(Undistort, ZeroDistortionIsExact) {
  const DeviceModel model(Intrinsics(800, 800, 320, 240, 640, 480));
  const Vec3 p(0.03, -0.02, 0.7);
  const Vec3 ray = undistort_pixel(model, project(model, p));
  EXPECT_NEAR(ray.x(), p.x() / p.z(), 1e-15);
  EXPECT_NEAR(ray.y(), p.y() / p.z(), 1e-15);
  EXPECT_EQ(ray.z(), 1.0);
}

TEST(Undistort, PrincipalPointIsFixed) {
  const DeviceModel model(Intrinsics(1400, 1400, 720, 540, 1440, 1080), Distortion(0.1, -0.05, 0.001, 0.002, 0.01));
  const Vec3 ray = undistort_pixel(model, Vec2(720, 540));
  EXPECT_EQ(ray, Vec3(0, 0, 1));
}

TEST(Undistort, RoundtripUnderOnePicopixel) {
  const DeviceModel model(Intrinsics(1400, 1400, 720, 540, 1440, 1080), Distortion(0.1, 0, 0, 0, 0));
  const Vec2 px = project(model, Vec3(0.1, 0, 0.5));
  const Vec3 ray = undistort_pixel(model, px);
  EXPECT_LT((project(model, ray * 0.5) - px).norm(), 1e-6);
}

TEST(Undistort, RoundtripOverWholeSensorAtAnyDepth) {
  const DeviceModel model(Intrinsics(800, 790, 322, 238, 640, 480), Distortion(0.08, -0.02, 0.001, -0.0015, 0.005));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 639.0), v(0.0, 479.0), z(0.1, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const Vec2 px(u(rng), v(rng));
    const Vec3 ray = undistort_pixel(model, px);
    worst = std::max(worst, (project(model, ray * z(rng)) - px).norm());
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Undistort, OutOfBoundsPixelRejected) {
  const DeviceModel model(Intrinsics(800, 800, 320, 240, 640, 480));
  EXPECT_THROW(undistort_pixel(model, Vec2(-5, 10)), DataError);
  EXPECT_THROW(undistort_pixel(model, Vec2(10, 480.5)), DataError);
}

TEST(ProjectionMatrix, CameraIsIntrinsicsPaddedWithZeroColumn) {
  const StereoRig rig = testing::default_rig();
  const Mat34 m = projection_matrix(rig, Device::camera);
  EXPECT_EQ(m.leftCols<3>(), rig.camera().intrinsics().matrix());
  EXPECT_EQ(m.col(3), Vec3::Zero());
}

TEST(ProjectionMatrix, PureBaselineProjector) {
  const DeviceModel dev(Intrinsics(1100, 1100, 456, 570, 912, 1140));
  const StereoRig rig(dev, dev, Extrinsics(Mat3::Identity(), Vec3(-0.1, 0, 0)));
  Mat34 expected;
  expected << Mat3::Identity(), Vec3(-0.1, 0, 0);
  expected = dev.intrinsics().matrix() * expected;
  EXPECT_TRUE(projection_matrix(rig, Device::projector).isApprox(expected, 1e-15));
}

TEST(ProjectionMatrix, AgreesWithProjectOnRandomRigs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.2, 0.2), z(0.3, 2.0);
  const DeviceModel cam(Intrinsics(800, 810, 320, 240, 640, 480));
  const DeviceModel proj(Intrinsics(1100, 1090, 456, 570, 912, 1140));
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const StereoRig rig(cam, proj, random_pose(rng));
    const Mat34 m = projection_matrix(rig, Device::projector);
    for (int i = 0; i < 100; ++i) {
      const Vec3 x(u(rng), u(rng), z(rng));
      if (rig.projector_pose().apply(x).z() <= 0.05) continue;
      const Vec3 h = m * x.homogeneous();
      const Vec2 via_matrix = h.hnormalized();
      worst = std::max(worst, (via_matrix - project(proj, rig.projector_pose(), x)).norm());
    }
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Extrinsics, RejectsNonOrthonormalRotation) {
  Mat3 r = Mat3::Identity();
  r(0, 1) = 1e-3;
  EXPECT_THROW(Extrinsics(r, Vec3::Zero()), ConfigError);
}

TEST(Extrinsics, RejectsReflection) {
  Mat3 r = Mat3::Identity();
  r(2, 2) = -1;
  EXPECT_THROW(Extrinsics(r, Vec3::Zero()), ConfigError);
}

TEST(Intrinsics, RejectsInvalidParameters) {
  EXPECT_THROW(Intrinsics(0, 1, 0, 0, 4, 4), ConfigError);
  EXPECT_THROW(Intrinsics(1, 1, 0, 0, 0, 4), ConfigError);
  EXPECT_THROW(Intrinsics(1, 1, 10, 0, 4, 4), ConfigError);
}

TEST(DeviceModel, RejectsDistortionThatFoldsTheSensor) {
  EXPECT_THROW(DeviceModel(Intrinsics(300, 300, 320, 240, 640, 480), Distortion(-1.5, 0, 0, 0, 0)), ConfigError);
}

TEST(StereoRig, RejectsZeroBaseline) {
  const DeviceModel dev(Intrinsics(800, 800, 320, 240, 640, 480));
  EXPECT_THROW(StereoRig(dev, dev, Extrinsics()), ConfigError);
}

TEST(StereoRig, FingerprintTracksEveryParameter) {
  const StereoRig a = testing::default_rig(0.05, 0.05);
  const StereoRig b = testing::default_rig(0.05, 0.05);
  const StereoRig c = testing::default_rig(0.05, 0.0500001);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
}

TEST(LookRotation, OpticalAxisPointsForward) {
  const Vec3 f = Vec3(0.2, -0.1, 1.0).normalized();
  const Mat3 r = look_rotation(f);
  EXPECT_TRUE(r.row(2).transpose().isApprox(f, 1e-15));
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
}

TEST(Calibration, JsonRoundtripPreservesRig) {
  const StereoRig rig = testing::default_rig(0.05, -0.02);
  EXPECT_EQ(rig_from_json(rig_to_json(rig)), rig);
}

TEST(Calibration, FileRoundtrip) {
  testing::TempDir dir("calib");
  const StereoRig rig = testing::default_rig(0.05, 0.05, 1);
  save_rig(rig, dir / "rig.json");
  EXPECT_EQ(load_rig(dir / "rig.json"), rig);
}

TEST(Calibration, MissingFileIsConfigError) {
  EXPECT_THROW(load_rig("/nonexistent/rig.json"), ConfigError);
}

TEST(Calibration, MalformedFieldsAreConfigErrors) {
  EXPECT_THROW(rig_from_json("{"), ConfigError);
  EXPECT_THROW(rig_from_json(R"({"camera": {}})"), ConfigError);
  const StereoRig rig = testing::default_rig();
  std::string text = rig_to_json(rig);
  text.replace(text.find("\"R\""), 3, "\"Q\"");
  EXPECT_THROW(rig_from_json(text), ConfigError);
}

}  // namespace
}  // namespace slscan
