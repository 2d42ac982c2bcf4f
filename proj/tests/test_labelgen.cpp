#include <gtest/gtest.h>

#include "oracles.hpp"
#include "slamgen/labelgen.hpp"

using namespace slamgen;

namespace {

Scene open_box(double half = 60.0) { return Scene(Aabb{Vec3::Constant(-half), Vec3::Constant(half)}); }

Scene frontal_plane(double z) {
  Scene s = open_box();
  s.add(Primitive::plane(1, Vec3(0, 0, z), Vec3(0, 0, -1)));
  return s;
}

}  // namespace

TEST(Flow, IdentityMotionIsZero) {
  const Scene s = generate_scene(2);
  const CameraModel cam = CameraModel::with_fov(64, 64, 90);
  const Pose p = camera_pose_from_ypr(Vec3(3, 3, 1.5), 0.2, 0, 0);
  const RasterImage d = render_depth(s, p, cam);
  const FlowField f = compute_flow(d, p, p, d, cam);
  const auto m = f.mask.values<std::uint8_t>();
  const auto z = d.values<float>();
  const auto fl = f.flow.values<float>();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!is_depth_hit(z[i])) {
      EXPECT_EQ(m[i], kMaskInvalid);
      continue;
    }
    EXPECT_EQ(m[i], 0);
    EXPECT_LT(std::abs(fl[2 * i]), 1e-5f);
    EXPECT_LT(std::abs(fl[2 * i + 1]), 1e-5f);
  }
}

TEST(Flow, SidestepOverFrontalPlane) {
  const Scene s = frontal_plane(10);
  const CameraModel cam = CameraModel::with_fov(640, 480, 90);
  const RasterImage d = render_depth(s, Pose::identity(), cam);
  const FlowField f = compute_flow(d, Pose::identity(), Pose::from_translation(Vec3(0.5, 0, 0)), {}, cam);
  for (int y = 0; y < 480; y += 37)
    for (int x = 16; x < 640; x += 41) {
      EXPECT_NEAR(f.flow.at<float>(x, y, 0), -16.0f, 1e-3f);
      EXPECT_NEAR(f.flow.at<float>(x, y, 1), 0.0f, 1e-3f);
      EXPECT_EQ(f.mask.at<std::uint8_t>(x, y), 0);
    }
  // The left strip leaves the image.
  EXPECT_EQ(f.mask.at<std::uint8_t>(3, 100), kMaskOutOfView);
}

TEST(Flow, SmallYawAtTheCenter) {
  const Scene s = frontal_plane(10);
  const CameraModel cam = CameraModel::with_fov(641, 481, 90);
  const RasterImage d = render_depth(s, Pose::identity(), cam);
  const Pose yawed(Quat(Eigen::AngleAxisd(0.01, Vec3::UnitY())), Vec3::Zero());
  const FlowField f = compute_flow(d, Pose::identity(), yawed, {}, cam);
  EXPECT_NEAR(std::abs(f.flow.at<float>(320, 240, 0)), 320.5 * std::tan(0.01), 1e-3);
  EXPECT_NEAR(std::abs(f.flow.at<float>(320, 240, 0)), 3.2, 0.01);
  EXPECT_NEAR(f.flow.at<float>(320, 240, 1), 0.0f, 1e-4f);
}

TEST(Flow, PointsBehindTheTestCamera) {
  const Scene s = frontal_plane(2);
  const CameraModel cam = CameraModel::with_fov(32, 32, 90);
  const RasterImage d = render_depth(s, Pose::identity(), cam);
  const FlowField f = compute_flow(d, Pose::identity(), Pose::from_translation(Vec3(0, 0, 5)), {}, cam);
  for (auto m : f.mask.values<std::uint8_t>()) EXPECT_EQ(m, kMaskInvalid | kMaskOutOfView);
}

TEST(Flow, OcclusionBehindAPillar) {
  Scene s = frontal_plane(10);
  s.add(Primitive::box(2, Vec3(0.5, -5, 3), Vec3(1.5, 5, 4)));
  const CameraModel cam = CameraModel::with_fov(64, 64, 90);
  const Pose a = Pose::identity(), b = Pose::from_translation(Vec3(1.5, 0, 0));
  const RasterImage da = render_depth(s, a, cam), db = render_depth(s, b, cam);
  const FlowField f = compute_flow(da, a, b, db, cam);
  int occluded = 0;
  for (auto m : f.mask.values<std::uint8_t>()) occluded += m == kMaskOccluded;
  EXPECT_GT(occluded, 0);
}

TEST(Flow, MatchesIndependentProjection) {
  for (std::uint64_t seed : {1u, 4u}) {
    const Scene s = generate_scene(seed);
    const CameraModel cam = CameraModel::with_fov(96, 72, 90);
    const Vec3 c = 0.5 * (s.bounds().min + s.bounds().max);
    if (s.inside_obstacle(c)) continue;
    const Pose a = camera_pose_from_ypr(c, 0.5, 0.05, 0.02);
    const Pose b = camera_pose_from_ypr(c + Vec3(0.2, -0.15, 0.1), 0.56, 0.0, -0.03);
    const RasterImage da = render_depth(s, a, cam), db = render_depth(s, b, cam);
    const FlowField f = compute_flow(da, a, b, db, cam);
    int mask_mismatch = 0;
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        const auto ref = oracle::flow_pixel(da, a, b, db, cam, x, y, 0.05);
        const auto m = f.mask.at<std::uint8_t>(x, y);
        mask_mismatch += m != ref.mask;
        if (ref.mask & kMaskInvalid) continue;
        EXPECT_NEAR(f.flow.at<float>(x, y, 0), ref.du, 1e-4);
        EXPECT_NEAR(f.flow.at<float>(x, y, 1), ref.dv, 1e-4);
      }
    EXPECT_LE(mask_mismatch, 3) << "seed " << seed;
  }
}

TEST(Flow, RejectsWrongSizes) {
  const CameraModel cam = CameraModel::with_fov(32, 32, 90);
  EXPECT_THROW(compute_flow(RasterImage(16, 16, 1, DType::kF32), Pose::identity(), Pose::identity(), {}, cam), Error);
}

TEST(Disparity, FrontalPlanes) {
  const CameraModel cam = CameraModel::with_fov(640, 480, 90);
  const StereoRig rig{0.25};
  for (auto [z, expect] : {std::pair{10.0, 8.0}, std::pair{2.0, 40.0}}) {
    const Scene s = frontal_plane(z);
    const RasterImage d = render_depth(s, Pose::identity(), cam);
    const Disparity disp = compute_disparity(d, cam, rig);
    EXPECT_NEAR(disp.disparity.at<float>(320, 240), expect, 1e-4);
    EXPECT_NEAR(disp.disparity.at<float>(600, 20), expect, 1e-4);
  }
}

TEST(Disparity, MissesAreZeroAndInvalid) {
  const CameraModel cam = CameraModel::with_fov(32, 32, 90);
  RasterImage miss(32, 32, 1, DType::kF32);
  for (auto& z : miss.values<float>()) z = kDepthMiss;
  const Disparity disp = compute_disparity(miss, cam, StereoRig{});
  for (auto v : disp.disparity.values<float>()) EXPECT_EQ(v, 0.0f);
  for (auto m : disp.mask.values<std::uint8_t>()) EXPECT_EQ(m, kMaskInvalid);
  EXPECT_THROW(compute_disparity(miss, cam, StereoRig{0.0}), Error);
}

TEST(Disparity, EqualsNegatedLeftToRightFlow) {
  const Scene s = generate_scene(6);
  const CameraModel cam = CameraModel::with_fov(80, 60, 90);
  const Vec3 c = 0.5 * (s.bounds().min + s.bounds().max);
  ASSERT_FALSE(s.inside_obstacle(c));
  const Pose left = camera_pose_from_ypr(c, 1.1, 0, 0);
  const StereoRig rig{0.25};
  const RasterImage d = render_depth(s, left, cam);
  const Disparity disp = compute_disparity(d, cam, rig);
  const FlowField f = compute_flow(d, left, rig.right_pose(left), {}, cam);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 80; ++x) {
      const float z = d.at<float>(x, y);
      if (!is_depth_hit(z)) continue;
      EXPECT_NEAR(disp.disparity.at<float>(x, y), cam.fx * rig.baseline / z, 1e-4);
      EXPECT_NEAR(f.flow.at<float>(x, y, 0), -disp.disparity.at<float>(x, y), 1e-4);
      EXPECT_NEAR(f.flow.at<float>(x, y, 1), 0.0f, 1e-5f);
    }
}

TEST(Lidar, EmptySceneReturnsNothing) {
  const LidarScan scan = simulate_lidar(open_box(), Pose::identity(), LidarSpec{});
  EXPECT_TRUE(scan.points.empty());
}

TEST(Lidar, SphereStraightAhead) {
  Scene s = open_box();
  s.add(Primitive::sphere(1, Vec3(5, 0, 0), 1.0));
  LidarSpec spec;
  spec.n_lines = 1;
  spec.fov_low_deg = 0.0;
  spec.points_per_line = 36;
  spec.camera_size = 257;
  const LidarScan scan = simulate_lidar(s, Pose::identity(), spec);
  ASSERT_FALSE(scan.points.empty());
  EXPECT_NEAR(scan.points.front().norm(), 4.0, 1e-3);
  EXPECT_NEAR(scan.points.front().y(), 0.0, 1e-12);
}

TEST(Lidar, WallRangesFollowTheCosine) {
  Scene s = open_box();
  s.add(Primitive::plane(1, Vec3(10, 0, 0), Vec3(-1, 0, 0)));
  LidarSpec spec;
  spec.n_lines = 1;
  spec.fov_low_deg = 0.0;
  spec.points_per_line = 36;
  const LidarScan scan = simulate_lidar(s, Pose::identity(), spec);
  ASSERT_GE(scan.points.size(), 2u);
  EXPECT_NEAR(scan.points[0].norm(), 10.0, 1e-3);
  EXPECT_NEAR(scan.points[1].norm(), 10.0 / std::cos(deg2rad(10.0)), 1e-3);
  EXPECT_NEAR(scan.points[1].norm(), 10.154, 1e-3);
}

TEST(Lidar, CountAndRangeBounds) {
  const Scene s = make_room_scene(8, 8, 3, 2);
  LidarSpec spec;
  spec.max_range = 5.0;
  const Pose sensor = Pose::from_translation(Vec3(4, 4, 1.5));
  const LidarScan scan = simulate_lidar(s, sensor, spec);
  EXPECT_LE(scan.points.size(), static_cast<std::size_t>(spec.n_lines * spec.points_per_line));
  EXPECT_GT(scan.points.size(), 0u);
  for (const auto& p : scan.points) EXPECT_LE(p.norm(), 5.0 + 1e-9);
  spec.camera_size = 16;
  EXPECT_THROW(simulate_lidar(s, sensor, spec), Error);
}

TEST(Lidar, AgreesWithRayCasting) {
  const Scene s = generate_scene(3);
  const Vec3 c = 0.5 * (s.bounds().min + s.bounds().max);
  ASSERT_FALSE(s.inside_obstacle(c));
  const Pose sensor(Quat(Eigen::AngleAxisd(0.3, Vec3::UnitZ())), c);
  LidarSpec spec;
  const LidarScan scan = simulate_lidar(s, sensor, spec);
  ASSERT_GT(scan.points.size(), 1000u);
  int close = 0;
  for (const auto& p : scan.points) {
    const Vec3 d = sensor.rotation_matrix() * p.normalized();
    const double t = oracle::ray_scene(s, c, d);
    close += std::abs(t - p.norm()) <= 0.01;
  }
  EXPECT_GE(static_cast<double>(close) / scan.points.size(), 0.95);
}

TEST(Lidar, PixelCastsMatchFullViews) {
  const Scene s = generate_scene(5);
  const Vec3 c = 0.5 * (s.bounds().min + s.bounds().max);
  ASSERT_FALSE(s.inside_obstacle(c));
  const Pose view = camera_pose_from_ypr(c, 0.7, 0.0, 0.0);
  const CameraModel cam = CameraModel::with_fov(48, 48, 90);
  const RasterImage full = render_depth(s, view, cam);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) EXPECT_EQ(render_depth_pixel(s, view, cam, x, y), full.at<float>(x, y));
}

TEST(Lidar, DefaultViewsOversampleTheMinimum) {
  const Scene s = make_room_scene(8, 8, 3, 2);
  const LidarSpec spec;
  const LidarScan scan = simulate_lidar(s, Pose::from_translation(Vec3(4, 4, 1.5)), spec);
  EXPECT_EQ(scan.camera_size, spec.oversample * lidar_min_camera_size(spec));
}
