#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "oracles.hpp"
#include "slamgen/render.hpp"
#include "slamgen/scene.hpp"

using namespace slamgen;

namespace {

Scene open_box(double half = 50.0) { return Scene(Aabb{Vec3::Constant(-half), Vec3::Constant(half)}); }

}  // namespace

TEST(RayCast, SphereAhead) {
  Scene s = open_box();
  s.add(Primitive::sphere(1, Vec3(0, 0, 5), 1.0));
  const auto hit = s.ray_cast(Vec3::Zero(), Vec3::UnitZ());
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->distance, oracle::ray_sphere(Vec3::Zero(), Vec3::UnitZ(), Vec3(0, 0, 5), 1.0, 0.0), 1e-12);
  EXPECT_NEAR(hit->distance, 4.0, 1e-12);
  EXPECT_EQ(hit->object_id, 1);
}

TEST(RayCast, EmptySceneMisses) {
  EXPECT_FALSE(open_box().ray_cast(Vec3::Zero(), Vec3::UnitX()));
}

TEST(RayCast, PlaneAtThirtyDegrees) {
  Scene s = open_box();
  s.add(Primitive::plane(1, Vec3(0, 0, 10), Vec3(0, 0, -1)));
  const double phi = deg2rad(30.0);
  const Vec3 d(std::sin(phi), 0, std::cos(phi));
  const auto hit = s.ray_cast(Vec3::Zero(), d);
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->distance, 10.0 / std::cos(phi), 1e-9);
  EXPECT_NEAR(hit->distance, 11.547, 1e-3);
}

TEST(RayCast, MatchesOracleOnGeneratedScenes) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Scene s = generate_scene(seed);
    Rng rng(seed + 100);
    const Aabb b = s.bounds();
    for (int i = 0; i < 2000; ++i) {
      const Vec3 o(rng.uniform(b.min.x(), b.max.x()), rng.uniform(b.min.y(), b.max.y()),
                   rng.uniform(b.min.z(), b.max.z()));
      if (s.inside_obstacle(o)) continue;
      const Vec3 d = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized();
      const auto hit = s.ray_cast(o, d);
      const double ref = oracle::ray_scene(s, o, d);
      ASSERT_EQ(hit.has_value(), ref < oracle::kInf) << "seed " << seed << " ray " << i;
      if (hit) {
        EXPECT_NEAR(hit->distance, ref, 1e-9);
      }
    }
  }
}

TEST(RayCast, BoxFromInsideHitsTheFarFace) {
  Scene s = open_box();
  s.add(Primitive::box(1, Vec3(-1, -1, -1), Vec3(1, 1, 1)));
  const auto hit = s.ray_cast(Vec3::Zero(), Vec3::UnitX());
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->distance, 1.0, 1e-12);
}

TEST(Scene, RejectsBadIdsAndOutsidePrimitives) {
  Scene s = open_box(5);
  s.add(Primitive::sphere(3, Vec3::Zero(), 1));
  EXPECT_THROW(s.add(Primitive::sphere(3, Vec3::Zero(), 1)), Error);
  EXPECT_THROW(s.add(Primitive::sphere(0, Vec3::Zero(), 1)), Error);
  s.add(Primitive::sphere(4, Vec3(100, 0, 0), 1));
  EXPECT_THROW(s.validate(), Error);
}

TEST(Scene, GeneratorIsDeterministic) {
  std::ostringstream a, b, c;
  write_scene(a, generate_scene(11));
  write_scene(b, generate_scene(11));
  write_scene(c, generate_scene(12));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(Scene, TextRoundTripIsExact) {
  Scene s = generate_scene(5);
  s.add(Primitive::plane(s.next_id(), Vec3(1, 2, 0.5), Vec3(0.1, 0.2, 1)));
  std::ostringstream os;
  write_scene(os, s);
  std::istringstream is(os.str());
  const Scene r = read_scene(is);
  std::ostringstream os2;
  write_scene(os2, r);
  EXPECT_EQ(os.str(), os2.str());
  ASSERT_EQ(r.primitives().size(), s.primitives().size());
  EXPECT_EQ(r.primitives().back().b, s.primitives().back().b);
}

TEST(Scene, ParseErrorsNameTheLine) {
  std::istringstream is("bounds 0 0 0 1 1 1\nbegin sphere\nid 1\ncenter 0 0\n");
  try {
    read_scene(is);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::kLine);
    EXPECT_EQ(e.where(), 4u);
  }
}

TEST(Render, FrontoParallelPlaneHasConstantDepth) {
  Scene s = open_box();
  s.add(Primitive::plane(1, Vec3(0, 0, 10), Vec3(0, 0, 1)));
  const CameraModel cam = CameraModel::with_fov(64, 48, 90);
  const RasterImage d = render_depth(s, Pose::identity(), cam);
  for (float z : d.values<float>()) EXPECT_NEAR(z, 10.0f, 1e-5f);
}

TEST(Render, SegOfOneSphereHasTwoLabels) {
  Scene s = open_box();
  s.add(Primitive::sphere(7, Vec3(0, 0, 5), 1.0));
  const RasterImage seg = render_seg(s, Pose::identity(), CameraModel::with_fov(64, 64, 90));
  std::set<std::uint16_t> labels(seg.values<std::uint16_t>().begin(), seg.values<std::uint16_t>().end());
  EXPECT_EQ(labels, (std::set<std::uint16_t>{0, 7}));
}

TEST(Render, DepthMatchesPerPixelOracle) {
  Scene s = open_box();
  s.add(Primitive::sphere(1, Vec3(0.5, 0, 6), 1.5));
  s.add(Primitive::box(2, Vec3(-3, -1, 4), Vec3(-1, 2, 8)));
  s.add(Primitive::triangle(3, Vec3(-4, 3, 9), Vec3(4, 3, 9), Vec3(0, -4, 12)));
  const CameraModel cam = CameraModel::with_fov(80, 60, 80);
  const Pose p2(Quat(Eigen::AngleAxisd(0.1, Vec3::UnitY())), Vec3(0.2, -0.1, 0.3));
  for (const Pose& p : {Pose::identity(), p2}) {
    const auto f = render(s, p, cam);
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        const Vec3 ray_cam((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
        const double t = oracle::ray_scene(s, p.translation(), p.rotation_matrix() * ray_cam.normalized());
        const float z = f.depth.at<float>(x, y);
        if (t == oracle::kInf) {
          EXPECT_EQ(z, kDepthMiss);
          EXPECT_EQ(f.seg.at<std::uint16_t>(x, y), 0);
        } else {
          EXPECT_NEAR(z, t / ray_cam.norm(), 1e-6 * std::max(1.0, t));
          EXPECT_NE(f.seg.at<std::uint16_t>(x, y), 0);
        }
      }
  }
}

TEST(Render, ViewsAreConsistent) {
  const Scene s = generate_scene(3);
  const CameraModel cam = CameraModel::with_fov(64, 64, 90);
  const Vec3 c = 0.5 * (s.bounds().min + s.bounds().max);
  const Pose a = camera_pose_from_ypr(c, 0.3, 0, 0);
  const Pose b = camera_pose_from_ypr(c + Vec3(0.2, 0.1, 0), 0.35, 0.02, 0);
  if (s.inside_obstacle(c) || s.inside_obstacle(b.translation())) GTEST_SKIP() << "center is blocked";
  const RasterImage da = render_depth(s, a, cam), db = render_depth(s, b, cam);
  int checked = 0, agree = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const float z = da.at<float>(x, y);
      if (!is_depth_hit(z)) continue;
      const Vec3 pb = b.inverse().apply(a.apply(unproject(cam, x, y, z)));
      const auto pr = project(cam, pb);
      if (!pr.valid) continue;
      const int u = static_cast<int>(std::lround(pr.u)), v = static_cast<int>(std::lround(pr.v));
      if (u >= 64 || v >= 64) continue;
      ++checked;
      // The second view cannot see past a surface point the first one saw;
      // closer returns are occluders. 5% covers the sub-pixel offset on slanted surfaces.
      if (db.at<float>(u, v) < 1.05 * pb.z()) ++agree;
    }
  ASSERT_GT(checked, 1000);
  EXPECT_GT(static_cast<double>(agree) / checked, 0.95);
}

TEST(Render, RgbIsDeterministic) {
  const Scene s = generate_scene(4);
  const CameraModel cam = CameraModel::with_fov(48, 48, 90);
  const Pose p = camera_pose_from_ypr(0.5 * (s.bounds().min + s.bounds().max), 1.0, 0, 0);
  EXPECT_EQ(render_rgb(s, p, cam), render_rgb(s, p, cam));
}

TEST(Render, TexturesHaveGradient) {
  const Scene s = make_room_scene(8, 8, 3, 1);
  const RasterImage rgb = render_rgb(s, camera_pose_from_ypr(Vec3(4, 4, 1.5), 0, 0, 0), CameraModel::with_fov(64, 64, 90));
  std::set<int> levels;
  for (auto v : rgb.values<std::uint8_t>()) levels.insert(v);
  EXPECT_GT(levels.size(), 30u);
}
