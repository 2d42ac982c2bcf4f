#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "slamgen/motionstats.hpp"
#include "slamgen/random.hpp"

using namespace slamgen;

namespace {

std::vector<Pose> random_walk(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<Pose> out{Pose::identity()};
  for (int i = 1; i < n; ++i) {
    const Vec3 w(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
    const Vec3 t(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
    out.push_back(out.back() * Pose(so3_exp(w), t));
  }
  return out;
}

}  // namespace

TEST(MotionMatrices, StillCameraGivesZeroColumns) {
  const std::vector<Pose> still(5, Pose::from_translation(Vec3(1, 2, 3)));
  const auto m = motion_matrices(still);
  EXPECT_EQ(m.T.cols(), 4);
  EXPECT_TRUE(m.T.isZero(0.0));
  EXPECT_TRUE(m.R.isZero(0.0));
  EXPECT_EQ(diversity_sigma(still), 0.0);
  EXPECT_THROW(motion_matrices({Pose::identity()}), Error);
}

TEST(MotionMatrices, ForwardStepsLandOnTheOpticalAxis) {
  std::vector<Pose> poses;
  for (int k = 0; k < 6; ++k) poses.push_back(camera_pose_from_ypr(Vec3(0.2 * k * std::cos(0.7), 0.2 * k * std::sin(0.7), 1), 0.7, 0, 0));
  const auto m = motion_matrices(poses, DeltaFrame::kBody);
  for (Eigen::Index i = 0; i < m.T.cols(); ++i) {
    EXPECT_LT((m.T.col(i) - Vec3(0, 0, 0.2)).norm(), 1e-12);
    EXPECT_LT(m.R.col(i).norm(), 1e-12);
  }
  const auto w = motion_matrices(poses, DeltaFrame::kWorld);
  EXPECT_LT((w.T.col(0) - Vec3(0.2 * std::cos(0.7), 0.2 * std::sin(0.7), 0)).norm(), 1e-12);
}

TEST(MotionMatrices, HandComputedColumns) {
  const Quat q1(Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ()));
  const std::vector<Pose> poses{Pose::identity(), Pose(q1, Vec3(1, 0, 0)), Pose(q1, Vec3(1, 2, 0))};
  const auto m = motion_matrices(poses);
  EXPECT_LT((m.T.col(0) - Vec3(1, 0, 0)).norm(), 1e-12);
  EXPECT_LT((m.R.col(0) - Vec3(0, 0, kPi / 2)).norm(), 1e-12);
  // World +y seen from a frame yawed 90 degrees is its +x.
  EXPECT_LT((m.T.col(1) - Vec3(2, 0, 0)).norm(), 1e-12);
  EXPECT_LT(m.R.col(1).norm(), 1e-12);
}

TEST(PrincipalMotion, RepeatedColumnsGiveSqrtK) {
  for (int k : {1, 4, 9, 25}) {
    Matrix3X M(3, k);
    for (int i = 0; i < k; ++i) M.col(i) = Vec3(0, 1, 0);
    const auto pm = principal_motion(M);
    EXPECT_NEAR(pm.values[0], std::sqrt(static_cast<double>(k)), 1e-12);
    EXPECT_NEAR(pm.values[1], 0.0, 1e-12);
    EXPECT_NEAR(pm.values[2], 0.0, 1e-12);
    EXPECT_NEAR(std::abs(pm.U(1, 0)), 1.0, 1e-12);
  }
  Matrix3X four(3, 4);
  four.setZero();
  four.row(0).setOnes();
  EXPECT_LT((principal_motion(four).values - Vec3(2, 0, 0)).norm(), 1e-12);
  EXPECT_THROW(principal_motion(Matrix3X(3, 0)), Error);
}

TEST(PrincipalMotion, MatchesJacobiEigenvalues) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng.index(200));
    Matrix3X M(3, n);
    for (int i = 0; i < n; ++i) M.col(i) = Vec3(rng.uniform(-1, 1), 0.3 * rng.uniform(-1, 1), 0.05 * rng.uniform(-1, 1));
    EXPECT_LT((principal_motion(M).values - oracle::singular_values(M)).norm(), 1e-8);
  }
}

TEST(Diversity, EndpointsZeroAndOne) {
  Matrix3X line(3, 10), iso(3, 6);
  for (int i = 0; i < 10; ++i) line.col(i) = Vec3(0.1 * (i + 1), 0, 0);
  for (int i = 0; i < 6; ++i) iso.col(i) = (i % 2 ? -1.0 : 1.0) * Vec3::Unit(i / 2);
  EXPECT_EQ(diversity({line, line}).sigma, 0.0);
  EXPECT_NEAR(diversity({iso, iso}).sigma, 1.0, 1e-12);
  EXPECT_NEAR(diversity({iso, line}).sigma, 0.5, 1e-12);
}

TEST(Diversity, RigidAndScaleInvariance) {
  const auto poses = random_walk(5, 60);
  const double s0 = diversity_sigma(poses);
  const Pose g(Quat(Eigen::AngleAxisd(1.2, Vec3(1, -2, 0.5).normalized())), Vec3(4, -3, 2));
  std::vector<Pose> moved, scaled;
  for (const auto& p : poses) {
    moved.push_back(g * p);
    scaled.push_back(Pose(p.rotation(), 3.0 * p.translation()));
  }
  EXPECT_NEAR(diversity_sigma(moved), s0, 1e-9);
  const auto a = diversity(motion_matrices(poses)), b = diversity(motion_matrices(scaled));
  EXPECT_NEAR(detail::diversity_term(a.translation.values), detail::diversity_term(b.translation.values), 1e-9);
}

TEST(Diversity, StaysWithinUnitInterval) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double s = diversity_sigma(random_walk(seed, 30));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Projection, PreservesNormsAndSpreadsBySingularValues) {
  const auto m = motion_matrices(random_walk(8, 80));
  const auto d = diversity(m);
  const Matrix3X p = project_motions(m.T, d.translation);
  for (Eigen::Index i = 0; i < p.cols(); ++i) EXPECT_NEAR(p.col(i).norm(), m.T.col(i).norm(), 1e-12);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(p.row(k).norm(), d.translation.values[k], 1e-9);
  std::ostringstream os;
  write_motion_csv(os, m, d);
  const std::string csv = os.str();
  EXPECT_EQ(csv.rfind("frame,t1,t2,t3,r1,r2,r3\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 80);
}

TEST(Diversity, ObliqueRankOneIsExactlyZero) {
  Matrix3X m(3, 40);
  for (int i = 0; i < 40; ++i) m.col(i) = (0.3 + 0.02 * i) * Vec3(1, 2, -1).normalized();
  const Diversity d = diversity({m, m});
  EXPECT_EQ(d.sigma, 0.0);
  EXPECT_EQ(d.translation.values[1], 0.0);
  EXPECT_NEAR(d.translation.values[0], m.norm(), 1e-12);
}
