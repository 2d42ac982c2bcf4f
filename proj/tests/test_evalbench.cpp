#include <gtest/gtest.h>

#include <sstream>

#include "slamgen/evalbench.hpp"
#include "slamgen/random.hpp"

using namespace slamgen;

namespace {

std::vector<Pose> wiggly_trajectory(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<Pose> out;
  for (int i = 0; i < n; ++i) {
    const double s = 0.1 * i;
    const Quat q(Eigen::AngleAxisd(0.3 * std::sin(s) + rng.uniform(-0.05, 0.05), Vec3::UnitZ()));
    out.emplace_back(q, Vec3(3 * std::cos(s), 2 * std::sin(1.3 * s), 0.5 * std::sin(0.7 * s) + rng.uniform(-0.1, 0.1)));
  }
  return out;
}

std::vector<Pose> forward_steps(int n, double step) {
  std::vector<Pose> out;
  for (int i = 0; i < n; ++i) out.push_back(Pose::from_translation(Vec3(step * i, 0, 0)));
  return out;
}

}  // namespace

TEST(Align, IdenticalInputsGiveIdentity) {
  const auto p = positions(wiggly_trajectory(1, 50));
  const Similarity s = align_similarity(p, p, AlignMode::kSim3);
  EXPECT_NEAR(s.scale, 1.0, 1e-12);
  EXPECT_LT((s.R - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(s.t.norm(), 1e-12);
}

TEST(Align, RecoversHalfScale) {
  const auto gt = positions(wiggly_trajectory(2, 50));
  std::vector<Vec3> est;
  for (const auto& p : gt) est.push_back(2.0 * p);
  const Similarity s = align_similarity(est, gt, AlignMode::kSim3);
  EXPECT_NEAR(s.scale, 0.5, 1e-12);
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LT((s.apply(est[i]) - gt[i]).norm(), 1e-9);
}

TEST(Align, RecoversRandomSimilarities) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gt = positions(wiggly_trajectory(10 + trial, 80));
    const Quat q(Eigen::AngleAxisd(rng.uniform(-3, 3), Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), 1).normalized()));
    const double scale = rng.uniform(0.2, 5.0);
    const Vec3 t(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    std::vector<Vec3> est;
    for (const auto& p : gt) est.push_back(scale * (q * p) + t);
    const Similarity s = align_similarity(est, gt, AlignMode::kSim3);
    double worst = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) worst = std::max(worst, (s.apply(est[i]) - gt[i]).norm());
    EXPECT_LT(worst, 1e-9);
    EXPECT_NEAR(s.scale, 1.0 / scale, 1e-9);
  }
}

TEST(Align, Se3KeepsUnitScaleAndRejectsDegenerateInput) {
  const auto gt = positions(wiggly_trajectory(4, 30));
  std::vector<Vec3> est;
  for (const auto& p : gt) est.push_back(3.0 * p);
  EXPECT_EQ(align_similarity(est, gt, AlignMode::kSe3).scale, 1.0);
  const std::vector<Vec3> same(5, Vec3(1, 1, 1));
  EXPECT_THROW(align_similarity(same, same, AlignMode::kSim3), Error);
  EXPECT_THROW(align_similarity({Vec3::Zero(), Vec3::UnitX()}, {Vec3::Zero(), Vec3::UnitX()}, AlignMode::kSim3), Error);
  EXPECT_THROW(align_similarity(est, {gt.begin(), gt.end() - 1}, AlignMode::kSim3), Error);
}

TEST(Ate, ZeroForIdenticalTrajectories) {
  const auto gt = wiggly_trajectory(5, 40);
  EXPECT_EQ(ate(gt, gt, AlignMode::kNone).error.rmse, 0.0);
  EXPECT_NEAR(ate(gt, gt, AlignMode::kSim3).error.rmse, 0.0, 1e-12);
}

TEST(Ate, ShiftIsAlignedAway) {
  const auto gt = wiggly_trajectory(6, 40);
  std::vector<Pose> est;
  for (const auto& p : gt) est.push_back(Pose::from_translation(Vec3(1, 0, 0)) * p);
  EXPECT_NEAR(ate(est, gt, AlignMode::kSe3).error.rmse, 0.0, 1e-12);
  EXPECT_NEAR(ate(est, gt, AlignMode::kNone).error.rmse, 1.0, 1e-12);
}

TEST(Ate, OneDisplacedFrameInAHundred) {
  const auto gt = forward_steps(100, 0.5);
  auto est = gt;
  est[37] = Pose::from_translation(gt[37].translation() + Vec3(0, 1, 0));
  const auto r = ate(est, gt, AlignMode::kNone);
  EXPECT_NEAR(r.error.rmse, 0.1, 1e-12);
  EXPECT_NEAR(r.error.mean, 0.01, 1e-12);
  EXPECT_EQ(r.error.median, 0.0);
  EXPECT_THROW(ate(est, {gt.begin(), gt.end() - 1}, AlignMode::kNone), Error);
}

TEST(Ate, Sim3InvariantToGlobalSimilarity) {
  const auto gt = wiggly_trajectory(7, 60);
  auto est = gt;
  Rng rng(1);
  for (auto& p : est) p = Pose(p.rotation(), p.translation() + Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 0));
  const Similarity g{2.5, Quat(Eigen::AngleAxisd(0.8, Vec3::UnitX())).toRotationMatrix(), Vec3(1, 2, 3)};
  std::vector<Pose> moved;
  for (const auto& p : est) moved.push_back(g.apply(p));
  EXPECT_NEAR(ate(moved, gt, AlignMode::kSim3).error.rmse, ate(est, gt, AlignMode::kSim3).error.rmse, 1e-9);
}

TEST(Ate, NoiseDoesNotHelp) {
  const auto gt = wiggly_trajectory(8, 100);
  double prev = 0.0;
  for (double sigma : {0.01, 0.05, 0.2, 0.5}) {
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed);
      auto est = gt;
      for (auto& p : est) p = Pose(p.rotation(), p.translation() + sigma * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
      mean += ate(est, gt, AlignMode::kSim3).error.rmse / 10.0;
    }
    EXPECT_GE(mean, prev * 0.95) << sigma;
    prev = mean;
  }
}

TEST(Rpe, ZeroCases) {
  const auto gt = wiggly_trajectory(9, 50);
  const auto r = rpe(gt, gt);
  EXPECT_EQ(r.translation.rmse, 0.0);
  EXPECT_EQ(r.rotation.rmse, 0.0);
  const Pose g(Quat(Eigen::AngleAxisd(2.0, Vec3(1, 1, 0).normalized())), Vec3(-4, 7, 1));
  std::vector<Pose> est;
  for (const auto& p : gt) est.push_back(g * p);
  const auto moved = rpe(est, gt);
  EXPECT_LT(moved.translation.rmse, 1e-9);
  EXPECT_LT(moved.rotation.rmse, 1e-9);
}

TEST(Rpe, LongerStepsPerFrame) {
  const auto r = rpe(forward_steps(20, 1.1), forward_steps(20, 1.0));
  EXPECT_NEAR(r.translation.rmse, 0.1, 1e-12);
  EXPECT_EQ(r.rotation.rmse, 0.0);
  EXPECT_THROW(rpe(forward_steps(1, 1.0), forward_steps(1, 1.0)), Error);
}

TEST(Evaluate, MonocularScaleIsCorrected) {
  const auto gt = wiggly_trajectory(11, 60);
  std::vector<Pose> est;
  for (const auto& p : gt) est.emplace_back(p.rotation(), 0.4 * p.translation());
  const EvalResult mono = evaluate(est, gt, EvalMode::kMono);
  EXPECT_NEAR(mono.scale, 2.5, 1e-9);
  EXPECT_LT(mono.ate.error.rmse, 1e-9);
  EXPECT_LT(mono.rpe.translation.rmse, 1e-9);
  const EvalResult stereo = evaluate(est, gt, EvalMode::kStereo);
  EXPECT_EQ(stereo.scale, 1.0);
  EXPECT_GT(stereo.rpe.translation.rmse, 0.01);
  EXPECT_FALSE(evaluate(est, gt, EvalMode::kMono, false).aligned);
}

TEST(Cut, FixedWindows) {
  const auto w = cut_sequences({{"a", 700}, {"b", 150}, {"c", 400}});
  ASSERT_EQ(w.size(), 5u);
  EXPECT_EQ(w[0].start, 0u);
  EXPECT_EQ(w[1].start, 200u);
  EXPECT_EQ(w[2].start, 400u);
  EXPECT_EQ(w[2].source, "a");
  EXPECT_EQ(w[3].source, "c");
  EXPECT_TRUE(cut_sequences({{"b", 150}}).empty());
  EXPECT_THROW(cut_sequences({{"a", 10}}, 0), Error);
}

TEST(Cut, EmitsFloorMultiplesOverARandomCorpus) {
  Rng rng(12);
  std::vector<std::pair<std::string, std::size_t>> corpus;
  std::size_t expect = 0;
  for (int i = 0; i < 40; ++i) {
    const std::size_t n = rng.index(2000);
    corpus.emplace_back("s" + std::to_string(i), n);
    expect += n / 200 * 200;
  }
  std::size_t total = 0;
  for (const auto& w : cut_sequences(corpus)) total += w.length;
  EXPECT_EQ(total, expect);
}

TEST(Cut, SliceFollowsTheWindow) {
  const auto gt = forward_steps(700, 1.0);
  const auto w = cut_sequences({{"a", gt.size()}});
  const auto s = slice(gt, w[2]);
  ASSERT_EQ(s.size(), 200u);
  EXPECT_EQ(s.front().translation().x(), 400.0);
  EXPECT_THROW(slice(gt, SequenceWindow{"a", 600, 200}), Error);
}

TEST(SuccessRate, Counts) {
  std::vector<SequenceOutcome> o;
  for (int i = 0; i < 10; ++i) o.push_back({"s" + std::to_string(i), i >= 3, std::nullopt});
  EXPECT_DOUBLE_EQ(success_rate(o), 0.7);
  for (auto& x : o) x.tracked = true;
  EXPECT_DOUBLE_EQ(success_rate(o), 1.0);
  EXPECT_THROW(success_rate({}), Error);
}

TEST(SuccessRate, ReadsOutcomeFiles) {
  std::istringstream is("# id tracked\nseq0 1\nseq1 0  # lost at frame 80\n\nseq2 1\n");
  const auto o = read_outcomes(is);
  ASSERT_EQ(o.size(), 3u);
  EXPECT_NEAR(success_rate(o), 2.0 / 3.0, 1e-15);
  std::istringstream bad("seq0 yes\n");
  try {
    read_outcomes(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.where(), 1u);
  }
}

TEST(Reports, CsvRowHasEveryColumn) {
  const auto gt = wiggly_trajectory(13, 20);
  std::ostringstream os;
  write_eval_csv_header(os);
  write_eval_csv_row(os, SequenceWindow{"x", 0, 20}, evaluate(gt, gt, EvalMode::kStereo));
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  std::ostringstream txt;
  write_eval_text(txt, evaluate(gt, gt, EvalMode::kMono), 0.91);
  EXPECT_NE(txt.str().find("0.91"), std::string::npos);
}
