#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "slamgen/pipeline.hpp"

using namespace slamgen;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config(const std::string& difficulty = "medium") {
  PipelineConfig c;
  c.seed = 7;
  c.frames = 20;
  c.width = 128;
  c.height = 128;
  c.graph_nodes = 12;
  c.difficulty = difficulty;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("slamgen_test_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

std::size_t count_files(const fs::path& dir, const std::string& suffix) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const std::string s = e.path().filename().string();
    n += e.is_regular_file() && s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  }
  return n;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SLAMGEN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Pipeline, SmallRunWritesEveryArtifact) {
  const fs::path dir = scratch("small");
  const PipelineResult r = run_pipeline(small_config(), dir);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(load_poses(dir / "poses.txt").size(), 20u);
  EXPECT_EQ(count_files(dir / "flow", "_flow.ttnr"), 19u);
  EXPECT_EQ(count_files(dir / "flow", "_mask.ttnr"), 19u);
  EXPECT_EQ(count_files(dir / "frames", "_disp.ttnr"), 20u);
  EXPECT_EQ(count_files(dir / "frames", "_depth.ttnr"), 20u);
  EXPECT_EQ(count_files(dir / "frames", "_lidar.tldr"), 20u);
  EXPECT_TRUE(fs::exists(dir / "report.txt"));
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
  for (const auto& e : r.manifest) EXPECT_TRUE(fs::exists(dir / e.path)) << e.path;
  const RasterImage flow = load_raster(dir / "flow" / "000003_flow.ttnr");
  EXPECT_EQ(flow.channels(), 2);
  EXPECT_EQ(flow.width(), 128);
  fs::remove_all(dir);
}

TEST(Pipeline, SameSeedSameBytes) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  PipelineConfig c = small_config();
  c.frames = 8;
  run_pipeline(c, a);
  run_pipeline(c, b);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(read_file(e.path()), read_file(b / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 40u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Pipeline, EasyMovesLessDiverselyThanMedium) {
  PipelineConfig easy = small_config("easy"), medium = small_config("medium");
  easy.frames = medium.frames = 60;
  const Scene scene = load_config_scene(easy);
  const double s_easy = diversity_sigma(plan_sequence(scene, easy).trajectory.poses);
  const double s_medium = diversity_sigma(plan_sequence(scene, medium).trajectory.poses);
  EXPECT_LT(s_easy, s_medium);
}

TEST(Pipeline, StageErrorsCarryTheStageName) {
  PipelineConfig c = small_config();
  c.scene = "/nonexistent/scene.txt";
  try {
    run_pipeline(c, scratch("bad"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("stage scene", 0), 0u) << e.what();
  }
  fs::remove_all(scratch("bad"));
}

TEST(Cli, StagedRunMatchesThePipeline) {
  const fs::path work = scratch("cli");
  fs::create_directories(work);
  const std::string common = "--workdir " + work.string();
  const std::string sets = " --set frames=6 --set width=128 --set height=128 --set graph_nodes=10";
  ASSERT_EQ(run_cli(common + " plan --seq seq" + sets), 0);
  ASSERT_EQ(run_cli(common + " render --seq seq"), 0);
  ASSERT_EQ(run_cli(common + " labels --seq seq"), 0);
  EXPECT_EQ(run_cli(common + " verify --seq seq"), 0);
  EXPECT_EQ(run_cli(common + " stats --poses seq/poses.txt --out seq/motion.csv"), 0);
  ASSERT_EQ(run_cli(common + " pipeline --out whole" + sets), 0);
  for (const char* rel : {"poses.txt", "frames/000002_rgb.ttnr", "flow/000004_flow.ttnr", "frames/000005_lidar.tldr", "report.txt"})
    EXPECT_EQ(read_file(work / "seq" / rel), read_file(work / "whole" / rel)) << rel;
  EXPECT_EQ(run_cli(common + " eval --gt seq/poses.txt --est seq/poses.txt --mode stereo"), 0);
  fs::remove_all(work);
}

TEST(Cli, UsageAndInputErrors) {
  EXPECT_EQ(run_cli("--definitely-not-a-flag"), 2);
  EXPECT_EQ(run_cli("pipeline --set nope=1 --out /tmp/x"), 1);
  EXPECT_EQ(run_cli("stats --poses /nonexistent/poses.txt"), 1);
}
