// slamgen command-line front end.
//
// Exit status: 0 success, 1 runtime or input error, 2 usage error,
// 3 a requested check failed (verification, or exploration with --require-complete).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slamgen/slamgen.hpp"

namespace fs = std::filesystem;
using namespace slamgen;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCheckFailed = 3;

struct Common {
  std::string workdir = ".";
  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : fs::path(workdir) / path;
  }
};

/// --config file plus --set key=value overrides; the scene path in the
/// config is resolved against the workdir.
struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;

  void add_to(CLI::App* app) {
    app->add_option("--config", file, "Config file (key = value lines)");
    app->add_option("--set", sets, "Override one config key, key=value (repeatable)");
  }

  PipelineConfig load(const Common& c) const {
    PipelineConfig cfg;
    if (!file.empty()) cfg = parse_config(read_text_file(c.resolve(file)));
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
      set_config_value(cfg, detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
    }
    if (!cfg.scene.empty()) cfg.scene = c.resolve(cfg.scene).string();
    cfg.validate();
    return cfg;
  }
};

Scene load_scene(const fs::path& p) {
  std::istringstream is(read_text_file(p));
  return read_scene(is);
}

/// Config and scene archived in a sequence directory by `plan`.
struct SequenceInputs {
  PipelineConfig cfg;
  Scene scene;
  std::vector<Pose> poses;
};

SequenceInputs load_sequence(const fs::path& dir) {
  SequenceInputs in;
  in.cfg = parse_config(read_text_file(dir / "config.txt"));
  in.scene = load_scene(dir / "scene.txt");
  in.poses = load_poses(dir / "poses.txt");
  return in;
}

Vec3 parse_vec3(const std::string& s) {
  std::istringstream is(s);
  Vec3 v;
  char c1 = 0, c2 = 0;
  if (!(is >> v.x() >> c1 >> v.y() >> c2 >> v.z()) || c1 != ',' || c2 != ',')
    throw Error("expected x,y,z but got '" + s + "'");
  return v;
}

void print_report_summary(const VerifyReport& r) {
  std::cout << "photometric " << r.max_photometric_error() << " (< " << r.thresholds.photometric << ") "
            << detail::verdict(r.photometric_ok()) << '\n'
            << "occlusion   " << r.max_occlusion_fraction() << " (<= " << r.thresholds.occlusion << ") "
            << detail::verdict(r.occlusion_ok()) << '\n'
            << "min depth   " << r.min_depth() << " (>= " << r.thresholds.collision << ") "
            << detail::verdict(r.collision_ok()) << '\n'
            << "overall     " << detail::verdict(r.pass()) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic SLAM sequence generator and trajectory benchmark"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--workdir", common.workdir, "Root for all relative paths")->capture_default_str();

  // genscene
  auto* genscene = app.add_subcommand("genscene", "Write a scene file");
  std::uint64_t gs_seed = 7;
  std::string gs_kind = "generated";
  std::string gs_size = "8,8,3";
  std::string gs_out = "scene.txt";
  genscene->add_option("--seed", gs_seed, "Generator seed")->capture_default_str();
  genscene->add_option("--kind", gs_kind, "generated | room | two-room | maze")
      ->check(CLI::IsMember({"generated", "room", "two-room", "maze"}))
      ->capture_default_str();
  genscene->add_option("--size", gs_size, "Room interior sx,sy,sz (room, two-room); maze uses nx,ny,height")
      ->capture_default_str();
  genscene->add_option("--out", gs_out, "Output scene file")->capture_default_str();

  // explore
  auto* explore_cmd = app.add_subcommand("explore", "Frontier exploration of a scene into an occupancy grid");
  std::string ex_scene = "scene.txt", ex_out = "grid.tocc", ex_poses, ex_start;
  ExploreParams ex_params;
  std::uint64_t ex_seed = 7;
  bool ex_require = false;
  explore_cmd->add_option("--scene", ex_scene, "Scene file")->capture_default_str();
  explore_cmd->add_option("--out", ex_out, "Output grid file")->capture_default_str();
  explore_cmd->add_option("--poses", ex_poses, "Also write the scan poses");
  explore_cmd->add_option("--start", ex_start, "Start position x,y,z (default: a random free voxel)");
  explore_cmd->add_option("--resolution", ex_params.resolution)->capture_default_str();
  explore_cmd->add_option("--max-range", ex_params.max_range)->capture_default_str();
  explore_cmd->add_option("--clearance", ex_params.clearance)->capture_default_str();
  explore_cmd->add_option("--scan-size", ex_params.scan_size)->capture_default_str();
  explore_cmd->add_option("--max-iterations", ex_params.max_iterations)->capture_default_str();
  explore_cmd->add_option("--seed", ex_seed)->capture_default_str();
  explore_cmd->add_flag("--require-complete", ex_require, "Exit with status 3 if frontiers remain");

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "Explore, build the trajectory graph and sample camera poses");
  ConfigArgs plan_cfg;
  plan_cfg.add_to(plan_cmd);
  std::string plan_seq = "seq";
  plan_cmd->add_option("--seq", plan_seq, "Sequence directory to create")->capture_default_str();

  // render
  auto* render_cmd = app.add_subcommand("render", "Render depth, RGB and segmentation for a planned sequence");
  std::string render_seq = "seq";
  render_cmd->add_option("--seq", render_seq, "Sequence directory written by plan")->capture_default_str();

  // labels
  auto* labels_cmd = app.add_subcommand("labels", "Optical flow, disparity and LiDAR labels for a rendered sequence");
  std::string labels_seq = "seq";
  labels_cmd->add_option("--seq", labels_seq, "Sequence directory written by render")->capture_default_str();

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Photometric, occlusion and collision checks");
  std::string verify_seq = "seq";
  verify_cmd->add_option("--seq", verify_seq, "Sequence directory written by labels")->capture_default_str();

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Motion diversity of a pose file");
  std::string st_poses = "seq/poses.txt", st_out, st_frame = "body";
  stats_cmd->add_option("--poses", st_poses, "Pose file")->capture_default_str();
  stats_cmd->add_option("--out", st_out, "CSV of projected motion coordinates");
  stats_cmd->add_option("--frame", st_frame, "Translation deltas in body or world axes")
      ->check(CLI::IsMember({"body", "world"}))
      ->capture_default_str();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "ATE / RPE / success rate of an estimated trajectory");
  std::string ev_gt, ev_est, ev_mode = "stereo", ev_outcomes, ev_csv, ev_report;
  std::size_t ev_cut = 0;
  bool ev_no_align = false;
  eval_cmd->add_option("--gt", ev_gt, "Ground-truth pose file");
  eval_cmd->add_option("--est", ev_est, "Estimated pose file");
  eval_cmd->add_option("--mode", ev_mode, "mono (similarity alignment, scale-corrected RPE) or stereo (rigid)")
      ->check(CLI::IsMember({"mono", "stereo"}))
      ->capture_default_str();
  eval_cmd->add_option("--cut", ev_cut, "Evaluate consecutive windows of this many frames (0: whole sequence)")
      ->capture_default_str();
  eval_cmd->add_flag("--no-align", ev_no_align, "Skip alignment");
  eval_cmd->add_option("--outcomes", ev_outcomes, "File of 'id tracked' lines for the success rate");
  eval_cmd->add_option("--csv", ev_csv, "Write per-window CSV here");
  eval_cmd->add_option("--report", ev_report, "Write the text report here instead of stdout");

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "All stages into one sequence directory");
  ConfigArgs pipe_cfg;
  pipe_cfg.add_to(pipeline_cmd);
  std::string pipe_out = "seq";
  pipeline_cmd->add_option("--out", pipe_out, "Sequence directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*genscene) {
      Scene s;
      if (gs_kind == "generated") {
        s = generate_scene(gs_seed);
      } else {
        const Vec3 sz = parse_vec3(gs_size);
        if (gs_kind == "room") s = make_room_scene(sz.x(), sz.y(), sz.z(), gs_seed);
        else if (gs_kind == "two-room") s = make_two_room_scene(sz.x(), sz.y(), sz.z(), 1.5, 2.25, gs_seed);
        else s = make_maze_scene(static_cast<int>(sz.x()), static_cast<int>(sz.y()), 2.0, sz.z(), gs_seed);
      }
      std::ostringstream os;
      write_scene(os, s);
      write_text_file(common.resolve(gs_out), os.str());
      std::cout << "wrote " << s.primitives().size() << " primitives to " << common.resolve(gs_out).string() << '\n';
      return 0;
    }

    if (*explore_cmd) {
      const Scene scene = load_scene(common.resolve(ex_scene));
      ex_params.seed = derive_seed(ex_seed, "explore");
      const Vec3 start = ex_start.empty()
                             ? pick_free_start(scene, ex_params.resolution, 1.0, derive_seed(ex_seed, "explore-start"))
                             : parse_vec3(ex_start);
      const ExploreResult r = explore(scene, camera_pose_from_ypr(start, 0, 0, 0), ex_params);
      save_grid(common.resolve(ex_out), r.grid);
      if (!ex_poses.empty()) save_poses(common.resolve(ex_poses), r.poses);
      std::cout << "iterations " << r.iterations << "\nscans " << r.poses.size() << "\nfree "
                << r.grid.count(CellState::kFree) << "\noccupied " << r.grid.count(CellState::kOccupied)
                << "\ncomplete " << (r.complete ? "yes" : "no") << '\n';
      if (!r.warning.empty()) std::cerr << "warning: " << r.warning << '\n';
      return ex_require && !r.complete ? kExitCheckFailed : 0;
    }

    if (*plan_cmd) {
      const PipelineConfig cfg = plan_cfg.load(common);
      const fs::path dir = common.resolve(plan_seq);
      const Scene scene = load_config_scene(cfg);
      const PlannedSequence plan = plan_sequence(scene, cfg);
      write_plan(dir, cfg, scene, plan);
      std::cout << "poses " << plan.trajectory.poses.size() << "\nloop nodes " << plan.loop.nodes.size() - 1
                << "\npath length " << polyline_length(plan.smoothed) << '\n';
      if (!plan.exploration.warning.empty()) std::cerr << "warning: " << plan.exploration.warning << '\n';
      return 0;
    }

    if (*render_cmd) {
      const fs::path dir = common.resolve(render_seq);
      const SequenceInputs in = load_sequence(dir);
      render_sequence(dir, in.cfg, in.scene, in.poses);
      std::cout << "rendered " << in.poses.size() << " frames\n";
      return 0;
    }

    if (*labels_cmd) {
      const fs::path dir = common.resolve(labels_seq);
      const SequenceInputs in = load_sequence(dir);
      label_sequence(dir, in.cfg, in.scene, in.poses);
      std::cout << "labeled " << in.poses.size() << " frames\n";
      return 0;
    }

    if (*verify_cmd) {
      const fs::path dir = common.resolve(verify_seq);
      const PipelineConfig cfg = parse_config(read_text_file(dir / "config.txt"));
      const auto poses = load_poses(dir / "poses.txt");
      const VerifyReport r = verify_directory(dir, static_cast<int>(poses.size()), cfg.thresholds());
      write_verify_report(dir, r);
      print_report_summary(r);
      return r.pass() ? 0 : kExitCheckFailed;
    }

    if (*stats_cmd) {
      const auto poses = load_poses(common.resolve(st_poses));
      const MotionMatrices m = motion_matrices(poses, st_frame == "world" ? DeltaFrame::kWorld : DeltaFrame::kBody);
      const Diversity d = diversity(m);
      std::cout << "sigma " << detail::shortest(d.sigma) << "\ntranslation_singular_values "
                << d.translation.values.transpose() << "\nrotation_singular_values "
                << d.rotation.values.transpose() << '\n';
      if (!st_out.empty()) {
        std::ostringstream os;
        write_motion_csv(os, m, d);
        write_text_file(common.resolve(st_out), os.str());
      }
      return 0;
    }

    if (*eval_cmd) {
      std::optional<double> sr;
      if (!ev_outcomes.empty()) {
        std::istringstream is(read_text_file(common.resolve(ev_outcomes)));
        sr = success_rate(read_outcomes(is));
      }
      if (ev_gt.empty() != ev_est.empty()) throw Error("eval: --gt and --est go together");
      if (ev_gt.empty() && !sr) throw Error("eval: nothing to evaluate; give --gt/--est or --outcomes");

      std::ostringstream text, csv;
      if (!ev_gt.empty()) {
        const auto gt = load_poses(common.resolve(ev_gt));
        const auto est = load_poses(common.resolve(ev_est));
        if (gt.size() != est.size())
          throw Error("eval: ground truth has " + std::to_string(gt.size()) + " poses, estimate " +
                      std::to_string(est.size()));
        const EvalMode mode = ev_mode == "mono" ? EvalMode::kMono : EvalMode::kStereo;
        std::vector<SequenceWindow> windows =
            ev_cut == 0 ? std::vector<SequenceWindow>{{"sequence", 0, gt.size()}}
                        : cut_sequences({{"sequence", gt.size()}}, ev_cut);
        if (windows.empty()) throw Error("eval: sequence is shorter than one window");
        write_eval_csv_header(csv);
        for (const auto& w : windows) {
          const EvalResult r = evaluate(slice(est, w), slice(gt, w), mode, !ev_no_align);
          text << "window " << w.source << ' ' << w.start << ' ' << w.length << '\n';
          write_eval_text(text, r, &w == &windows.back() ? sr : std::nullopt);
          write_eval_csv_row(csv, w, r);
        }
      } else {
        char buf[64];
        std::snprintf(buf, sizeof buf, "sr       %.6f\n", *sr);
        text << buf;
      }
      if (ev_report.empty()) std::cout << text.str();
      else write_text_file(common.resolve(ev_report), text.str());
      if (!ev_csv.empty() && !ev_gt.empty()) write_text_file(common.resolve(ev_csv), csv.str());
      return 0;
    }

    if (*pipeline_cmd) {
      const PipelineConfig cfg = pipe_cfg.load(common);
      const PipelineResult r = run_pipeline(cfg, common.resolve(pipe_out));
      std::cout << "frames " << cfg.frames << "\nartifacts " << r.manifest.size() << "\nsigma "
                << detail::shortest(r.sigma) << "\nexploration " << (r.exploration_complete ? "complete" : "incomplete")
                << '\n';
      print_report_summary(r.report);
      return r.pass() ? 0 : kExitCheckFailed;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
