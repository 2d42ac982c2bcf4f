#ifndef SLAMGEN_PIPELINE_HPP
#define SLAMGEN_PIPELINE_HPP

// End-to-end sequence generation: scene -> exploration -> trajectory graph ->
// loop -> smoothing -> pose randomization -> rendering -> labels -> checks.
//
// Config grammar, one setting per line:
//   key = value        whitespace around '=' is ignored
//   # comment          full-line or trailing
// Unknown or repeated keys are errors.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slamgen/error.hpp"
#include "slamgen/geom.hpp"
#include "slamgen/io.hpp"
#include "slamgen/labelgen.hpp"
#include "slamgen/mapper.hpp"
#include "slamgen/motionstats.hpp"
#include "slamgen/occupancy.hpp"
#include "slamgen/planner.hpp"
#include "slamgen/random.hpp"
#include "slamgen/render.hpp"
#include "slamgen/scene.hpp"
#include "slamgen/verify.hpp"

namespace slamgen {

struct PipelineConfig {
  std::uint64_t seed = 7;
  std::string scene;  // scene file path; empty means generate from the seed
  int frames = 100;
  std::string difficulty = "medium";

  int width = 320;
  int height = 320;
  double hfov_deg = 90.0;
  double baseline = 0.25;

  double resolution = 0.25;
  double max_range = 10.0;
  int explore_iterations = 200;
  int explore_scan_size = 96;

  double clearance = 0.75;       // graph, loop and smoothing
  double pose_clearance = 0.6;   // every emitted camera position
  double max_offset = 0.25;      // lateral/vertical jitter bound, 6-DoF profiles
  int graph_nodes = 30;
  double graph_cutoff = 40.0;
  int rrt_iterations = 2000;
  double rrt_step = 1.0;
  int samples_per_segment = 8;
  int step_attempts = 32;       // redraws allowed per frame step that fails the screen
  int screen_size = 64;         // image size of the step screening renders
  double screen_margin = 0.8;   // screen steps at this fraction of verify_occlusion

  double occlusion_threshold = 0.05;
  int lidar_lines = 32;
  double lidar_fov_low = -25.0;
  double lidar_fov_high = 15.0;
  int lidar_points = 512;
  double lidar_range = 50.0;

  double verify_photometric = 5.0;
  double verify_occlusion = 0.3;
  double verify_collision = 0.25;

  void validate() const {
    DifficultyProfile::by_name(difficulty);
    if (frames < 2) throw Error("config: frames must be at least 2");
    if (width <= 0 || height <= 0) throw Error("config: image size must be positive");
    if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) throw Error("config: hfov must lie in (0, 180)");
    if (!(resolution > 0.0)) throw Error("config: resolution must be positive");
    if (graph_nodes < 2) throw Error("config: graph_nodes must be at least 2");
    if (!(pose_clearance <= clearance)) throw Error("config: pose_clearance must not exceed clearance");
    if (step_attempts < 1) throw Error("config: step_attempts must be at least 1");
    if (screen_size < 8) throw Error("config: screen_size must be at least 8");
    lidar().validate();
  }

  CameraModel camera() const { return CameraModel::with_fov(width, height, hfov_deg); }
  StereoRig rig() const { return {baseline}; }
  LidarSpec lidar() const {
    LidarSpec s;
    s.n_lines = lidar_lines;
    s.fov_low_deg = lidar_fov_low;
    s.fov_high_deg = lidar_fov_high;
    s.points_per_line = lidar_points;
    s.max_range = lidar_range;
    return s;
  }
  VerifyThresholds thresholds() const { return {verify_photometric, verify_occlusion, verify_collision}; }
};

namespace detail {

/// Binds each config key to its field, in file order.
template <typename Fn>
void config_fields(PipelineConfig& c, Fn&& fn) {
  fn("seed", c.seed);
  fn("scene", c.scene);
  fn("frames", c.frames);
  fn("difficulty", c.difficulty);
  fn("width", c.width);
  fn("height", c.height);
  fn("hfov", c.hfov_deg);
  fn("baseline", c.baseline);
  fn("resolution", c.resolution);
  fn("max_range", c.max_range);
  fn("explore_iterations", c.explore_iterations);
  fn("explore_scan_size", c.explore_scan_size);
  fn("clearance", c.clearance);
  fn("pose_clearance", c.pose_clearance);
  fn("max_offset", c.max_offset);
  fn("graph_nodes", c.graph_nodes);
  fn("graph_cutoff", c.graph_cutoff);
  fn("rrt_iterations", c.rrt_iterations);
  fn("rrt_step", c.rrt_step);
  fn("samples_per_segment", c.samples_per_segment);
  fn("step_attempts", c.step_attempts);
  fn("screen_size", c.screen_size);
  fn("screen_margin", c.screen_margin);
  fn("occlusion_threshold", c.occlusion_threshold);
  fn("lidar_lines", c.lidar_lines);
  fn("lidar_fov_low", c.lidar_fov_low);
  fn("lidar_fov_high", c.lidar_fov_high);
  fn("lidar_points", c.lidar_points);
  fn("lidar_range", c.lidar_range);
  fn("verify_photometric", c.verify_photometric);
  fn("verify_occlusion", c.verify_occlusion);
  fn("verify_collision", c.verify_collision);
}

template <typename T>
void parse_value(const std::string& s, T& out, std::size_t line) {
  if constexpr (std::is_same_v<T, std::string>) {
    out = s;
  } else {
    T v{};
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw ParseError::at_line("invalid value '" + s + "'", line);
    out = v;
  }
}

template <typename T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
  }
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline PipelineConfig parse_config(std::istream& is) {
  PipelineConfig c;
  std::map<std::string, std::function<void(const std::string&, std::size_t)>> setters;
  detail::config_fields(c, [&](const char* key, auto& field) {
    setters[key] = [&field](const std::string& v, std::size_t ln) { detail::parse_value(v, field, ln); };
  });
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError::at_line("expected 'key = value'", ln);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) throw ParseError::at_line("unknown key '" + key + "'", ln);
    if (seen.count(key)) throw ParseError::at_line("key '" + key + "' repeats line " + std::to_string(seen[key]), ln);
    seen[key] = ln;
    if (value.empty() && key != "scene") throw ParseError::at_line("missing value for '" + key + "'", ln);
    it->second(value, ln);
  }
  try {
    c.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError::at_line(e.what(), ln);
  }
  return c;
}

/// Overrides one key, e.g. from a command-line "key=value". Does not validate.
inline void set_config_value(PipelineConfig& c, const std::string& key, const std::string& value) {
  bool found = false;
  detail::config_fields(c, [&](const char* k, auto& field) {
    if (key != k) return;
    found = true;
    try {
      detail::parse_value(detail::trim(value), field, 0);
    } catch (const ParseError&) {
      throw Error("config: invalid value '" + value + "' for '" + key + "'");
    }
  });
  if (!found) throw Error("config: unknown key '" + key + "'");
}

inline PipelineConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline std::string format_config(const PipelineConfig& cfg) {
  PipelineConfig c = cfg;
  std::string out;
  detail::config_fields(c, [&](const char* key, auto& field) {
    out += key;
    out += " = ";
    out += detail::format_value(field);
    out += '\n';
  });
  return out;
}

// ---------------------------------------------------------------------------
// Stages

/// Rethrows any toolkit error with the stage name (and frame) prefixed.
template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn, int frame = -1) {
  try {
    return fn();
  } catch (const Error& e) {
    std::string where = "stage " + stage;
    if (frame >= 0) where += " frame " + std::to_string(frame);
    throw Error(where + ": " + e.what());
  }
}

/// A voxel center at least `margin` from every primitive, drawn with the
/// given seed. Triangles and planes are kept at bay through their bounding boxes.
inline Vec3 pick_free_start(const Scene& scene, double resolution, double margin, std::uint64_t seed) {
  Rng rng(seed);
  const Aabb b = scene.bounds();
  auto far_enough = [&](const Vec3& p) {
    if (scene.inside_obstacle(p) || scene.distance_to_solids(p) < margin) return false;
    for (const auto& q : scene.primitives()) {
      if (q.shape == Shape::kTriangle) {
        const Vec3 lo = q.a.cwiseMin(q.b).cwiseMin(q.c);
        const Vec3 hi = q.a.cwiseMax(q.b).cwiseMax(q.c);
        if ((lo - p).cwiseMax(p - hi).cwiseMax(Vec3::Zero()).norm() < margin) return false;
      } else if (q.shape == Shape::kPlane) {
        if (std::abs(q.b.dot(p - q.a)) < margin) return false;
      }
    }
    return true;
  };
  for (int k = 0; k < 100000; ++k) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
      const double x = rng.uniform(b.min[a], b.max[a]);
      p[a] = b.min[a] + (std::floor((x - b.min[a]) / resolution) + 0.5) * resolution;
    }
    if (far_enough(p)) return p;
  }
  throw Error("no free start position found in the scene");
}

struct PlannedSequence {
  ExploreResult exploration;
  TrajectoryGraph graph;
  GraphLoop loop;
  std::vector<Vec3> smoothed;
  RandomizedTrajectory trajectory;
};

/// Everything up to the pose sequence.
inline PlannedSequence plan_sequence(const Scene& scene, const PipelineConfig& cfg) {
  PlannedSequence out;
  const std::uint64_t seed = cfg.seed;
  out.exploration = run_stage("explore", [&] {
    const Vec3 start = pick_free_start(scene, cfg.resolution, 1.0, derive_seed(seed, "explore-start"));
    ExploreParams ep;
    ep.resolution = cfg.resolution;
    ep.max_range = cfg.max_range;
    ep.clearance = std::min(cfg.clearance, 0.5);
    ep.scan_size = cfg.explore_scan_size;
    ep.max_iterations = cfg.explore_iterations;
    ep.rrt.max_iters = cfg.rrt_iterations;
    ep.seed = derive_seed(seed, "explore");
    return explore(scene, camera_pose_from_ypr(start, 0.0, 0.0, 0.0), ep);
  });
  const OccupancyGrid& grid = out.exploration.grid;
  const ClearanceMap cmap(grid, cfg.clearance);

  const std::uint64_t plan_seed = derive_seed(seed, "plan");
  out.graph = run_stage("graph", [&] {
    GraphParams gp;
    gp.cutoff = cfg.graph_cutoff;
    gp.rrt.clearance = cfg.clearance;
    gp.rrt.max_iters = cfg.rrt_iterations;
    gp.rrt.step = cfg.rrt_step;
    return build_graph(cmap, cfg.graph_nodes, gp, derive_seed(plan_seed, "graph"));
  });
  out.loop = run_stage("loop", [&] {
    // Among a few sampled loops keep the longest, so short triangles between
    // neighboring nodes do not dominate the sequence.
    std::optional<GraphLoop> best;
    for (std::uint64_t k = 0; k < 8; ++k) {
      auto l = sample_loop(out.graph, derive_seed(plan_seed, "loop", k));
      if (!l) break;
      if (!best || polyline_length(l->path) > polyline_length(best->path)) best = std::move(l);
    }
    if (!best) throw Error("trajectory graph has no cycle");
    return *best;
  });
  out.smoothed = run_stage("smooth", [&] {
    return smooth_path(cmap, out.loop.path, SmoothParams{cfg.samples_per_segment, cfg.clearance});
  });
  out.trajectory = run_stage("poses", [&] {
    const ClearanceMap pose_map(grid, cfg.pose_clearance);
    RandomizeOptions ro;
    ro.clearance = &pose_map;
    ro.max_offset = cfg.max_offset;
    // Steps whose views barely overlap would fail the occluded-area check;
    // they are redrawn after a depth-only render at the screening size.
    const int w = cfg.screen_size;
    const int h = std::max(8, static_cast<int>(std::lround(static_cast<double>(w) * cfg.height / cfg.width)));
    const CameraModel scam = CameraModel::with_fov(w, h, cfg.hfov_deg);
    const FlowParams fp{cfg.occlusion_threshold};
    std::optional<std::pair<Vec3, Quat>> cached_key;
    RasterImage cached;
    ro.step_cost = [&](const Pose& a, const Pose& b) {
      if (!cached_key || cached_key->first != a.translation() || cached_key->second.coeffs() != a.rotation().coeffs()) {
        cached = render_depth(scene, a, scam);
        cached_key = {a.translation(), a.rotation()};
      }
      return occlusion_fraction(compute_flow(cached, a, b, render_depth(scene, b, scam), scam, fp));
    };
    ro.step_cost_limit = cfg.screen_margin * cfg.verify_occlusion;
    ro.step_attempts = cfg.step_attempts;
    return randomize_poses(out.smoothed, DifficultyProfile::by_name(cfg.difficulty), cfg.frames,
                           derive_seed(plan_seed, "poses"), ro);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Run

struct ManifestEntry {
  std::string path;    // relative to the sequence directory
  std::string format;  // format tag
  int frame = -1;      // -1 for sequence-level artifacts
};

using Manifest = std::vector<ManifestEntry>;

inline std::string frame_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", i);
  return buf;
}

inline Pose lidar_sensor_pose(const Pose& camera) {
  return {camera.rotation_matrix() * body_from_camera().transpose(), camera.translation()};
}

namespace detail {

inline std::filesystem::path entry(Manifest* m, const std::filesystem::path& dir, const std::string& rel,
                                   const std::string& fmt, int frame = -1) {
  if (m) m->push_back({rel, fmt, frame});
  return dir / rel;
}

inline std::string frame_path(int i, const char* suffix) { return "frames/" + frame_name(i) + suffix; }
inline std::string flow_path(int i, const char* suffix) { return "flow/" + frame_name(i) + suffix; }

}  // namespace detail

/// The scene of a config: read from its file, or generated from the seed.
inline Scene load_config_scene(const PipelineConfig& cfg) {
  return run_stage("scene", [&] {
    if (!cfg.scene.empty()) {
      std::istringstream is(read_text_file(cfg.scene));
      return read_scene(is);
    }
    return generate_scene(derive_seed(cfg.seed, "scene"));
  });
}

/// config.txt scene.txt grid.tocc path.txt poses.txt
inline void write_plan(const std::filesystem::path& dir, const PipelineConfig& cfg, const Scene& scene,
                       const PlannedSequence& plan, Manifest* m = nullptr) {
  write_text_file(detail::entry(m, dir, "config.txt", "config"), format_config(cfg));
  {
    std::ostringstream os;
    write_scene(os, scene);
    write_text_file(detail::entry(m, dir, "scene.txt", "scene"), os.str());
  }
  save_grid(detail::entry(m, dir, "grid.tocc", "tocc"), plan.exploration.grid);
  std::ostringstream os;
  for (const auto& p : plan.smoothed)
    os << detail::shortest(p.x()) << ' ' << detail::shortest(p.y()) << ' ' << detail::shortest(p.z()) << '\n';
  write_text_file(detail::entry(m, dir, "path.txt", "path"), os.str());
  save_poses(detail::entry(m, dir, "poses.txt", "poses"), plan.trajectory.poses);
}

/// frames/NNNNNN_{depth,rgb,seg}.ttnr
inline void render_sequence(const std::filesystem::path& dir, const PipelineConfig& cfg, const Scene& scene,
                            const std::vector<Pose>& poses, Manifest* m = nullptr) {
  const CameraModel cam = cfg.camera();
  for (int i = 0; i < static_cast<int>(poses.size()); ++i) {
    const RenderedFrame rf = run_stage("render", [&] { return render(scene, poses[i], cam); }, i);
    save_raster(detail::entry(m, dir, detail::frame_path(i, "_depth.ttnr"), "ttnr-depth", i), rf.depth);
    save_raster(detail::entry(m, dir, detail::frame_path(i, "_rgb.ttnr"), "ttnr-rgb", i), rf.rgb);
    save_raster(detail::entry(m, dir, detail::frame_path(i, "_seg.ttnr"), "ttnr-seg", i), rf.seg);
  }
}

/// Reads the rendered depth maps and writes
///   frames/NNNNNN_{disp,disp_mask}.ttnr  frames/NNNNNN_lidar.tldr
///   flow/NNNNNN_{flow,mask}.ttnr (frame NNNNNN to the next)
inline void label_sequence(const std::filesystem::path& dir, const PipelineConfig& cfg, const Scene& scene,
                           const std::vector<Pose>& poses, Manifest* m = nullptr) {
  const CameraModel cam = cfg.camera();
  const StereoRig rig = cfg.rig();
  const LidarSpec lidar = cfg.lidar();
  const FlowParams fp{cfg.occlusion_threshold};
  RasterImage prev;
  for (int i = 0; i < static_cast<int>(poses.size()); ++i) {
    RasterImage depth = run_stage("labels", [&] {
      return decode_raster(read_file(dir / detail::frame_path(i, "_depth.ttnr")), DType::kF32, 1);
    }, i);
    if (depth.width() != cam.width || depth.height() != cam.height)
      throw Error("stage labels frame " + std::to_string(i) + ": depth size does not match the camera");
    run_stage("disparity", [&] {
      const RasterImage right = render_depth(scene, rig.right_pose(poses[i]), cam);
      const Disparity d = compute_disparity(depth, cam, rig, right);
      save_raster(detail::entry(m, dir, detail::frame_path(i, "_disp.ttnr"), "ttnr-disparity", i), d.disparity);
      save_raster(detail::entry(m, dir, detail::frame_path(i, "_disp_mask.ttnr"), "ttnr-disparity-mask", i), d.mask);
      return 0;
    }, i);
    run_stage("lidar", [&] {
      save_points(detail::entry(m, dir, detail::frame_path(i, "_lidar.tldr"), "tldr", i),
                  simulate_lidar(scene, lidar_sensor_pose(poses[i]), lidar).points);
      return 0;
    }, i);
    if (i > 0) {
      const FlowField ff = run_stage("flow", [&] {
        return compute_flow(prev, poses[i - 1], poses[i], depth, cam, fp);
      }, i - 1);
      save_raster(detail::entry(m, dir, detail::flow_path(i - 1, "_flow.ttnr"), "ttnr-flow", i - 1), ff.flow);
      save_raster(detail::entry(m, dir, detail::flow_path(i - 1, "_mask.ttnr"), "ttnr-flow-mask", i - 1), ff.mask);
    }
    prev = std::move(depth);
  }
}

/// Verifies n frames of a sequence directory from the files on disk.
inline VerifyReport verify_directory(const std::filesystem::path& dir, int n, const VerifyThresholds& th) {
  return run_stage("verify", [&] {
    std::vector<RasterImage> rgbs, depths;
    std::vector<FlowField> flows;
    for (int i = 0; i < n; ++i) {
      rgbs.push_back(decode_raster(read_file(dir / detail::frame_path(i, "_rgb.ttnr")), DType::kU8, 3));
      depths.push_back(decode_raster(read_file(dir / detail::frame_path(i, "_depth.ttnr")), DType::kF32, 1));
      if (i + 1 < n)
        flows.push_back({decode_raster(read_file(dir / detail::flow_path(i, "_flow.ttnr")), DType::kF32, 2),
                         decode_raster(read_file(dir / detail::flow_path(i, "_mask.ttnr")), DType::kU8, 1)});
    }
    return verify_sequence(rgbs, depths, flows, th);
  });
}

inline void write_verify_report(const std::filesystem::path& dir, const VerifyReport& r, Manifest* m = nullptr) {
  std::ostringstream os;
  write_report(os, r);
  write_text_file(detail::entry(m, dir, "report.txt", "verify-report"), os.str());
}

/// motion.csv; returns sigma.
inline double write_motion_stats(const std::filesystem::path& dir, const std::vector<Pose>& poses, Manifest* m = nullptr) {
  return run_stage("stats", [&] {
    const MotionMatrices mm = motion_matrices(poses);
    const Diversity d = diversity(mm);
    std::ostringstream os;
    write_motion_csv(os, mm, d);
    write_text_file(detail::entry(m, dir, "motion.csv", "motion-csv"), os.str());
    return d.sigma;
  });
}

struct PipelineResult {
  std::filesystem::path directory;
  Manifest manifest;
  VerifyReport report;
  double sigma = 0.0;
  bool exploration_complete = false;
  bool pass() const { return report.pass(); }
};

/// Writes a complete sequence into `out_dir`: the plan files, rendered frames,
/// labels, report.txt, motion.csv and manifest.txt listing all of them.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  PipelineResult res;
  res.directory = out_dir;
  std::filesystem::create_directories(out_dir);
  Manifest* m = &res.manifest;

  const Scene scene = load_config_scene(cfg);
  const PlannedSequence plan = plan_sequence(scene, cfg);
  res.exploration_complete = plan.exploration.complete;
  write_plan(out_dir, cfg, scene, plan, m);
  const std::vector<Pose>& poses = plan.trajectory.poses;
  render_sequence(out_dir, cfg, scene, poses, m);
  label_sequence(out_dir, cfg, scene, poses, m);
  res.report = verify_directory(out_dir, static_cast<int>(poses.size()), cfg.thresholds());
  write_verify_report(out_dir, res.report, m);
  res.sigma = write_motion_stats(out_dir, poses, m);

  Manifest sorted = res.manifest;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  std::ostringstream os;
  os << "# path format frame\n";
  for (const auto& e : sorted)
    os << e.path << ' ' << e.format << ' ' << (e.frame < 0 ? std::string("-") : std::to_string(e.frame)) << '\n';
  os << "sigma " << detail::shortest(res.sigma) << '\n';
  os << "exploration " << (res.exploration_complete ? "complete" : "incomplete") << '\n';
  os << "verification " << (res.report.pass() ? "pass" : "fail") << '\n';
  write_text_file(out_dir / "manifest.txt", os.str());
  res.manifest.push_back({"manifest.txt", "manifest", -1});
  return res;
}

}  // namespace slamgen

#endif  // SLAMGEN_PIPELINE_HPP
