#ifndef SLAMGEN_MAPPER_HPP
#define SLAMGEN_MAPPER_HPP

// Occupancy mapping from depth images and frontier-driven exploration.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "slamgen/error.hpp"
#include "slamgen/geom.hpp"
#include "slamgen/occupancy.hpp"
#include "slamgen/planner.hpp"
#include "slamgen/raster.hpp"
#include "slamgen/render.hpp"
#include "slamgen/scene.hpp"

namespace slamgen {

/// Offset past the measured surface used to pick the hit voxel, and the
/// margin short of it where free carving stops. Depth is f32, so 1e-4 m sits
/// well above its rounding at indoor ranges.
inline constexpr double kSurfaceEps = 1e-4;

/// Carves one depth image into the grid. Hit voxels are marked occupied
/// before any free carving, so occupied wins when rays disagree. Misses and
/// hits beyond max_range carve free space up to max_range.
inline void integrate_depth(OccupancyGrid& grid, const RasterImage& depth, const Pose& pose,
                            const CameraModel& cam, double max_range) {
  if (depth.width() != cam.width || depth.height() != cam.height || depth.channels() != 1)
    throw Error("integrate_depth: depth image does not match the camera");
  const Vec3 origin = pose.translation();
  if (!grid.in_bounds(grid.voxel_of(origin))) throw Error("integrate_depth: camera pose lies outside the grid");
  const Mat3 r = pose.rotation_matrix();
  const auto z = depth.values<float>();
  const int w = cam.width;
  const int h = cam.height;

  auto ray = [&](int x, int y, Vec3& dir, double& t_hit) {
    const Vec3 rc = pixel_ray(cam, x, y);
    const double n = rc.norm();
    dir = r * (rc / n);
    const float d = z[static_cast<std::size_t>(y) * w + x];
    t_hit = is_depth_hit(d) ? static_cast<double>(d) * n : -1.0;
    if (t_hit > max_range) t_hit = -1.0;
  };

  Vec3 dir;
  double t_hit = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      ray(x, y, dir, t_hit);
      if (t_hit < 0.0) continue;
      const Index3 v = grid.voxel_of(origin + (t_hit + kSurfaceEps) * dir);
      if (grid.in_bounds(v)) grid.mark(v, CellState::kOccupied);
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      ray(x, y, dir, t_hit);
      const double t_end = t_hit < 0.0 ? max_range : t_hit - kSurfaceEps;
      traverse_voxels(grid, origin, dir, t_end, [&](const Index3& v, double) {
        grid.mark(v, CellState::kFree);
        return true;
      });
    }
}

// ---------------------------------------------------------------------------
// Frontiers

struct FrontierCluster {
  int id = 0;
  std::vector<Index3> voxels;  // ascending linear index
  Vec3 centroid = Vec3::Zero();
  std::size_t size() const { return voxels.size(); }
};

inline bool is_frontier(const OccupancyGrid& grid, const Index3& v) {
  if (grid.state(v) != CellState::kFree) return false;
  static constexpr int kN[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (const auto& o : kN) {
    const Index3 u = v + Index3(o[0], o[1], o[2]);
    if (grid.in_bounds(u) && grid.state(u) == CellState::kUnknown) return true;
  }
  return false;
}

/// Frontier voxels grouped by 26-connectivity, largest cluster first (ties by
/// smallest member index). Voxels outside the grid do not count as unknown.
inline std::vector<FrontierCluster> detect_frontiers(const OccupancyGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<char> front(n, 0);
  for (std::size_t k = 0; k < n; ++k) front[k] = is_frontier(grid, grid.unlinear(k)) ? 1 : 0;

  std::vector<std::vector<std::size_t>> groups;
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack;
  for (std::size_t k = 0; k < n; ++k) {
    if (!front[k] || seen[k]) continue;
    groups.emplace_back();
    auto& g = groups.back();
    seen[k] = 1;
    stack.assign(1, k);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      g.push_back(c);
      const Index3 v = grid.unlinear(c);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const Index3 u = v + Index3(dx, dy, dz);
            if (!grid.in_bounds(u)) continue;
            const std::size_t m = grid.linear(u);
            if (front[m] && !seen[m]) {
              seen[m] = 1;
              stack.push_back(m);
            }
          }
    }
    std::sort(g.begin(), g.end());
  }
  std::stable_sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.front() < b.front();
  });

  std::vector<FrontierCluster> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    FrontierCluster c;
    c.id = static_cast<int>(out.size());
    for (std::size_t k : g) {
      c.voxels.push_back(grid.unlinear(k));
      c.centroid += grid.center(c.voxels.back());
    }
    c.centroid /= static_cast<double>(g.size());
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Viewpoint selection

struct ViewParams {
  double sensor_range = 10.0;
  double clearance = 0.5;
};

struct ViewTarget {
  Pose pose;
  std::size_t cluster = 0;            // index into the cluster list
  Index3 anchor = Index3::Zero();     // member voxel nearest the cluster centroid
  std::vector<std::size_t> skipped;  // clusters tried first that had no viewpoint
};

namespace detail {

inline Index3 cluster_anchor(const OccupancyGrid& grid, const FrontierCluster& c) {
  Index3 best = c.voxels.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& v : c.voxels) {
    const double d = (grid.center(v) - c.centroid).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = v;
    }
  }
  return best;
}

/// True when the straight line between two points crosses no occupied voxel.
inline bool line_of_sight(const OccupancyGrid& grid, const Vec3& a, const Vec3& b) {
  const Vec3 d = b - a;
  const double len = d.norm();
  if (len == 0.0) return true;
  bool ok = true;
  traverse_voxels(grid, a, d / len, len, [&](const Index3& v, double) {
    if (grid.state(v) == CellState::kOccupied) ok = false;
    return ok;
  });
  return ok;
}

/// Voxels whose centers are clear and 6-connected (through clear centers) to
/// the voxel containing `from`.
inline std::vector<char> reachable_centers(const ClearanceMap& cmap, const Vec3& from) {
  const OccupancyGrid& grid = cmap.grid();
  std::vector<char> reach(grid.size(), 0);
  const Index3 s = grid.voxel_of(from);
  if (!grid.in_bounds(s)) return reach;
  std::deque<Index3> queue{s};
  reach[grid.linear(s)] = 1;
  static constexpr int kN[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!queue.empty()) {
    const Index3 v = queue.front();
    queue.pop_front();
    for (const auto& o : kN) {
      const Index3 u = v + Index3(o[0], o[1], o[2]);
      if (!grid.in_bounds(u) || reach[grid.linear(u)]) continue;
      if (grid.state(u) != CellState::kFree || !cmap.center_clear(u)) continue;
      reach[grid.linear(u)] = 1;
      queue.push_back(u);
    }
  }
  return reach;
}

}  // namespace detail

/// Picks a viewpoint for the first cluster (in list order) that has one: the
/// reachable free voxel center nearest the cluster's anchor voxel that has
/// clearance, lies within sensor range of the centroid and sees the anchor
/// without crossing occupied space. Throws when no cluster has a viewpoint.
inline ViewTarget select_next_view(const ClearanceMap& cmap, const std::vector<FrontierCluster>& clusters,
                                   const Pose& current, const ViewParams& params) {
  if (clusters.empty()) throw Error("select_next_view: no frontier clusters");
  const OccupancyGrid& grid = cmap.grid();
  const auto reach = detail::reachable_centers(cmap, current.translation());
  ViewTarget out;
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const FrontierCluster& c = clusters[ci];
    const Index3 anchor = detail::cluster_anchor(grid, c);
    const Vec3 anchor_p = grid.center(anchor);
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (!reach[k]) continue;
      const Vec3 p = grid.center(grid.unlinear(k));
      if ((p - c.centroid).norm() > params.sensor_range) continue;
      const double d = (p - anchor_p).squaredNorm();
      if (d >= best_d) continue;
      if (!cmap.is_clear(p)) continue;
      if (!detail::line_of_sight(grid, p, anchor_p)) continue;
      best_d = d;
      best = k;
    }
    if (!best) {
      out.skipped.push_back(ci);
      continue;
    }
    out.cluster = ci;
    out.anchor = anchor;
    out.pose = look_at(grid.center(grid.unlinear(*best)), c.centroid);
    return out;
  }
  throw Error("select_next_view: no reachable viewpoint for any frontier cluster");
}

inline ViewTarget select_next_view(const OccupancyGrid& grid, const std::vector<FrontierCluster>& clusters,
                                   const Pose& current, const ViewParams& params = {}) {
  const ClearanceMap cmap(grid, params.clearance);
  return select_next_view(cmap, clusters, current, params);
}

// ---------------------------------------------------------------------------
// Exploration

struct ExploreParams {
  double resolution = 0.25;
  double max_range = 10.0;
  double clearance = 0.5;
  int scan_size = 96;  // pixels per side of each cube-map face
  int max_iterations = 200;
  RrtParams rrt{.step = 1.0, .clearance = 0.5, .max_iters = 3000};
  std::uint64_t seed = 1;
};

struct ExploreResult {
  OccupancyGrid grid;
  std::vector<Pose> poses;  // scan poses in visiting order
  std::vector<std::vector<Vec3>> paths;  // navigation paths between scans
  int iterations = 0;
  bool complete = false;  // true when no frontier is left
  std::string warning;    // set when the budget ran out or frontiers were abandoned
};

/// Six axis-aligned 90-degree views around a point (a cube map).
inline std::array<Pose, 6> cube_poses(const Vec3& p) {
  const double q = 0.5 * kPi;
  return {camera_pose_from_ypr(p, 0.0, 0.0, 0.0), camera_pose_from_ypr(p, q, 0.0, 0.0),
          camera_pose_from_ypr(p, 2.0 * q, 0.0, 0.0), camera_pose_from_ypr(p, -q, 0.0, 0.0),
          camera_pose_from_ypr(p, 0.0, q, 0.0), camera_pose_from_ypr(p, 0.0, -q, 0.0)};
}

inline void scan_into(OccupancyGrid& grid, const Scene& scene, const Vec3& p, const CameraModel& cam,
                      double max_range) {
  for (const Pose& view : cube_poses(p)) integrate_depth(grid, render_depth(scene, view, cam), view, cam, max_range);
}

/// Frontier exploration: scan, detect frontiers, choose a viewpoint, fly
/// there with RRT*, repeat. Clusters without a viewpoint, without a path, or
/// whose anchor was already targeted are abandoned.
inline ExploreResult explore(const Scene& scene, const Pose& start, const ExploreParams& params) {
  const Vec3 p0 = start.translation();
  if (scene.inside_obstacle(p0)) throw Error("explore: start pose is inside an obstacle");
  ExploreResult res;
  res.grid = OccupancyGrid::covering(scene.bounds(), params.resolution);
  OccupancyGrid& grid = res.grid;
  if (!grid.in_bounds(grid.voxel_of(p0))) throw Error("explore: start pose lies outside the grid");
  const CameraModel cam = CameraModel::with_fov(params.scan_size, params.scan_size, 90.0);
  const ViewParams vp{params.max_range, params.clearance};
  RrtParams rrt = params.rrt;
  rrt.clearance = params.clearance;

  scan_into(grid, scene, p0, cam, params.max_range);
  res.poses.push_back(start);
  Pose current = start;
  std::vector<char> abandoned(grid.size(), 0);
  std::unordered_set<std::size_t> targeted;
  int abandoned_clusters = 0;

  auto abandon = [&](const FrontierCluster& c) {
    for (const auto& v : c.voxels) abandoned[grid.linear(v)] = 1;
    ++abandoned_clusters;
  };

  while (true) {
    auto clusters = detect_frontiers(grid);
    if (clusters.empty()) {
      res.complete = true;
      break;
    }
    if (res.iterations >= params.max_iterations) {
      res.warning = "iteration budget exhausted with " + std::to_string(clusters.size()) + " frontier clusters left";
      break;
    }
    ++res.iterations;
    // A cluster mostly made of abandoned voxels stays abandoned.
    std::vector<FrontierCluster> open;
    for (auto& c : clusters) {
      std::size_t dead = 0;
      for (const auto& v : c.voxels) dead += abandoned[grid.linear(v)];
      if (2 * dead < c.size()) open.push_back(std::move(c));
    }
    if (open.empty()) {
      res.warning = std::to_string(clusters.size()) + " frontier clusters have no reachable viewpoint";
      break;
    }

    const ClearanceMap cmap(grid, params.clearance);
    ViewTarget target;
    try {
      target = select_next_view(cmap, open, current, vp);
    } catch (const Error&) {
      for (const auto& c : open) abandon(c);
      continue;
    }
    for (std::size_t k : target.skipped) abandon(open[k]);
    const FrontierCluster& chosen = open[target.cluster];
    if (!targeted.insert(grid.linear(target.anchor)).second) {
      abandon(chosen);
      continue;
    }

    std::optional<PlannedPath> path;
    try {
      path = rrt_star(cmap, current.translation(), target.pose.translation(), rrt,
                      derive_seed(params.seed, "explore-nav", static_cast<std::uint64_t>(res.iterations)));
    } catch (const Error&) {
      path.reset();
    }
    if (!path) {
      abandon(chosen);
      continue;
    }
    res.paths.push_back(path->points);
    current = target.pose;
    res.poses.push_back(current);
    scan_into(grid, scene, current.translation(), cam, params.max_range);
  }
  if (abandoned_clusters > 0 && res.warning.empty() && !res.complete)
    res.warning = "frontier clusters abandoned";
  return res;
}

}  // namespace slamgen

#endif  // SLAMGEN_MAPPER_HPP
