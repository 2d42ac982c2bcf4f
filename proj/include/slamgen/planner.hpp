#ifndef SLAMGEN_PLANNER_HPP
#define SLAMGEN_PLANNER_HPP

// Trajectory generation: RRT* between free points, a trajectory graph over
// randomly sampled nodes, loop extraction, obstacle-aware spline smoothing and
// difficulty-tiered pose randomization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "slamgen/error.hpp"
#include "slamgen/geom.hpp"
#include "slamgen/occupancy.hpp"
#include "slamgen/random.hpp"

namespace slamgen {

namespace detail {

/// Uniform bucket grid over a box for nearest / radius queries.
class PointBuckets {
 public:
  PointBuckets(const Aabb& box, double cell) : box_(box), cell_(cell) {
    const Vec3 n = box.size() / cell;
    dims_ = Index3(std::max(1, static_cast<int>(std::ceil(n.x()))),
                   std::max(1, static_cast<int>(std::ceil(n.y()))),
                   std::max(1, static_cast<int>(std::ceil(n.z()))));
    buckets_.resize(static_cast<std::size_t>(dims_.x()) * dims_.y() * dims_.z());
  }

  void insert(int id, const Vec3& p) {
    buckets_[slot(cell_of(p))].push_back(id);
    points_.resize(std::max<std::size_t>(points_.size(), id + 1));
    points_[id] = p;
  }

  int nearest(const Vec3& p) const {
    const Index3 c = cell_of(p);
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    const int max_ring = dims_.maxCoeff();
    for (int r = 0; r <= max_ring; ++r) {
      for (int dz = -r; dz <= r; ++dz)
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
            const Index3 q = c + Index3(dx, dy, dz);
            if (!inside(q)) continue;
            for (int id : buckets_[slot(q)]) {
              const double d2 = (points_[id] - p).squaredNorm();
              if (d2 < best_d2 || (d2 == best_d2 && id < best)) {
                best_d2 = d2;
                best = id;
              }
            }
          }
      // Anything in ring r+1 or further is at least r*cell away.
      if (best >= 0 && std::sqrt(best_d2) <= r * cell_) break;
    }
    return best;
  }

  void within(const Vec3& p, double radius, std::vector<int>& out) const {
    out.clear();
    const Index3 lo = cell_of(p - Vec3::Constant(radius));
    const Index3 hi = cell_of(p + Vec3::Constant(radius));
    const double r2 = radius * radius;
    for (int z = lo.z(); z <= hi.z(); ++z)
      for (int y = lo.y(); y <= hi.y(); ++y)
        for (int x = lo.x(); x <= hi.x(); ++x)
          for (int id : buckets_[slot(Index3(x, y, z))])
            if ((points_[id] - p).squaredNorm() <= r2) out.push_back(id);
    std::sort(out.begin(), out.end());
  }

 private:
  Index3 cell_of(const Vec3& p) const {
    Index3 c;
    for (int a = 0; a < 3; ++a)
      c[a] = std::clamp(static_cast<int>(std::floor((p[a] - box_.min[a]) / cell_)), 0, dims_[a] - 1);
    return c;
  }
  bool inside(const Index3& q) const {
    return (q.array() >= 0).all() && (q.array() < dims_.array()).all();
  }
  std::size_t slot(const Index3& q) const {
    return (static_cast<std::size_t>(q.z()) * dims_.y() + q.y()) * dims_.x() + q.x();
  }

  Aabb box_;
  double cell_;
  Index3 dims_;
  std::vector<std::vector<int>> buckets_;
  std::vector<Vec3> points_;
};

}  // namespace detail

struct RrtParams {
  double step = 1.0;           // maximum extension per iteration, meters
  double clearance = 0.5;      // meters
  int max_iters = 5000;
  double goal_bias = 0.05;     // probability of sampling the goal
  double rewire_radius = 2.0;  // upper bound on the shrinking neighborhood radius
  double gamma = 6.0;          // r_n = min(rewire_radius, gamma * (log n / n)^(1/3))
};

struct PlannedPath {
  std::vector<Vec3> points;
  double cost = 0.0;
};

/// RRT* from start to goal. Throws if either endpoint lacks clearance;
/// returns nullopt if the goal was never connected within max_iters.
inline std::optional<PlannedPath> rrt_star(const ClearanceMap& cmap, const Vec3& start,
                                           const Vec3& goal, const RrtParams& params,
                                           std::uint64_t seed) {
  if (!cmap.is_clear(start)) throw Error("rrt_star: start is in collision");
  if (!cmap.is_clear(goal)) throw Error("rrt_star: goal is in collision");
  if ((start - goal).norm() == 0.0) return PlannedPath{{start}, 0.0};

  const Aabb box = cmap.grid().bounds();
  detail::PointBuckets buckets(box, std::max(params.step, cmap.grid().resolution()));
  std::vector<Vec3> pos{start};
  std::vector<int> parent{-1};
  std::vector<double> cost{0.0};
  std::vector<std::vector<int>> children(1);
  buckets.insert(0, start);
  int goal_id = -1;

  Rng rng(seed);
  std::vector<int> near;
  std::vector<int> order;
  std::vector<int> stack;

  auto reparent = [&](int node, int new_parent) {
    auto& sib = children[parent[node]];
    sib.erase(std::find(sib.begin(), sib.end(), node));
    parent[node] = new_parent;
    children[new_parent].push_back(node);
    cost[node] = cost[new_parent] + (pos[node] - pos[new_parent]).norm();
    stack.assign(children[node].begin(), children[node].end());
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      cost[c] = cost[parent[c]] + (pos[c] - pos[parent[c]]).norm();
      stack.insert(stack.end(), children[c].begin(), children[c].end());
    }
  };

  auto add_node = [&](const Vec3& p, int par) {
    const int id = static_cast<int>(pos.size());
    pos.push_back(p);
    parent.push_back(par);
    cost.push_back(cost[par] + (p - pos[par]).norm());
    children.emplace_back();
    children[par].push_back(id);
    buckets.insert(id, p);
    return id;
  };

  for (int it = 0; it < params.max_iters; ++it) {
    Vec3 sample;
    if (rng.uniform() < params.goal_bias) {
      sample = goal;
    } else {
      for (int a = 0; a < 3; ++a) sample[a] = rng.uniform(box.min[a], box.max[a]);
    }
    const int nearest = buckets.nearest(sample);
    Vec3 dir = sample - pos[nearest];
    const double dist = dir.norm();
    if (dist < 1e-12) continue;
    const Vec3 x_new = dist <= params.step ? sample : Vec3(pos[nearest] + dir * (params.step / dist));
    if (!cmap.is_clear(x_new) || !cmap.segment_clear(pos[nearest], x_new)) continue;

    const double n = static_cast<double>(pos.size() + 1);
    const double radius =
        std::max(params.step, std::min(params.rewire_radius, params.gamma * std::cbrt(std::log(n) / n)));
    buckets.within(x_new, radius, near);

    // Parent choice: cheapest collision-free neighbor, checked in cost order.
    int best_parent = nearest;
    double best_cost = cost[nearest] + (x_new - pos[nearest]).norm();
    order.assign(near.begin(), near.end());
    std::vector<double> via(pos.size(), 0.0);
    for (int m : order) via[m] = cost[m] + (x_new - pos[m]).norm();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return via[a] < via[b]; });
    for (int m : order) {
      if (via[m] >= best_cost) break;
      if (cmap.segment_clear(pos[m], x_new)) {
        best_parent = m;
        best_cost = via[m];
        break;
      }
    }
    const int id = add_node(x_new, best_parent);

    for (int m : near) {
      if (m == best_parent || m == 0) continue;
      const double c = cost[id] + (pos[m] - x_new).norm();
      if (c + 1e-12 < cost[m] && cmap.segment_clear(x_new, pos[m])) reparent(m, id);
    }

    if (goal_id < 0 && (goal - x_new).norm() <= params.step && cmap.segment_clear(x_new, goal))
      goal_id = add_node(goal, id);
  }
  if (goal_id < 0) return std::nullopt;

  PlannedPath out;
  for (int v = goal_id; v >= 0; v = parent[v]) out.points.push_back(pos[v]);
  std::reverse(out.points.begin(), out.points.end());
  out.points.front() = start;
  out.points.back() = goal;
  out.cost = polyline_length(out.points);
  return out;
}

inline std::optional<PlannedPath> rrt_star(const OccupancyGrid& grid, const Vec3& start,
                                           const Vec3& goal, const RrtParams& params,
                                           std::uint64_t seed) {
  const ClearanceMap cmap(grid, params.clearance);
  return rrt_star(cmap, start, goal, params, seed);
}

// ---------------------------------------------------------------------------
// Trajectory graph

struct GraphEdge {
  int u = 0;
  int v = 0;
  std::vector<Vec3> path;  // from node u to node v
  double cost = 0.0;
};

struct TrajectoryGraph {
  std::vector<Vec3> nodes;
  std::vector<GraphEdge> edges;

  /// Incident edge ids per node.
  std::vector<std::vector<int>> incidence() const {
    std::vector<std::vector<int>> inc(nodes.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      inc[edges[e].u].push_back(static_cast<int>(e));
      inc[edges[e].v].push_back(static_cast<int>(e));
    }
    return inc;
  }

  /// Connected component label per node.
  std::vector<int> components() const {
    std::vector<int> label(nodes.size(), -1);
    const auto inc = incidence();
    int next = 0;
    for (std::size_t s = 0; s < nodes.size(); ++s) {
      if (label[s] >= 0) continue;
      std::vector<int> stack{static_cast<int>(s)};
      label[s] = next;
      while (!stack.empty()) {
        const int a = stack.back();
        stack.pop_back();
        for (int e : inc[a]) {
          const int b = edges[e].u == a ? edges[e].v : edges[e].u;
          if (label[b] < 0) {
            label[b] = next;
            stack.push_back(b);
          }
        }
      }
      ++next;
    }
    return label;
  }

  int component_count() const {
    const auto l = components();
    return l.empty() ? 0 : *std::max_element(l.begin(), l.end()) + 1;
  }
};

struct GraphParams {
  RrtParams rrt;
  double cutoff = 40.0;            // only pairs closer than this are planned
  bool try_straight_line = true;   // accept a clear straight segment before running RRT*
  int sample_attempts_per_node = 20000;
};

inline TrajectoryGraph build_graph(const ClearanceMap& cmap, int n_nodes,
                                   const GraphParams& params, std::uint64_t seed) {
  if (n_nodes < 2) throw Error("build_graph: need at least 2 nodes");
  const Aabb box = cmap.grid().bounds();
  Rng rng(derive_seed(seed, "graph-nodes"));
  TrajectoryGraph g;
  const long long attempts = static_cast<long long>(params.sample_attempts_per_node) * n_nodes;
  for (long long k = 0; k < attempts && static_cast<int>(g.nodes.size()) < n_nodes; ++k) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = rng.uniform(box.min[a], box.max[a]);
    if (cmap.is_clear(p)) g.nodes.push_back(p);
  }
  if (g.nodes.size() < 2) throw Error("build_graph: fewer than 2 nodes could be placed in free space");

  std::uint64_t pair_index = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < g.nodes.size(); ++j, ++pair_index) {
      const Vec3& a = g.nodes[i];
      const Vec3& b = g.nodes[j];
      if ((a - b).norm() > params.cutoff) continue;
      GraphEdge e;
      e.u = static_cast<int>(i);
      e.v = static_cast<int>(j);
      if (params.try_straight_line && cmap.segment_clear(a, b)) {
        e.path = {a, b};
      } else {
        auto plan = rrt_star(cmap, a, b, params.rrt, derive_seed(seed, "graph-edge", pair_index));
        if (!plan) continue;
        e.path = std::move(plan->points);
      }
      e.cost = polyline_length(e.path);
      g.edges.push_back(std::move(e));
    }
  }
  return g;
}

inline TrajectoryGraph build_graph(const OccupancyGrid& grid, int n_nodes, const GraphParams& params,
                                   std::uint64_t seed) {
  if (n_nodes < 2) throw Error("build_graph: need at least 2 nodes");
  const ClearanceMap cmap(grid, params.rrt.clearance);
  return build_graph(cmap, n_nodes, params, seed);
}

struct GraphLoop {
  std::vector<int> nodes;  // closed: front() == back()
  std::vector<Vec3> path;  // concatenated edge polylines, front() == back()
};

/// Non-backtracking random walk on the 2-core of the graph until a node
/// repeats; the closed sub-walk between the two visits is the loop.
inline std::optional<GraphLoop> sample_loop(const TrajectoryGraph& g, std::uint64_t seed) {
  const auto inc = g.incidence();
  const std::size_t n = g.nodes.size();
  std::vector<int> degree(n);
  std::vector<char> removed_edge(g.edges.size(), 0);
  std::vector<char> alive(n, 1);
  for (std::size_t v = 0; v < n; ++v) degree[v] = static_cast<int>(inc[v].size());
  std::vector<int> queue;
  for (std::size_t v = 0; v < n; ++v)
    if (degree[v] <= 1) queue.push_back(static_cast<int>(v));
  while (!queue.empty()) {
    const int v = queue.back();
    queue.pop_back();
    if (!alive[v]) continue;
    alive[v] = 0;
    for (int e : inc[v]) {
      if (removed_edge[e]) continue;
      removed_edge[e] = 1;
      const int w = g.edges[e].u == v ? g.edges[e].v : g.edges[e].u;
      if (--degree[w] <= 1 && alive[w]) queue.push_back(w);
    }
  }
  std::vector<int> core;
  for (std::size_t v = 0; v < n; ++v)
    if (alive[v]) core.push_back(static_cast<int>(v));
  if (core.empty()) return std::nullopt;

  Rng rng(derive_seed(seed, "sample-loop"));
  int cur = core[rng.index(core.size())];
  std::vector<int> walk_nodes{cur};
  std::vector<int> walk_edges;
  std::vector<int> first_visit(n, -1);
  first_visit[cur] = 0;
  int prev_edge = -1;
  while (true) {
    std::vector<int> options;
    for (int e : inc[cur])
      if (!removed_edge[e] && e != prev_edge) options.push_back(e);
    // 2-core nodes have degree >= 2, so options is never empty.
    const int e = options[rng.index(options.size())];
    const int next = g.edges[e].u == cur ? g.edges[e].v : g.edges[e].u;
    walk_edges.push_back(e);
    walk_nodes.push_back(next);
    prev_edge = e;
    cur = next;
    if (first_visit[cur] >= 0) break;
    first_visit[cur] = static_cast<int>(walk_nodes.size()) - 1;
  }

  GraphLoop loop;
  const int k0 = first_visit[cur];
  loop.nodes.assign(walk_nodes.begin() + k0, walk_nodes.end());
  for (std::size_t k = k0; k < walk_edges.size(); ++k) {
    const GraphEdge& e = g.edges[walk_edges[k]];
    std::vector<Vec3> piece = e.path;
    if (e.u != walk_nodes[k]) std::reverse(piece.begin(), piece.end());
    const std::size_t skip = loop.path.empty() ? 0 : 1;
    loop.path.insert(loop.path.end(), piece.begin() + skip, piece.end());
  }
  return loop;
}

// ---------------------------------------------------------------------------
// Smoothing

struct SmoothParams {
  int samples_per_segment = 8;
  double clearance = 0.5;
};

namespace detail {

/// Centripetal Catmull-Rom point between p1 and p2 at fraction s in [0, 1].
inline Vec3 catmull_rom(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3, double s) {
  auto knot = [](const Vec3& a, const Vec3& b) { return std::max(std::sqrt((b - a).norm()), 1e-9); };
  const double t0 = 0.0;
  const double t1 = t0 + knot(p0, p1);
  const double t2 = t1 + knot(p1, p2);
  const double t3 = t2 + knot(p2, p3);
  const double t = t1 + s * (t2 - t1);
  const Vec3 a1 = (t1 - t) / (t1 - t0) * p0 + (t - t0) / (t1 - t0) * p1;
  const Vec3 a2 = (t2 - t) / (t2 - t1) * p1 + (t - t1) / (t2 - t1) * p2;
  const Vec3 a3 = (t3 - t) / (t3 - t2) * p2 + (t - t2) / (t3 - t2) * p3;
  const Vec3 b1 = (t2 - t) / (t2 - t0) * a1 + (t - t0) / (t2 - t0) * a2;
  const Vec3 b2 = (t3 - t) / (t3 - t1) * a2 + (t - t1) / (t3 - t1) * a3;
  return (t2 - t) / (t2 - t1) * b1 + (t - t1) / (t2 - t1) * b2;
}

/// `count` points after `from` at equal arc-length spacing along a dense curve.
inline void resample_uniform(const std::vector<Vec3>& dense, int count, std::vector<Vec3>& out) {
  std::vector<double> cum(dense.size(), 0.0);
  for (std::size_t i = 1; i < dense.size(); ++i) cum[i] = cum[i - 1] + (dense[i] - dense[i - 1]).norm();
  const double total = cum.back();
  std::size_t j = 1;
  for (int k = 1; k <= count; ++k) {
    const double target = total * k / count;
    while (j + 1 < dense.size() && cum[j] < target) ++j;
    const double span = cum[j] - cum[j - 1];
    const double a = span > 0.0 ? (target - cum[j - 1]) / span : 1.0;
    out.push_back(dense[j - 1] + std::clamp(a, 0.0, 1.0) * (dense[j] - dense[j - 1]));
  }
  out.back() = dense.back();
}

}  // namespace detail

/// Catmull-Rom smoothing through the path endpoints and the midpoints of its
/// segments, resampled uniformly by arc length. Any spline piece that is not
/// collision-free falls back to the original polyline between the same points.
inline std::vector<Vec3> smooth_path(const ClearanceMap& cmap, const std::vector<Vec3>& polyline,
                                     const SmoothParams& params) {
  std::vector<Vec3> pts;
  for (const auto& p : polyline)
    if (pts.empty() || (p - pts.back()).norm() > 1e-12) pts.push_back(p);
  if (pts.size() < 2) return pts;

  // Control points and the original sub-polyline that joins each consecutive pair.
  std::vector<Vec3> ctrl{pts.front()};
  std::vector<std::vector<Vec3>> original;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec3 mid = 0.5 * (pts[i] + pts[i + 1]);
    if (i == 0) original.push_back({pts[0], mid});
    else original.push_back({ctrl.back(), pts[i], mid});
    ctrl.push_back(mid);
  }
  original.push_back({ctrl.back(), pts.back()});
  ctrl.push_back(pts.back());

  const int per = std::max(1, params.samples_per_segment);
  const std::size_t nc = ctrl.size();
  std::vector<Vec3> out{ctrl.front()};
  std::vector<Vec3> dense;
  std::vector<Vec3> piece;
  for (std::size_t j = 0; j + 1 < nc; ++j) {
    const Vec3 p1 = ctrl[j];
    const Vec3 p2 = ctrl[j + 1];
    const Vec3 p0 = j > 0 ? ctrl[j - 1] : Vec3(2.0 * p1 - p2);
    const Vec3 p3 = j + 2 < nc ? ctrl[j + 2] : Vec3(2.0 * p2 - p1);
    dense.clear();
    constexpr int kDense = 64;
    for (int k = 0; k <= kDense; ++k) dense.push_back(detail::catmull_rom(p0, p1, p2, p3, static_cast<double>(k) / kDense));
    dense.front() = p1;
    dense.back() = p2;
    piece.clear();
    detail::resample_uniform(dense, per, piece);

    bool clear = cmap.segment_clear(out.back(), piece.front());
    for (std::size_t k = 0; clear && k + 1 < piece.size(); ++k) clear = cmap.segment_clear(piece[k], piece[k + 1]);
    if (clear) {
      out.insert(out.end(), piece.begin(), piece.end());
      continue;
    }
    // Fallback: the original straight pieces, each split evenly.
    const auto& orig = original[j];
    const int sub = std::max(1, per / static_cast<int>(orig.size() - 1));
    for (std::size_t k = 0; k + 1 < orig.size(); ++k)
      for (int s = 1; s <= sub; ++s)
        out.push_back(orig[k] + (orig[k + 1] - orig[k]) * (static_cast<double>(s) / sub));
    out.back() = p2;
  }
  out.front() = pts.front();
  out.back() = pts.back();
  return out;
}

inline std::vector<Vec3> smooth_path(const OccupancyGrid& grid, const std::vector<Vec3>& polyline,
                                     const SmoothParams& params) {
  const ClearanceMap cmap(grid, params.clearance);
  return smooth_path(cmap, polyline, params);
}

// ---------------------------------------------------------------------------
// Pose randomization

enum class MotionDof { kTransYaw, kSixDof };

struct DifficultyProfile {
  std::string name;
  MotionDof dof = MotionDof::kTransYaw;
  double max_trans = 0.2;      // meters per frame
  double max_angle_deg = 3.0;  // degrees per frame, per axis

  static DifficultyProfile easy() { return {"easy", MotionDof::kTransYaw, 0.2, 3.0}; }
  static DifficultyProfile medium() { return {"medium", MotionDof::kSixDof, 0.3, 5.0}; }
  static DifficultyProfile hard() { return {"hard", MotionDof::kSixDof, 0.5, 10.0}; }

  static DifficultyProfile by_name(const std::string& n) {
    if (n == "easy") return easy();
    if (n == "medium") return medium();
    if (n == "hard") return hard();
    throw Error("unknown difficulty '" + n + "' (expected easy, medium or hard)");
  }
};

struct RandomizeOptions {
  /// When set, every emitted position must be clear in this map; jittered
  /// candidates that are not fall back to the path itself.
  const ClearanceMap* clearance = nullptr;
  /// Lateral/vertical offset bound from the path (6-DoF only). Capped at
  /// 0.7 * max_trans so a fallback to the path keeps the step bounded.
  double max_offset = 0.25;
  /// Fraction of the heading error fed back into the yaw increment.
  double heading_gain = 0.5;
  double pitch_limit_deg = 45.0;
  double roll_limit_deg = 45.0;
  std::optional<YawPitchRoll> initial;  // defaults: yaw along the path, level
  /// Optional screen on consecutive poses. A step whose cost exceeds the
  /// limit is redrawn, up to step_attempts draws; the cheapest draw is kept.
  std::function<double(const Pose&, const Pose&)> step_cost;
  double step_cost_limit = 0.0;
  int step_attempts = 32;
};

/// Per-frame increments in the local path frame (forward along the path,
/// lateral offset change, vertical offset change) and the applied Euler deltas.
struct FrameIncrement {
  double forward = 0.0;
  double lateral = 0.0;
  double vertical = 0.0;
  double dyaw = 0.0;
  double dpitch = 0.0;
  double droll = 0.0;
};

struct RandomizedTrajectory {
  std::vector<Pose> poses;
  std::vector<FrameIncrement> increments;  // increments[k] leads from frame k to k+1
};

namespace detail {

class PathCursor {
 public:
  explicit PathCursor(const std::vector<Vec3>& path) : path_(path) {
    cum_.assign(path.size(), 0.0);
    for (std::size_t i = 1; i < path.size(); ++i) cum_[i] = cum_[i - 1] + (path[i] - path[i - 1]).norm();
    closed_ = path.size() > 2 && (path.front() - path.back()).norm() < 1e-9;
  }

  double length() const { return cum_.back(); }

  /// Position and travel direction at cumulative distance s. Closed paths
  /// wrap around; open paths are traversed back and forth.
  std::pair<Vec3, Vec3> at(double s) const {
    const double len = length();
    if (len <= 0.0) return {path_.front(), Vec3::UnitX()};
    bool reversed = false;
    if (closed_) {
      s = std::fmod(s, len);
    } else {
      s = std::fmod(s, 2.0 * len);
      if (s > len) {
        s = 2.0 * len - s;
        reversed = true;
      }
    }
    auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    std::size_t j = std::clamp<std::size_t>(static_cast<std::size_t>(it - cum_.begin()), 1, cum_.size() - 1);
    while (j + 1 < cum_.size() && cum_[j] - cum_[j - 1] <= 0.0) ++j;
    const double span = cum_[j] - cum_[j - 1];
    const double a = span > 0.0 ? std::clamp((s - cum_[j - 1]) / span, 0.0, 1.0) : 0.0;
    const Vec3 p = path_[j - 1] + a * (path_[j] - path_[j - 1]);
    Vec3 dir = span > 0.0 ? Vec3((path_[j] - path_[j - 1]) / span) : Vec3::UnitX();
    if (reversed) dir = -dir;
    return {p, dir};
  }

 private:
  const std::vector<Vec3>& path_;
  std::vector<double> cum_;
  bool closed_ = false;
};

}  // namespace detail

inline RandomizedTrajectory randomize_poses(const std::vector<Vec3>& polyline,
                                            const DifficultyProfile& profile, int n_frames,
                                            std::uint64_t seed, const RandomizeOptions& opts = {}) {
  if (polyline.empty()) throw Error("randomize_poses: empty path");
  if (n_frames <= 0) return {};
  const detail::PathCursor cursor(polyline);
  Rng rng(derive_seed(seed, "randomize-poses"));
  const double m = profile.max_trans;
  const double a = deg2rad(profile.max_angle_deg);
  const bool six = profile.dof == MotionDof::kSixDof;
  const double max_off = six ? std::min(opts.max_offset, 0.7 * m) : 0.0;
  const double pitch_lim = deg2rad(opts.pitch_limit_deg);
  const double roll_lim = deg2rad(opts.roll_limit_deg);
  const double step_lim = std::sqrt(3.0) * m;

  auto clear = [&](const Vec3& p) { return !opts.clearance || opts.clearance->is_clear(p); };

  struct State {
    double s = 0.0;
    double off_l = 0.0;
    double off_v = 0.0;
    YawPitchRoll ang;
    Vec3 pos = Vec3::Zero();
  };

  State st;
  const auto [p0, t0] = cursor.at(0.0);
  if (opts.initial) {
    st.ang = *opts.initial;
  } else {
    st.ang.yaw = std::atan2(t0.y(), t0.x());
  }
  st.pos = p0;

  // One random step from `cur`; every draw respects the profile bounds.
  auto draw = [&](const State& cur, FrameIncrement& inc) {
    State nx = cur;
    inc = {};
    inc.forward = cursor.length() > 0.0 ? rng.uniform_open_closed(m) : 0.0;
    nx.s += inc.forward;
    const auto [base, tangent] = cursor.at(nx.s);
    nx.pos = base;
    if (six) {
      Vec3 lat = Vec3::UnitZ().cross(tangent);
      if (lat.norm() < 1e-9) lat = Vec3::UnitY();
      lat.normalize();
      const Vec3 up = Vec3::UnitZ();
      const double nl = std::clamp(cur.off_l + rng.uniform(-m, m), -max_off, max_off);
      const double nv = std::clamp(cur.off_v + rng.uniform(-m, m), -max_off, max_off);
      const Vec3 cand = base + nl * lat + nv * up;
      const Vec3 keep = base + cur.off_l * lat + cur.off_v * up;
      if (clear(cand) && (cand - cur.pos).norm() <= step_lim) {
        nx.pos = cand;
        inc.lateral = nl - cur.off_l;
        inc.vertical = nv - cur.off_v;
        nx.off_l = nl;
        nx.off_v = nv;
      } else if (clear(keep) && (keep - cur.pos).norm() <= step_lim) {
        nx.pos = keep;
      } else {
        inc.lateral = -cur.off_l;
        inc.vertical = -cur.off_v;
        nx.off_l = nx.off_v = 0.0;
      }
    }
    const double heading = std::atan2(tangent.y(), tangent.x());
    const double steer = std::clamp(opts.heading_gain * wrap_angle(heading - cur.ang.yaw), -a, a);
    inc.dyaw = std::clamp(steer + rng.uniform(-a, a), -a, a);
    nx.ang.yaw = wrap_angle(cur.ang.yaw + inc.dyaw);
    if (six) {
      const double np = std::clamp(cur.ang.pitch + std::clamp(-0.2 * cur.ang.pitch + rng.uniform(-a, a), -a, a),
                                   -pitch_lim, pitch_lim);
      const double nr = std::clamp(cur.ang.roll + std::clamp(-0.2 * cur.ang.roll + rng.uniform(-a, a), -a, a),
                                   -roll_lim, roll_lim);
      inc.dpitch = np - cur.ang.pitch;
      inc.droll = nr - cur.ang.roll;
      nx.ang.pitch = np;
      nx.ang.roll = nr;
    }
    return nx;
  };
  auto pose_of = [](const State& x) { return camera_pose_from_ypr(x.pos, x.ang.yaw, x.ang.pitch, x.ang.roll); };

  RandomizedTrajectory out;
  out.poses.reserve(n_frames);
  out.poses.push_back(pose_of(st));
  const int attempts = opts.step_cost ? std::max(1, opts.step_attempts) : 1;
  for (int k = 1; k < n_frames; ++k) {
    State best;
    FrameIncrement best_inc;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int t = 0; t < attempts; ++t) {
      FrameIncrement inc;
      const State nx = draw(st, inc);
      const double cost = opts.step_cost ? opts.step_cost(out.poses.back(), pose_of(nx)) : 0.0;
      if (t == 0 || cost < best_cost) {
        best = nx;
        best_inc = inc;
        best_cost = cost;
      }
      if (best_cost <= opts.step_cost_limit) break;
    }
    st = best;
    out.poses.push_back(pose_of(st));
    out.increments.push_back(best_inc);
  }
  return out;
}

}  // namespace slamgen

#endif  // SLAMGEN_PLANNER_HPP
