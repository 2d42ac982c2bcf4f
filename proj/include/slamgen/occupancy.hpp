#ifndef SLAMGEN_OCCUPANCY_HPP
#define SLAMGEN_OCCUPANCY_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "slamgen/error.hpp"
#include "slamgen/geom.hpp"
#include "slamgen/scene.hpp"

namespace slamgen {

using Index3 = Eigen::Vector3i;

enum class CellState : std::uint8_t { kUnknown = 0, kFree = 1, kOccupied = 2 };

/// Dense 3-D voxel map. Cells only ever move out of kUnknown; once free or
/// occupied a cell keeps its state.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(const Vec3& origin, double resolution, const Index3& dims)
      : origin_(origin), resolution_(resolution), dims_(dims) {
    if (!(resolution > 0.0)) throw Error("grid: resolution must be positive");
    if ((dims.array() <= 0).any()) throw Error("grid: dims must be positive");
    cells_.assign(static_cast<std::size_t>(dims.x()) * dims.y() * dims.z(),
                  static_cast<std::uint8_t>(CellState::kUnknown));
  }

  /// Grid covering a box; the upper side is rounded outward to whole voxels.
  static OccupancyGrid covering(const Aabb& box, double resolution) {
    const Vec3 size = box.size() / resolution;
    const Index3 dims(static_cast<int>(std::ceil(size.x() - 1e-9)),
                      static_cast<int>(std::ceil(size.y() - 1e-9)),
                      static_cast<int>(std::ceil(size.z() - 1e-9)));
    return {box.min, resolution, dims};
  }

  const Vec3& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Index3& dims() const { return dims_; }
  std::size_t size() const { return cells_.size(); }
  const std::vector<std::uint8_t>& raw() const { return cells_; }

  /// Replaces all cells; used by deserialization.
  void assign_raw(std::vector<std::uint8_t> cells) {
    if (cells.size() != cells_.size()) throw Error("grid: raw cell count mismatch");
    for (auto c : cells)
      if (c > 2) throw Error("grid: invalid cell state " + std::to_string(c));
    cells_ = std::move(cells);
  }

  Aabb bounds() const {
    return {origin_, origin_ + resolution_ * dims_.cast<double>()};
  }

  bool in_bounds(const Index3& i) const {
    return (i.array() >= 0).all() && (i.array() < dims_.array()).all();
  }

  std::size_t linear(const Index3& i) const {
    return (static_cast<std::size_t>(i.z()) * dims_.y() + i.y()) * dims_.x() + i.x();
  }
  Index3 unlinear(std::size_t n) const {
    const int x = static_cast<int>(n % dims_.x());
    n /= dims_.x();
    const int y = static_cast<int>(n % dims_.y());
    return {x, y, static_cast<int>(n / dims_.y())};
  }

  /// Voxel containing p (floor semantics), unchecked against bounds.
  Index3 voxel_of(const Vec3& p) const {
    const Vec3 g = (p - origin_) / resolution_;
    return {static_cast<int>(std::floor(g.x())), static_cast<int>(std::floor(g.y())),
            static_cast<int>(std::floor(g.z()))};
  }

  Vec3 center(const Index3& i) const {
    return origin_ + resolution_ * (i.cast<double>() + Vec3::Constant(0.5));
  }

  CellState state(const Index3& i) const { return static_cast<CellState>(cells_[linear(i)]); }
  CellState state(std::size_t n) const { return static_cast<CellState>(cells_[n]); }

  /// Out-of-grid reads as unknown.
  CellState state_or_unknown(const Index3& i) const {
    return in_bounds(i) ? state(i) : CellState::kUnknown;
  }

  /// Sets an unknown cell; returns false (and leaves the cell) otherwise.
  bool mark(const Index3& i, CellState s) {
    auto& c = cells_[linear(i)];
    if (c != static_cast<std::uint8_t>(CellState::kUnknown)) return false;
    c = static_cast<std::uint8_t>(s);
    return true;
  }

  std::size_t count(CellState s) const {
    return static_cast<std::size_t>(
        std::count(cells_.begin(), cells_.end(), static_cast<std::uint8_t>(s)));
  }

  bool operator==(const OccupancyGrid& o) const {
    return origin_ == o.origin_ && resolution_ == o.resolution_ && dims_ == o.dims_ &&
           cells_ == o.cells_;
  }

 private:
  Vec3 origin_ = Vec3::Zero();
  double resolution_ = 0.25;
  Index3 dims_ = Index3::Zero();
  std::vector<std::uint8_t> cells_;
};

/// Visits, in order, every voxel the segment origin + t*dir, t in [0, t_end),
/// passes through (3-D digital differential analyzer). `visit(index, t_enter)`
/// returns false to stop early. Traversal stops at the grid boundary.
template <typename Visit>
void traverse_voxels(const OccupancyGrid& grid, const Vec3& origin, const Vec3& dir,
                     double t_end, Visit&& visit) {
  const double res = grid.resolution();
  const Vec3 g = (origin - grid.origin()) / res;
  Index3 idx(static_cast<int>(std::floor(g.x())), static_cast<int>(std::floor(g.y())),
             static_cast<int>(std::floor(g.z())));
  if (!grid.in_bounds(idx)) return;
  int step[3];
  double t_max[3];
  double t_delta[3];
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > 0.0) {
      step[a] = 1;
      t_max[a] = (idx[a] + 1 - g[a]) * res / dir[a];
      t_delta[a] = res / dir[a];
    } else if (dir[a] < 0.0) {
      step[a] = -1;
      t_max[a] = (g[a] - idx[a]) * res / -dir[a];
      t_delta[a] = res / -dir[a];
    } else {
      step[a] = 0;
      t_max[a] = std::numeric_limits<double>::infinity();
      t_delta[a] = std::numeric_limits<double>::infinity();
    }
  }
  double t_enter = 0.0;
  while (true) {
    if (!visit(static_cast<const Index3&>(idx), t_enter)) return;
    int a = 0;
    if (t_max[1] < t_max[a]) a = 1;
    if (t_max[2] < t_max[a]) a = 2;
    if (!(t_max[a] < t_end)) return;
    t_enter = t_max[a];
    idx[a] += step[a];
    if (idx[a] < 0 || idx[a] >= grid.dims()[a]) return;
    t_max[a] += t_delta[a];
  }
}

/// Clearance queries against a grid snapshot. A point has clearance c when
/// every voxel whose box lies closer than c to the point is free; unknown,
/// occupied and out-of-grid voxels all block.
class ClearanceMap {
 public:
  ClearanceMap(const OccupancyGrid& grid, double clearance)
      : grid_(&grid),
        clearance_(clearance),
        point_(grid, clearance),
        // A segment point between two samples at most `spacing` apart is at
        // least c from any obstacle point when both samples are at least
        // hypot(c, spacing / 2) from it.
        sample_(grid, std::hypot(clearance, 0.25 * grid.resolution())) {}

  const OccupancyGrid& grid() const { return *grid_; }
  double clearance() const { return clearance_; }

  bool is_clear(const Vec3& p) const { return point_.clear(*grid_, p); }

  /// Samples the segment at half-voxel spacing, endpoints included. Samples
  /// are held to the inflated clearance so the whole segment keeps c.
  bool segment_clear(const Vec3& a, const Vec3& b) const {
    const double len = (b - a).norm();
    const double spacing = 0.5 * grid_->resolution();
    const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    for (int i = 0; i <= n; ++i) {
      if (!sample_.clear(*grid_, a + (b - a) * (static_cast<double>(i) / n))) return false;
    }
    return true;
  }

  bool polyline_clear(const std::vector<Vec3>& path) const {
    if (path.size() == 1) return is_clear(path.front());
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
      if (!segment_clear(path[i], path[i + 1])) return false;
    return true;
  }

  /// Voxel centers that are themselves clear points.
  bool center_clear(const Index3& v) const {
    return grid_->in_bounds(v) && is_clear(grid_->center(v));
  }

 private:
  struct Level {
    double c = 0.0;
    int reach = 0;
    std::vector<std::uint8_t> fully_clear;

    Level(const OccupancyGrid& grid, double clearance) : c(clearance) {
      const double res = grid.resolution();
      reach = static_cast<int>(std::ceil(clearance / res - 1e-12));
      // Offsets whose voxel box comes closer than c to some point of the
      // center voxel (box-to-box distance).
      std::vector<Index3> kernel;
      for (int dz = -reach - 1; dz <= reach + 1; ++dz)
        for (int dy = -reach - 1; dy <= reach + 1; ++dy)
          for (int dx = -reach - 1; dx <= reach + 1; ++dx) {
            auto gap = [&](int d) { return std::max(0, std::abs(d) - 1) * res; };
            const double d2 = gap(dx) * gap(dx) + gap(dy) * gap(dy) + gap(dz) * gap(dz);
            if (d2 < c * c || (dx == 0 && dy == 0 && dz == 0)) kernel.emplace_back(dx, dy, dz);
          }
      const auto n = grid.size();
      fully_clear.assign(n, 0);
      for (std::size_t k = 0; k < n; ++k) {
        if (grid.state(k) != CellState::kFree) continue;
        const Index3 v = grid.unlinear(k);
        bool ok = true;
        for (const auto& o : kernel) {
          const Index3 u = v + o;
          if (!grid.in_bounds(u) || grid.state(u) != CellState::kFree) {
            ok = false;
            break;
          }
        }
        fully_clear[k] = ok ? 1 : 0;
      }
    }

    bool clear(const OccupancyGrid& g, const Vec3& p) const {
      const Index3 v = g.voxel_of(p);
      if (!g.in_bounds(v)) return false;
      if (fully_clear[g.linear(v)]) return true;
      if (g.state(v) != CellState::kFree) return false;
      const double res = g.resolution();
      for (int dz = -reach; dz <= reach; ++dz)
        for (int dy = -reach; dy <= reach; ++dy)
          for (int dx = -reach; dx <= reach; ++dx) {
            const Index3 u = v + Index3(dx, dy, dz);
            if (g.in_bounds(u) && g.state(u) == CellState::kFree) continue;
            const Vec3 lo = g.origin() + res * u.cast<double>();
            const Vec3 hi = lo + Vec3::Constant(res);
            const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(Vec3::Zero());
            if (d.squaredNorm() < c * c) return false;
          }
      return true;
    }
  };

  const OccupancyGrid* grid_;
  double clearance_;
  Level point_;
  Level sample_;
};

inline double polyline_length(const std::vector<Vec3>& path) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) s += (path[i + 1] - path[i]).norm();
  return s;
}

}  // namespace slamgen

#endif  // SLAMGEN_OCCUPANCY_HPP
