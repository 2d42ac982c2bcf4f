#ifndef SLAMGEN_SCENE_HPP
#define SLAMGEN_SCENE_HPP

// Analytic scene made of spheres, axis-aligned boxes, planes and triangles,
// each carrying an object id and a procedural albedo texture.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "slamgen/error.hpp"
#include "slamgen/geom.hpp"
#include "slamgen/random.hpp"

namespace slamgen {

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 size() const { return max - min; }

  /// Parametric interval [t0, t1] of the ray inside the box, if any.
  std::optional<std::pair<double, double>> clip(const Vec3& o, const Vec3& d) const {
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
      if (d[i] == 0.0) {
        if (o[i] < min[i] || o[i] > max[i]) return std::nullopt;
        continue;
      }
      double a = (min[i] - o[i]) / d[i];
      double b = (max[i] - o[i]) / d[i];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
    }
    if (t0 > t1) return std::nullopt;
    return std::make_pair(t0, t1);
  }
};

struct Texture {
  enum class Kind { kNoise, kChecker };
  Kind kind = Kind::kNoise;
  double scale = 0.5;  // meters per noise cell / checker square
  std::uint64_t seed = 0;
  Vec3 color_a{0.8, 0.8, 0.8};
  Vec3 color_b{0.2, 0.2, 0.2};
};

enum class Shape { kSphere, kBox, kPlane, kTriangle };

/// Geometry parameters by shape:
///   sphere    a = center, radius
///   box       a = min corner, b = max corner
///   plane     a = point on plane, b = unit normal
///   triangle  a, b, c = vertices
struct Primitive {
  Shape shape = Shape::kSphere;
  int id = 1;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  Vec3 c = Vec3::Zero();
  double radius = 0.0;
  Texture texture;

  static Primitive sphere(int id, const Vec3& center, double radius, Texture tex = {}) {
    Primitive p;
    p.shape = Shape::kSphere;
    p.id = id;
    p.a = center;
    p.radius = radius;
    p.texture = tex;
    return p;
  }
  static Primitive box(int id, const Vec3& lo, const Vec3& hi, Texture tex = {}) {
    Primitive p;
    p.shape = Shape::kBox;
    p.id = id;
    p.a = lo.cwiseMin(hi);
    p.b = lo.cwiseMax(hi);
    p.texture = tex;
    return p;
  }
  static Primitive plane(int id, const Vec3& point, const Vec3& normal, Texture tex = {}) {
    Primitive p;
    p.shape = Shape::kPlane;
    p.id = id;
    p.a = point;
    p.b = normal.normalized();
    p.texture = tex;
    return p;
  }
  static Primitive triangle(int id, const Vec3& v0, const Vec3& v1, const Vec3& v2,
                            Texture tex = {}) {
    Primitive p;
    p.shape = Shape::kTriangle;
    p.id = id;
    p.a = v0;
    p.b = v1;
    p.c = v2;
    p.texture = tex;
    return p;
  }

  /// True when p lies strictly inside a solid primitive (sphere or box).
  bool contains(const Vec3& p) const {
    switch (shape) {
      case Shape::kSphere: return (p - a).norm() < radius;
      case Shape::kBox:
        return (p.array() > a.array()).all() && (p.array() < b.array()).all();
      default: return false;
    }
  }
};

struct Hit {
  double distance = 0.0;
  int object_id = 0;
  Vec3 normal = Vec3::UnitZ();
};

namespace detail {

inline bool intersect(const Primitive& p, const Vec3& o, const Vec3& d, double t_min,
                      double t_max, Hit& hit) {
  switch (p.shape) {
    case Shape::kSphere: {
      const Vec3 oc = o - p.a;
      const double b = oc.dot(d);
      const double c = oc.squaredNorm() - p.radius * p.radius;
      const double disc = b * b - c;
      if (disc < 0.0) return false;
      const double s = std::sqrt(disc);
      double t = -b - s;
      if (t <= t_min) t = -b + s;
      if (t <= t_min || t >= t_max) return false;
      hit.distance = t;
      hit.normal = (o + t * d - p.a).normalized();
      return true;
    }
    case Shape::kBox: {
      double t0 = -std::numeric_limits<double>::infinity();
      double t1 = std::numeric_limits<double>::infinity();
      int axis0 = 0;
      int axis1 = 0;
      for (int i = 0; i < 3; ++i) {
        if (d[i] == 0.0) {
          if (o[i] < p.a[i] || o[i] > p.b[i]) return false;
          continue;
        }
        double a = (p.a[i] - o[i]) / d[i];
        double b = (p.b[i] - o[i]) / d[i];
        if (a > b) std::swap(a, b);
        if (a > t0) {
          t0 = a;
          axis0 = i;
        }
        if (b < t1) {
          t1 = b;
          axis1 = i;
        }
      }
      if (t0 > t1) return false;
      double t = t0;
      int axis = axis0;
      if (t <= t_min) {
        t = t1;
        axis = axis1;
      }
      if (t <= t_min || t >= t_max) return false;
      hit.distance = t;
      hit.normal = Vec3::Zero();
      hit.normal[axis] = d[axis] > 0.0 ? (t == t0 ? -1.0 : 1.0) : (t == t0 ? 1.0 : -1.0);
      return true;
    }
    case Shape::kPlane: {
      const double denom = p.b.dot(d);
      if (std::abs(denom) < 1e-15) return false;
      const double t = p.b.dot(p.a - o) / denom;
      if (t <= t_min || t >= t_max) return false;
      hit.distance = t;
      hit.normal = p.b;
      return true;
    }
    case Shape::kTriangle: {
      // Moller-Trumbore
      const Vec3 e1 = p.b - p.a;
      const Vec3 e2 = p.c - p.a;
      const Vec3 pv = d.cross(e2);
      const double det = e1.dot(pv);
      if (std::abs(det) < 1e-15) return false;
      const double inv = 1.0 / det;
      const Vec3 tv = o - p.a;
      const double u = tv.dot(pv) * inv;
      if (u < 0.0 || u > 1.0) return false;
      const Vec3 qv = tv.cross(e1);
      const double v = d.dot(qv) * inv;
      if (v < 0.0 || u + v > 1.0) return false;
      const double t = e2.dot(qv) * inv;
      if (t <= t_min || t >= t_max) return false;
      hit.distance = t;
      hit.normal = e1.cross(e2).normalized();
      return true;
    }
  }
  return false;
}

inline double lattice_value(std::uint64_t seed, std::int64_t x, std::int64_t y, std::int64_t z) {
  std::uint64_t h = seed;
  h = splitmix64(h ^ static_cast<std::uint64_t>(x) * 0x8da6b343ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(y) * 0xd8163841ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(z) * 0xcb1ab31fULL);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

/// Smooth 3-D value noise in [0, 1].
inline double value_noise(std::uint64_t seed, const Vec3& p) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const auto iz = static_cast<std::int64_t>(fz);
  const double tx = smooth(p.x() - fx), ty = smooth(p.y() - fy), tz = smooth(p.z() - fz);
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty) * (dz ? tz : 1.0 - tz);
        acc += w * lattice_value(seed, ix + dx, iy + dy, iz + dz);
      }
  return acc;
}

}  // namespace detail

/// Albedo of a texture at world point p, components in [0, 1].
inline Vec3 albedo(const Texture& tex, const Vec3& p) {
  const Vec3 q = p / tex.scale;
  const double n = 0.65 * detail::value_noise(tex.seed, q) +
                   0.35 * detail::value_noise(tex.seed ^ 0x5bd1e995ULL, 2.0 * q);
  if (tex.kind == Texture::Kind::kChecker) {
    const auto parity = static_cast<std::int64_t>(std::floor(q.x()) + std::floor(q.y()) +
                                                  std::floor(q.z()));
    const Vec3& base = (parity & 1) ? tex.color_a : tex.color_b;
    return base * (0.6 + 0.4 * n);
  }
  return tex.color_a + n * (tex.color_b - tex.color_a);
}

/// Fixed directional light used for Lambertian shading.
inline Vec3 light_direction() { return Vec3(0.3, 0.5, 0.8).normalized(); }
inline constexpr double kAmbient = 0.35;

class Scene {
 public:
  Scene() = default;
  explicit Scene(Aabb bounds) : bounds_(bounds) {}

  const Aabb& bounds() const { return bounds_; }
  void set_bounds(const Aabb& b) { bounds_ = b; }
  const std::vector<Primitive>& primitives() const { return primitives_; }

  void add(const Primitive& p) {
    if (p.id <= 0 || p.id > 65535) throw Error("scene: object id must be in [1, 65535]");
    for (const auto& q : primitives_)
      if (q.id == p.id) throw Error("scene: duplicate object id " + std::to_string(p.id));
    primitives_.push_back(p);
  }

  int next_id() const {
    int m = 0;
    for (const auto& p : primitives_) m = std::max(m, p.id);
    return m + 1;
  }

  /// Checks unique ids and that every primitive touches the bounds box.
  void validate() const {
    std::set<int> ids;
    for (const auto& p : primitives_) {
      if (!ids.insert(p.id).second) throw Error("scene: duplicate object id " + std::to_string(p.id));
      if (!intersects_bounds(p))
        throw Error("scene: primitive " + std::to_string(p.id) + " lies outside the bounds");
    }
    if (!(bounds_.max.array() > bounds_.min.array()).all())
      throw Error("scene: empty bounds");
  }

  /// Nearest intersection with positive distance inside the bounds box.
  std::optional<Hit> ray_cast(const Vec3& origin, const Vec3& direction) const {
    const auto span = bounds_.clip(origin, direction);
    if (!span || span->second <= 0.0) return std::nullopt;
    constexpr double kEps = 1e-9;
    double t_max = span->second;
    Hit best;
    bool found = false;
    Hit h;
    for (const auto& p : primitives_) {
      if (detail::intersect(p, origin, direction, kEps, t_max, h)) {
        best = h;
        best.object_id = p.id;
        t_max = h.distance;
        found = true;
      }
    }
    if (!found) return std::nullopt;
    return best;
  }

  /// Shaded color in [0, 1] at a hit.
  Vec3 shade(const Vec3& origin, const Vec3& direction, const Hit& hit) const {
    const Primitive* prim = find(hit.object_id);
    const Vec3 p = origin + hit.distance * direction;
    const Vec3 a = prim ? albedo(prim->texture, p) : Vec3(0.5, 0.5, 0.5);
    const double lambert = std::abs(hit.normal.dot(light_direction()));
    return a * (kAmbient + (1.0 - kAmbient) * lambert);
  }

  const Primitive* find(int id) const {
    for (const auto& p : primitives_)
      if (p.id == id) return &p;
    return nullptr;
  }

  /// True when p is strictly inside a solid primitive or outside the bounds.
  bool inside_obstacle(const Vec3& p) const {
    if (!bounds_.contains(p)) return true;
    return std::any_of(primitives_.begin(), primitives_.end(),
                       [&](const Primitive& q) { return q.contains(p); });
  }

  /// Euclidean distance from p to the nearest solid surface (spheres and boxes).
  double distance_to_solids(const Vec3& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : primitives_) {
      if (q.shape == Shape::kSphere) {
        best = std::min(best, std::abs((p - q.a).norm() - q.radius));
      } else if (q.shape == Shape::kBox) {
        const Vec3 d = (q.a - p).cwiseMax(p - q.b).cwiseMax(Vec3::Zero());
        best = std::min(best, d.norm());
      }
    }
    return best;
  }

 private:
  bool intersects_bounds(const Primitive& p) const {
    const Aabb& b = bounds_;
    switch (p.shape) {
      case Shape::kSphere: {
        const Vec3 c = p.a.cwiseMax(b.min).cwiseMin(b.max);
        return (c - p.a).norm() <= p.radius;
      }
      case Shape::kBox:
        return (p.a.array() <= b.max.array()).all() && (p.b.array() >= b.min.array()).all();
      case Shape::kPlane: {
        bool pos = false, neg = false;
        for (int i = 0; i < 8; ++i) {
          const Vec3 corner((i & 1) ? b.max.x() : b.min.x(), (i & 2) ? b.max.y() : b.min.y(),
                            (i & 4) ? b.max.z() : b.min.z());
          const double s = p.b.dot(corner - p.a);
          pos |= s >= 0.0;
          neg |= s <= 0.0;
        }
        return pos && neg;
      }
      case Shape::kTriangle: {
        const Vec3 lo = p.a.cwiseMin(p.b).cwiseMin(p.c);
        const Vec3 hi = p.a.cwiseMax(p.b).cwiseMax(p.c);
        return (lo.array() <= b.max.array()).all() && (hi.array() >= b.min.array()).all();
      }
    }
    return false;
  }

  Aabb bounds_;
  std::vector<Primitive> primitives_;
};

// ---------------------------------------------------------------------------
// Scene construction helpers

/// Closed box room: floor, ceiling and four walls of the given thickness
/// around the interior [lo, hi]. Returns the id of the first wall.
inline int add_room(Scene& scene, const Vec3& lo, const Vec3& hi, double wall,
                    const Texture& tex) {
  const int first = scene.next_id();
  int id = first;
  auto add = [&](const Vec3& a, const Vec3& b) {
    Texture t = tex;
    t.seed = splitmix64(tex.seed + static_cast<std::uint64_t>(id));
    scene.add(Primitive::box(id++, a, b, t));
  };
  const Vec3 olo = lo - Vec3::Constant(wall);
  const Vec3 ohi = hi + Vec3::Constant(wall);
  add({olo.x(), olo.y(), olo.z()}, {ohi.x(), ohi.y(), lo.z()});  // floor
  add({olo.x(), olo.y(), hi.z()}, {ohi.x(), ohi.y(), ohi.z()});  // ceiling
  add({olo.x(), olo.y(), lo.z()}, {lo.x(), ohi.y(), hi.z()});    // -x wall
  add({hi.x(), olo.y(), lo.z()}, {ohi.x(), ohi.y(), hi.z()});    // +x wall
  add({lo.x(), olo.y(), lo.z()}, {hi.x(), lo.y(), hi.z()});      // -y wall
  add({lo.x(), hi.y(), lo.z()}, {hi.x(), ohi.y(), hi.z()});      // +y wall
  return first;
}

inline Texture default_texture(std::uint64_t seed) {
  Rng rng(seed);
  Texture t;
  t.kind = Texture::Kind::kNoise;
  t.scale = 0.35 + 0.4 * rng.uniform();
  t.seed = rng.next_u64();
  t.color_a = Vec3(0.15 + 0.3 * rng.uniform(), 0.15 + 0.3 * rng.uniform(), 0.15 + 0.3 * rng.uniform());
  t.color_b = Vec3(0.6 + 0.35 * rng.uniform(), 0.6 + 0.35 * rng.uniform(), 0.6 + 0.35 * rng.uniform());
  return t;
}

/// Closed room with interior [0, sx] x [0, sy] x [0, sz] and 0.25 m walls.
inline Scene make_room_scene(double sx, double sy, double sz, std::uint64_t seed = 1) {
  const double w = 0.25;
  Scene s(Aabb{Vec3(-w, -w, -w), Vec3(sx + w, sy + w, sz + w)});
  add_room(s, Vec3::Zero(), Vec3(sx, sy, sz), w, default_texture(seed));
  return s;
}

/// Two rooms of interior size (sx, sy, sz) side by side along x, separated by
/// a 0.25 m wall with a door of the given width/height centered in y.
inline Scene make_two_room_scene(double sx, double sy, double sz, double door_w = 1.5,
                                 double door_h = 2.25, std::uint64_t seed = 2) {
  const double w = 0.25;
  const double total_x = 2.0 * sx + w;
  Scene s(Aabb{Vec3(-w, -w, -w), Vec3(total_x + w, sy + w, sz + w)});
  add_room(s, Vec3::Zero(), Vec3(total_x, sy, sz), w, default_texture(seed));
  const Texture tex = default_texture(seed + 17);
  const double y0 = 0.5 * (sy - door_w);
  const double y1 = y0 + door_w;
  int id = s.next_id();
  s.add(Primitive::box(id++, Vec3(sx, 0, 0), Vec3(sx + w, y0, sz), tex));
  s.add(Primitive::box(id++, Vec3(sx, y1, 0), Vec3(sx + w, sy, sz), tex));
  s.add(Primitive::box(id++, Vec3(sx, y0, door_h), Vec3(sx + w, y1, sz), tex));
  return s;
}

/// Random perfect maze on an nx x ny cell lattice, extruded to height sz.
/// Cells are `cell` meters wide, walls 0.25 m thick. Cell (i, j) occupies
/// [w + i*(cell+w), w + i*(cell+w) + cell] in x (similarly y).
inline Scene make_maze_scene(int nx, int ny, double cell, double sz, std::uint64_t seed) {
  const double w = 0.25;
  const double pitch = cell + w;
  const double ex = nx * pitch + w;
  const double ey = ny * pitch + w;
  Scene s(Aabb{Vec3(0, 0, -w), Vec3(ex, ey, sz + w)});
  const Texture tex = default_texture(seed);
  int id = 1;
  s.add(Primitive::box(id++, Vec3(0, 0, -w), Vec3(ex, ey, 0), tex));
  s.add(Primitive::box(id++, Vec3(0, 0, sz), Vec3(ex, ey, sz + w), tex));

  // Depth-first carving of a spanning tree over the cells.
  Rng rng(seed);
  std::vector<char> visited(static_cast<std::size_t>(nx * ny), 0);
  // open_e[i][j]: passage between (i,j) and (i+1,j); open_n: between (i,j) and (i,j+1)
  std::vector<char> open_e(static_cast<std::size_t>(nx * ny), 0);
  std::vector<char> open_n(static_cast<std::size_t>(nx * ny), 0);
  std::vector<std::pair<int, int>> stack{{0, 0}};
  visited[0] = 1;
  while (!stack.empty()) {
    auto [i, j] = stack.back();
    std::vector<int> dirs;
    if (i + 1 < nx && !visited[(i + 1) * ny + j]) dirs.push_back(0);
    if (i > 0 && !visited[(i - 1) * ny + j]) dirs.push_back(1);
    if (j + 1 < ny && !visited[i * ny + j + 1]) dirs.push_back(2);
    if (j > 0 && !visited[i * ny + j - 1]) dirs.push_back(3);
    if (dirs.empty()) {
      stack.pop_back();
      continue;
    }
    const int d = dirs[rng.index(dirs.size())];
    int ni = i, nj = j;
    if (d == 0) { open_e[i * ny + j] = 1; ni = i + 1; }
    if (d == 1) { open_e[(i - 1) * ny + j] = 1; ni = i - 1; }
    if (d == 2) { open_n[i * ny + j] = 1; nj = j + 1; }
    if (d == 3) { open_n[i * ny + j - 1] = 1; nj = j - 1; }
    visited[ni * ny + nj] = 1;
    stack.emplace_back(ni, nj);
  }

  // Pillars at every lattice corner, wall segments where passages are closed.
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j)
      s.add(Primitive::box(id++, Vec3(i * pitch, j * pitch, 0), Vec3(i * pitch + w, j * pitch + w, sz), tex));
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const bool open = i > 0 && i < nx && open_e[(i - 1) * ny + j];
      if (!open)
        s.add(Primitive::box(id++, Vec3(i * pitch, j * pitch + w, 0),
                             Vec3(i * pitch + w, (j + 1) * pitch, sz), tex));
    }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const bool open = j > 0 && j < ny && open_n[i * ny + j - 1];
      if (!open)
        s.add(Primitive::box(id++, Vec3(i * pitch + w, j * pitch, 0),
                             Vec3((i + 1) * pitch, j * pitch + w, sz), tex));
    }
  return s;
}

/// Center of maze cell (i, j) at height z.
inline Vec3 maze_cell_center(int i, int j, double cell, double z) {
  const double w = 0.25;
  const double pitch = cell + w;
  return {w + i * pitch + 0.5 * cell, w + j * pitch + 0.5 * cell, z};
}

inline double snap(double x, double q) { return std::round(x / q) * q; }

/// Deterministic procedural indoor scene: a closed hall with grid-aligned
/// crates and pillars, a few spheres and a triangular ramp.
inline Scene generate_scene(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "genscene"));
  const double q = 0.25;
  const double sx = snap(rng.uniform(14.0, 20.0), q);
  const double sy = snap(rng.uniform(10.0, 14.0), q);
  const double sz = snap(rng.uniform(3.5, 4.5), q);
  Scene s = make_room_scene(sx, sy, sz, rng.next_u64());
  int id = s.next_id();

  const int n_boxes = 6 + static_cast<int>(rng.index(5));
  for (int k = 0; k < n_boxes; ++k) {
    const double w = snap(rng.uniform(0.75, 2.0), q);
    const double d = snap(rng.uniform(0.75, 2.0), q);
    const bool pillar = rng.uniform() < 0.3;
    const double h = pillar ? sz : snap(rng.uniform(0.75, 2.0), q);
    const double x = snap(rng.uniform(1.0, sx - 1.0 - w), q);
    const double y = snap(rng.uniform(1.0, sy - 1.0 - d), q);
    Texture t = default_texture(rng.next_u64());
    if (rng.uniform() < 0.4) t.kind = Texture::Kind::kChecker;
    s.add(Primitive::box(id++, Vec3(x, y, 0), Vec3(x + w, y + d, h), t));
  }
  const int n_spheres = 2 + static_cast<int>(rng.index(3));
  for (int k = 0; k < n_spheres; ++k) {
    const double r = rng.uniform(0.3, 0.7);
    const Vec3 c(rng.uniform(1.0 + r, sx - 1.0 - r), rng.uniform(1.0 + r, sy - 1.0 - r),
                 rng.uniform(r, sz - r));
    s.add(Primitive::sphere(id++, c, r, default_texture(rng.next_u64())));
  }
  {
    // ramp leaning against the -y wall
    const double x = snap(rng.uniform(2.0, sx - 4.0), q);
    const Texture t = default_texture(rng.next_u64());
    s.add(Primitive::triangle(id++, Vec3(x, 0.0, 1.5), Vec3(x + 2.0, 0.0, 1.5),
                              Vec3(x + 1.0, 1.0, 0.0), t));
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Text format
//
//   # comment
//   bounds <minx> <miny> <minz> <maxx> <maxy> <maxz>
//   begin <sphere|box|plane|triangle>
//     id <int>
//     center <x y z>         radius <r>           (sphere)
//     min <x y z>            max <x y z>          (box)
//     point <x y z>          normal <x y z>       (plane)
//     v0 <x y z>  v1 <x y z>  v2 <x y z>          (triangle)
//     texture <noise|checker> <scale> <seed> <ra ga ba> <rb gb bb>
//   end
//
// Numbers are written in shortest round-trip form, so write→read is exact.

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string fmt_vec(const Vec3& v) {
  return fmt_double(v.x()) + " " + fmt_double(v.y()) + " " + fmt_double(v.z());
}

inline double parse_double(const std::string& tok, std::size_t line) {
  double v = 0.0;
  auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
    throw ParseError::at_line("invalid number '" + tok + "'", line);
  return v;
}

}  // namespace detail

inline void write_scene(std::ostream& os, const Scene& scene) {
  using detail::fmt_double;
  using detail::fmt_vec;
  os << "# slamgen scene v1\n";
  os << "bounds " << fmt_vec(scene.bounds().min) << " " << fmt_vec(scene.bounds().max) << "\n";
  for (const auto& p : scene.primitives()) {
    static const char* names[] = {"sphere", "box", "plane", "triangle"};
    os << "begin " << names[static_cast<int>(p.shape)] << "\n";
    os << "  id " << p.id << "\n";
    switch (p.shape) {
      case Shape::kSphere:
        os << "  center " << fmt_vec(p.a) << "\n  radius " << fmt_double(p.radius) << "\n";
        break;
      case Shape::kBox: os << "  min " << fmt_vec(p.a) << "\n  max " << fmt_vec(p.b) << "\n"; break;
      case Shape::kPlane:
        os << "  point " << fmt_vec(p.a) << "\n  normal " << fmt_vec(p.b) << "\n";
        break;
      case Shape::kTriangle:
        os << "  v0 " << fmt_vec(p.a) << "\n  v1 " << fmt_vec(p.b) << "\n  v2 " << fmt_vec(p.c)
           << "\n";
        break;
    }
    const auto& t = p.texture;
    os << "  texture " << (t.kind == Texture::Kind::kNoise ? "noise" : "checker") << " "
       << fmt_double(t.scale) << " " << t.seed << " " << fmt_vec(t.color_a) << " "
       << fmt_vec(t.color_b) << "\n";
    os << "end\n";
  }
}

inline Scene read_scene(std::istream& is) {
  Scene scene;
  bool have_bounds = false;
  std::string raw;
  std::size_t line_no = 0;
  std::optional<Primitive> cur;
  std::set<std::string> seen_keys;

  auto vec_at = [&](const std::vector<std::string>& tok, std::size_t i) {
    if (tok.size() < i + 3) throw ParseError::at_line("expected 3 numbers after '" + tok[0] + "'", line_no);
    return Vec3(detail::parse_double(tok[i], line_no), detail::parse_double(tok[i + 1], line_no),
                detail::parse_double(tok[i + 2], line_no));
  };

  while (std::getline(is, raw)) {
    ++line_no;
    if (auto h = raw.find('#'); h != std::string::npos) raw.resize(h);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string& key = tok[0];

    if (!cur) {
      if (key == "bounds") {
        if (tok.size() != 7) throw ParseError::at_line("bounds needs 6 numbers", line_no);
        scene.set_bounds(Aabb{vec_at(tok, 1), vec_at(tok, 4)});
        have_bounds = true;
      } else if (key == "begin") {
        if (tok.size() != 2) throw ParseError::at_line("begin needs a shape name", line_no);
        Primitive p;
        if (tok[1] == "sphere") p.shape = Shape::kSphere;
        else if (tok[1] == "box") p.shape = Shape::kBox;
        else if (tok[1] == "plane") p.shape = Shape::kPlane;
        else if (tok[1] == "triangle") p.shape = Shape::kTriangle;
        else throw ParseError::at_line("unknown shape '" + tok[1] + "'", line_no);
        p.id = 0;
        cur = p;
        seen_keys.clear();
      } else {
        throw ParseError::at_line("unexpected key '" + key + "' outside a block", line_no);
      }
      continue;
    }

    Primitive& p = *cur;
    if (key == "end") {
      if (p.id == 0) throw ParseError::at_line("primitive without id", line_no);
      if (p.shape == Shape::kBox) p = Primitive::box(p.id, p.a, p.b, p.texture);
      if (p.shape == Shape::kPlane) {
        if (p.b.norm() == 0.0) throw ParseError::at_line("plane normal is zero", line_no);
        // A written unit normal must read back bit-exact; renormalizing would move the last bits.
        if (std::abs(p.b.norm() - 1.0) > 1e-12) p.b.normalize();
      }
      try {
        scene.add(p);
      } catch (const Error& e) {
        throw ParseError::at_line(e.what(), line_no);
      }
      cur.reset();
      continue;
    }
    if (!seen_keys.insert(key).second) throw ParseError::at_line("duplicate key '" + key + "'", line_no);
    if (key == "id") {
      if (tok.size() != 2) throw ParseError::at_line("id needs one integer", line_no);
      int v = 0;
      auto r = std::from_chars(tok[1].data(), tok[1].data() + tok[1].size(), v);
      if (r.ec != std::errc() || r.ptr != tok[1].data() + tok[1].size())
        throw ParseError::at_line("invalid id '" + tok[1] + "'", line_no);
      p.id = v;
    } else if (key == "center" || key == "min" || key == "point" || key == "v0") {
      p.a = vec_at(tok, 1);
    } else if (key == "max" || key == "normal" || key == "v1") {
      p.b = vec_at(tok, 1);
    } else if (key == "v2") {
      p.c = vec_at(tok, 1);
    } else if (key == "radius") {
      if (tok.size() != 2) throw ParseError::at_line("radius needs one number", line_no);
      p.radius = detail::parse_double(tok[1], line_no);
    } else if (key == "texture") {
      if (tok.size() != 10) throw ParseError::at_line("texture needs 9 fields", line_no);
      if (tok[1] == "noise") p.texture.kind = Texture::Kind::kNoise;
      else if (tok[1] == "checker") p.texture.kind = Texture::Kind::kChecker;
      else throw ParseError::at_line("unknown texture '" + tok[1] + "'", line_no);
      p.texture.scale = detail::parse_double(tok[2], line_no);
      std::uint64_t sd = 0;
      auto r = std::from_chars(tok[3].data(), tok[3].data() + tok[3].size(), sd);
      if (r.ec != std::errc()) throw ParseError::at_line("invalid texture seed", line_no);
      p.texture.seed = sd;
      p.texture.color_a = vec_at(tok, 4);
      p.texture.color_b = vec_at(tok, 7);
    } else {
      throw ParseError::at_line("unknown key '" + key + "'", line_no);
    }
  }
  if (cur) throw ParseError::at_line("unterminated block", line_no);
  if (!have_bounds) throw ParseError::at_line("missing bounds", line_no);
  try {
    scene.validate();
  } catch (const Error& e) {
    throw ParseError::at_line(e.what(), line_no);
  }
  return scene;
}

}  // namespace slamgen

#endif  // SLAMGEN_SCENE_HPP
