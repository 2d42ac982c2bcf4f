#ifndef SLAMGEN_LABELGEN_HPP
#define SLAMGEN_LABELGEN_HPP

// Dense labels from depth and poses: optical flow with masks, stereo
// disparity, and LiDAR points extracted from four 90-degree depth views.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "slamgen/error.hpp"
#include "slamgen/geom.hpp"
#include "slamgen/raster.hpp"
#include "slamgen/render.hpp"
#include "slamgen/scene.hpp"

namespace slamgen {

// Mask bits. 0 means the label is valid.
inline constexpr std::uint8_t kMaskOccluded = 0x01;
inline constexpr std::uint8_t kMaskOutOfView = 0x02;
inline constexpr std::uint8_t kMaskInvalid = 0x04;

struct FlowField {
  RasterImage flow;  // f32 x2, (dx, dy) in pixels
  RasterImage mask;  // u8 x1
};

struct FlowParams {
  double occlusion_threshold = 0.05;  // meters
};

/// Flow of every reference pixel into the test view. Pixels without depth
/// get kMaskInvalid; points behind the test camera get kMaskInvalid and
/// kMaskOutOfView; landings outside the image get kMaskOutOfView; landings
/// whose z lies more than the threshold behind the test depth get
/// kMaskOccluded. Passing an empty depth_tst skips the occlusion test.
inline FlowField compute_flow(const RasterImage& depth_ref, const Pose& pose_ref, const Pose& pose_tst,
                              const RasterImage& depth_tst, const CameraModel& cam,
                              const FlowParams& params = {}) {
  const int w = cam.width;
  const int h = cam.height;
  if (depth_ref.width() != w || depth_ref.height() != h)
    throw Error("compute_flow: reference depth is " + std::to_string(depth_ref.width()) + "x" +
                std::to_string(depth_ref.height()) + ", camera is " + std::to_string(w) + "x" + std::to_string(h));
  const bool occl = depth_tst.element_count() > 0;
  if (occl && (depth_tst.width() != w || depth_tst.height() != h))
    throw Error("compute_flow: test depth size does not match the reference");

  FlowField out{RasterImage(w, h, 2, DType::kF32), RasterImage(w, h, 1, DType::kU8)};
  auto flow = out.flow.values<float>();
  auto mask = out.mask.values<std::uint8_t>();
  const auto zref = depth_ref.values<float>();

  const Pose rel = pose_tst.inverse() * pose_ref;
  const Mat3 r = rel.rotation_matrix();
  const Vec3 t = rel.translation();

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const float z = zref[i];
      if (!is_depth_hit(z)) {
        mask[i] = kMaskInvalid;
        continue;
      }
      const Vec3 p = r * unproject(cam, x, y, z) + t;
      const Projection pr = project(cam, p);
      if (!pr.in_front) {
        mask[i] = kMaskInvalid | kMaskOutOfView;
        continue;
      }
      flow[2 * i] = static_cast<float>(pr.u - x);
      flow[2 * i + 1] = static_cast<float>(pr.v - y);
      if (!pr.valid) {
        mask[i] = kMaskOutOfView;
      } else if (occl && p.z() > sample_bilinear<float>(depth_tst, pr.u, pr.v) + params.occlusion_threshold) {
        mask[i] = kMaskOccluded;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stereo

struct StereoRig {
  double baseline = 0.25;  // meters; right camera sits at +x in the left camera frame

  void validate() const {
    if (!(baseline > 0.0)) throw Error("stereo baseline must be positive");
  }
  /// Right camera pose for a given left camera pose.
  Pose right_pose(const Pose& left) const { return left * Pose::from_translation(Vec3(baseline, 0.0, 0.0)); }
};

struct Disparity {
  RasterImage disparity;  // f32 x1, pixels
  RasterImage mask;       // u8 x1, same bits as FlowField
};

/// d = fx * baseline / z. Masks come from left-to-right flow, with the
/// occlusion test enabled when the right depth image is given.
inline Disparity compute_disparity(const RasterImage& depth, const CameraModel& cam, const StereoRig& rig,
                                   const RasterImage& depth_right = {}) {
  rig.validate();
  const Pose left = Pose::identity();
  FlowField f = compute_flow(depth, left, rig.right_pose(left), depth_right, cam);
  Disparity out{RasterImage(cam.width, cam.height, 1, DType::kF32), std::move(f.mask)};
  auto d = out.disparity.values<float>();
  const auto z = depth.values<float>();
  const double k = cam.fx * rig.baseline;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = is_depth_hit(z[i]) ? static_cast<float>(k / z[i]) : 0.0f;
  return out;
}

// ---------------------------------------------------------------------------
// LiDAR

struct LidarSpec {
  int n_lines = 32;
  double fov_low_deg = -25.0;
  double fov_high_deg = 15.0;
  int points_per_line = 512;
  double max_range = 50.0;  // meters
  int camera_size = 0;      // pixels per side of each view; 0 picks oversample x the minimum
  int oversample = 4;

  void validate() const {
    if (n_lines < 1) throw Error("lidar: n_lines must be at least 1");
    if (points_per_line < 4) throw Error("lidar: points_per_line must be at least 4");
    if (n_lines > 1 && !(fov_high_deg > fov_low_deg)) throw Error("lidar: vertical angles must be increasing");
    if (fov_low_deg <= -45.0 || fov_high_deg >= 45.0) throw Error("lidar: vertical field must lie within (-45, 45) degrees");
    if (!(max_range > 0.0)) throw Error("lidar: max_range must be positive");
    if (oversample < 1) throw Error("lidar: oversample must be at least 1");
  }

  double elevation(int line) const {
    if (n_lines == 1) return deg2rad(fov_low_deg);
    return deg2rad(fov_low_deg + (fov_high_deg - fov_low_deg) * line / (n_lines - 1));
  }
  double azimuth(int k) const { return 2.0 * kPi * k / points_per_line; }
};

/// Unit beam direction in the sensor body frame (x forward, y left, z up).
inline Vec3 lidar_direction(double azimuth, double elevation) {
  return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth), std::sin(elevation)};
}

namespace detail {

/// View index (yaw = index * 90 degrees) and azimuth relative to that view.
inline std::pair<int, double> lidar_quadrant(double azimuth) {
  const double a = wrap_angle(azimuth);
  int q = static_cast<int>(std::floor((a + 0.25 * kPi) / (0.5 * kPi)));
  q = ((q % 4) + 4) % 4;
  return {q, wrap_angle(a - q * 0.5 * kPi)};
}

/// Image coordinates of a beam in its view, for focal length f.
inline Vec2 lidar_pixel(double rel_az, double el, double f, double c) {
  const double bx = std::cos(el) * std::cos(rel_az);
  const double by = std::cos(el) * std::sin(rel_az);
  const double bz = std::sin(el);
  return {f * (-by / bx) + c, f * (-bz / bx) + c};
}

}  // namespace detail

/// Smallest view size at which neighboring beams (along a line and across
/// lines) land at least one pixel apart.
inline int lidar_min_camera_size(const LidarSpec& spec) {
  spec.validate();
  double min_gap = std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, Vec2>> prev_line(spec.points_per_line);
  for (int l = 0; l < spec.n_lines; ++l) {
    const double el = spec.elevation(l);
    std::pair<int, Vec2> prev{-1, Vec2::Zero()};
    for (int k = 0; k < spec.points_per_line; ++k) {
      const auto [q, rel] = detail::lidar_quadrant(spec.azimuth(k));
      const Vec2 px = detail::lidar_pixel(rel, el, 1.0, 0.0);
      if (k > 0 && prev.first == q) min_gap = std::min(min_gap, (px - prev.second).cwiseAbs().maxCoeff());
      if (l > 0 && prev_line[k].first == q)
        min_gap = std::min(min_gap, (px - prev_line[k].second).cwiseAbs().maxCoeff());
      prev = {q, px};
      prev_line[k] = prev;
    }
  }
  // f = W / 2, so the gap in pixels is W * min_gap / 2.
  return static_cast<int>(std::ceil(2.0 / min_gap - 1e-9));
}

struct LidarScan {
  std::vector<Vec3> points;  // sensor frame, meters
  int camera_size = 0;
};

/// Extracts a multi-line scan from four depth views at the sensor position,
/// yawed 0/90/180/270 degrees. `sensor` maps the sensor body frame to the
/// world. Only the pixels the beams read are cast; each equals the same pixel
/// of a full render_depth of the view.
inline LidarScan simulate_lidar(const Scene& scene, const Pose& sensor, const LidarSpec& spec) {
  const int need = lidar_min_camera_size(spec);
  const int size = spec.camera_size > 0 ? spec.camera_size : spec.oversample * need;
  if (size < need)
    throw Error("lidar: view resolution " + std::to_string(size) + " puts neighboring beams on one pixel; need at least " +
                std::to_string(need) + "x" + std::to_string(need));
  const CameraModel cam(0.5 * size, 0.5 * size, 0.5 * (size - 1), 0.5 * (size - 1), size, size);

  Pose views[4];
  for (int q = 0; q < 4; ++q) views[q] = sensor * camera_pose_from_ypr(Vec3::Zero(), q * 0.5 * kPi, 0.0, 0.0);
  std::unordered_map<std::int64_t, float> cache;
  auto depth = [&](int q, int x, int y) {
    const std::int64_t key = (static_cast<std::int64_t>(q) * size + y) * size + x;
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, render_depth_pixel(scene, views[q], cam, x, y)).first;
    return it->second;
  };

  LidarScan scan;
  scan.camera_size = size;
  for (int l = 0; l < spec.n_lines; ++l) {
    const double el = spec.elevation(l);
    for (int k = 0; k < spec.points_per_line; ++k) {
      const double az = spec.azimuth(k);
      const auto [q, rel] = detail::lidar_quadrant(az);
      const Vec2 px = detail::lidar_pixel(rel, el, cam.fx, cam.cx);
      const double u = std::clamp(px.x(), 0.0, size - 1.0);
      const double v = std::clamp(px.y(), 0.0, size - 1.0);
      const int x0 = static_cast<int>(std::floor(u));
      const int y0 = static_cast<int>(std::floor(v));
      const int x1 = std::min(x0 + 1, size - 1);
      const int y1 = std::min(y0 + 1, size - 1);
      const double z00 = depth(q, x0, y0), z10 = depth(q, x1, y0), z01 = depth(q, x0, y1), z11 = depth(q, x1, y1);
      double z;
      if (is_depth_hit(z00) && is_depth_hit(z10) && is_depth_hit(z01) && is_depth_hit(z11)) {
        const double ax = u - x0, ay = v - y0;
        z = (1.0 - ay) * ((1.0 - ax) * z00 + ax * z10) + ay * ((1.0 - ax) * z01 + ax * z11);
      } else {
        const float zn = depth(q, static_cast<int>(std::lround(u)), static_cast<int>(std::lround(v)));
        if (!is_depth_hit(zn)) continue;
        z = zn;
      }
      // z-depth to range: the view-frame z of the unit beam is cos(el) cos(rel).
      const double range = z / (std::cos(el) * std::cos(rel));
      if (range > spec.max_range) continue;
      scan.points.push_back(range * lidar_direction(az, el));
    }
  }
  return scan;
}

}  // namespace slamgen

#endif  // SLAMGEN_LABELGEN_HPP
