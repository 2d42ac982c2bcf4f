#ifndef SLAMGEN_RENDER_HPP
#define SLAMGEN_RENDER_HPP

// Per-pixel ray casting of a Scene: z-depth, Lambertian RGB and object ids.

#include <cmath>
#include <cstdint>
#include <optional>

#include "slamgen/geom.hpp"
#include "slamgen/raster.hpp"
#include "slamgen/scene.hpp"

namespace slamgen {

struct RenderedFrame {
  RasterImage depth;  // f32 x1, camera-frame z in meters, kDepthMiss on miss
  RasterImage rgb;    // u8 x3
  RasterImage seg;    // u16 x1, object id, 0 on miss
};

enum RenderChannels : unsigned { kRenderDepth = 1, kRenderRgb = 2, kRenderSeg = 4, kRenderAll = 7 };

namespace detail {

inline float hit_depth(const std::optional<Hit>& hit, double inv_norm) {
  return hit ? static_cast<float>(hit->distance * inv_norm) : kDepthMiss;
}

}  // namespace detail

/// Depth of one pixel, bit-identical to the same pixel of render_depth.
inline float render_depth_pixel(const Scene& scene, const Pose& pose, const CameraModel& cam, int x, int y) {
  const Vec3 ray_cam = pixel_ray(cam, x, y);
  const double inv_norm = 1.0 / ray_cam.norm();
  return detail::hit_depth(scene.ray_cast(pose.translation(), pose.rotation_matrix() * (ray_cam * inv_norm)), inv_norm);
}

inline RenderedFrame render(const Scene& scene, const Pose& pose, const CameraModel& cam,
                            unsigned channels = kRenderAll) {
  const int w = cam.width;
  const int h = cam.height;
  RenderedFrame f;
  if (channels & kRenderDepth) f.depth = RasterImage(w, h, 1, DType::kF32);
  if (channels & kRenderRgb) f.rgb = RasterImage(w, h, 3, DType::kU8);
  if (channels & kRenderSeg) f.seg = RasterImage(w, h, 1, DType::kU16);
  std::span<float> depth;
  std::span<std::uint8_t> rgb;
  std::span<std::uint16_t> seg;
  if (channels & kRenderDepth) depth = f.depth.values<float>();
  if (channels & kRenderRgb) rgb = f.rgb.values<std::uint8_t>();
  if (channels & kRenderSeg) seg = f.seg.values<std::uint16_t>();

  const Mat3 r = pose.rotation_matrix();
  const Vec3 origin = pose.translation();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const Vec3 ray_cam = pixel_ray(cam, x, y);
      const double inv_norm = 1.0 / ray_cam.norm();
      const Vec3 dir = r * (ray_cam * inv_norm);
      const auto hit = scene.ray_cast(origin, dir);
      if (!depth.empty()) depth[i] = detail::hit_depth(hit, inv_norm);
      if (!seg.empty()) seg[i] = hit ? static_cast<std::uint16_t>(hit->object_id) : 0;
      if (!rgb.empty()) {
        Vec3 c = Vec3::Zero();
        if (hit) c = scene.shade(origin, dir, *hit);
        for (int k = 0; k < 3; ++k)
          rgb[3 * i + k] = static_cast<std::uint8_t>(std::lround(std::clamp(c[k], 0.0, 1.0) * 255.0));
      }
    }
  }
  return f;
}

inline RasterImage render_depth(const Scene& scene, const Pose& pose, const CameraModel& cam) {
  return render(scene, pose, cam, kRenderDepth).depth;
}
inline RasterImage render_rgb(const Scene& scene, const Pose& pose, const CameraModel& cam) {
  return render(scene, pose, cam, kRenderRgb).rgb;
}
inline RasterImage render_seg(const Scene& scene, const Pose& pose, const CameraModel& cam) {
  return render(scene, pose, cam, kRenderSeg).seg;
}

}  // namespace slamgen

#endif  // SLAMGEN_RENDER_HPP
