#ifndef SLAMGEN_GEOM_HPP
#define SLAMGEN_GEOM_HPP

// Rigid-body geometry and pinhole projection.
//
// Conventions:
//   camera frame  x-right, y-down, z-forward
//   body frame    x-forward, y-left, z-up (used for yaw/pitch/roll and LiDAR)
//   world frame   right-handed, gravity along -z
// A Pose is the camera-to-world transform T_WC. Quaternions are stored
// scalar-last (qx, qy, qz, qw) and normalized on construction.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "slamgen/error.hpp"

namespace slamgen {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

/// Normalizes unless already unit to within rounding, so quaternions read
/// back from a file keep their exact stored values.
inline Quat unit_quaternion(const Quat& q) {
  const double n2 = q.squaredNorm();
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw Error("quaternion must be finite and non-zero");
  if (std::abs(n2 - 1.0) <= 4e-16) return q;
  return q.normalized();
}

class Pose {
 public:
  Pose() : q_(Quat::Identity()), t_(Vec3::Zero()) {}
  Pose(const Quat& q, const Vec3& t) : q_(unit_quaternion(q)), t_(t) {}
  Pose(const Mat3& r, const Vec3& t) : q_(unit_quaternion(Quat(r))), t_(t) {}

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Quat::Identity(), t}; }

  /// Scalar-last constructor matching the on-disk order.
  static Pose from_xyzw(double tx, double ty, double tz, double qx, double qy, double qz,
                        double qw) {
    return {Quat(qw, qx, qy, qz), Vec3(tx, ty, tz)};
  }

  const Quat& rotation() const { return q_; }
  Mat3 rotation_matrix() const { return q_.toRotationMatrix(); }
  const Vec3& translation() const { return t_; }

  Vec3 apply(const Vec3& p) const { return q_ * p + t_; }

  /// this ∘ other: applies `other` first, then this.
  Pose compose(const Pose& other) const { return {q_ * other.q_, t_ + q_ * other.t_}; }
  Pose operator*(const Pose& other) const { return compose(other); }

  Pose inverse() const {
    const Quat qi = q_.conjugate();
    return {qi, -(qi * t_)};
  }

 private:
  Quat q_;
  Vec3 t_;
};

inline Pose compose(const Pose& a, const Pose& b) { return a.compose(b); }
inline Pose inverse(const Pose& p) { return p.inverse(); }

/// Logarithm map SO(3) -> so(3). The result has norm in [0, pi].
inline Vec3 so3_log(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 v = q.vec();
  const double n = v.norm();
  const double w = q.w();
  if (n < 1e-8) {
    // atan2(n, w) / n expanded around n = 0 with w ~ 1.
    return (2.0 / w) * (1.0 - n * n / (3.0 * w * w)) * v;
  }
  const double angle = 2.0 * std::atan2(n, w);
  return (angle / n) * v;
}

/// Exponential map so(3) -> SO(3).
inline Quat so3_exp(const Vec3& v) {
  const double theta = v.norm();
  if (theta < 1e-8) {
    const double theta2 = theta * theta;
    const Vec3 xyz = (0.5 - theta2 / 48.0) * v;
    return Quat(1.0 - theta2 / 8.0, xyz.x(), xyz.y(), xyz.z()).normalized();
  }
  const double half = 0.5 * theta;
  const Vec3 xyz = (std::sin(half) / theta) * v;
  return Quat(std::cos(half), xyz.x(), xyz.y(), xyz.z());
}

/// Rotation angle in [0, pi].
inline double rotation_angle(const Quat& q) { return so3_log(q).norm(); }

/// Fixed rotation from the camera frame to the body frame:
/// camera z -> body x, camera x -> body -y, camera y -> body -z.
inline Mat3 body_from_camera() {
  Mat3 r;
  // columns: camera axes expressed in the body frame
  r << 0, 0, 1,
      -1, 0, 0,
       0, -1, 0;
  return r;
}

/// Body orientation from ZYX Euler angles (radians).
inline Mat3 body_rotation(double yaw, double pitch, double roll) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

struct YawPitchRoll {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

/// ZYX Euler angles of a body rotation. Pitch lies in [-pi/2, pi/2].
inline YawPitchRoll yaw_pitch_roll(const Mat3& r) {
  YawPitchRoll e;
  e.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  e.yaw = std::atan2(r(1, 0), r(0, 0));
  e.roll = std::atan2(r(2, 1), r(2, 2));
  return e;
}

/// Camera pose whose body frame has the given yaw/pitch/roll.
inline Pose camera_pose_from_ypr(const Vec3& position, double yaw, double pitch, double roll) {
  return {body_rotation(yaw, pitch, roll) * body_from_camera(), position};
}

/// Yaw/pitch/roll of the body frame attached to a camera pose.
inline YawPitchRoll camera_ypr(const Pose& camera) {
  return yaw_pitch_roll(camera.rotation_matrix() * body_from_camera().transpose());
}

/// Camera pose at `eye` whose optical axis points at `target`, image y-axis
/// as close to world -z as possible.
inline Pose look_at(const Vec3& eye, const Vec3& target) {
  Vec3 z = target - eye;
  if (z.norm() < 1e-12) return camera_pose_from_ypr(eye, 0.0, 0.0, 0.0);
  z.normalize();
  Vec3 down(0.0, 0.0, -1.0);
  if (std::abs(z.dot(down)) > 1.0 - 1e-9) down = Vec3(1.0, 0.0, 0.0);
  const Vec3 x = down.cross(z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return {r, eye};
}

struct CameraModel {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  CameraModel() = default;
  CameraModel(double fx_, double fy_, double cx_, double cy_, int width_, int height_)
      : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(width_), height(height_) {
    validate();
  }

  /// Square-pixel camera with the principal point at the image center and
  /// the given horizontal field of view. Pixel centers sit at integer coordinates.
  static CameraModel with_fov(int width, int height, double hfov_deg) {
    const double f = 0.5 * width / std::tan(0.5 * deg2rad(hfov_deg));
    return {f, f, 0.5 * (width - 1), 0.5 * (height - 1), width, height};
  }

  void validate() const {
    if (!(fx > 0.0 && fy > 0.0)) throw Error("camera focal lengths must be positive");
    if (width <= 0 || height <= 0) throw Error("camera image size must be positive");
    if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
      throw Error("camera principal point must lie inside the image");
  }

  bool operator==(const CameraModel&) const = default;
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  /// false when the point is behind the camera or lands outside the image.
  bool valid = false;
  bool in_front = false;
};

inline Projection project(const CameraModel& cam, const Vec3& p) {
  Projection out;
  if (!(p.z() > 0.0)) return out;
  out.in_front = true;
  out.u = cam.fx * p.x() / p.z() + cam.cx;
  out.v = cam.fy * p.y() / p.z() + cam.cy;
  out.valid = out.u >= 0.0 && out.u < cam.width && out.v >= 0.0 && out.v < cam.height;
  return out;
}

inline Vec3 unproject(const CameraModel& cam, double u, double v, double depth) {
  if (!(depth > 0.0)) throw Error("unproject: depth must be positive");
  return {(u - cam.cx) / cam.fx * depth, (v - cam.cy) / cam.fy * depth, depth};
}

/// Camera-frame ray through pixel (u, v) with unit z-component.
inline Vec3 pixel_ray(const CameraModel& cam, double u, double v) {
  return {(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
}

}  // namespace slamgen

#endif  // SLAMGEN_GEOM_HPP
