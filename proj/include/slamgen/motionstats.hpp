#ifndef SLAMGEN_MOTIONSTATS_HPP
#define SLAMGEN_MOTIONSTATS_HPP

// Motion-pattern diversity: per-frame translation / rotation delta matrices,
// their singular values and directions, and the diversity score sigma.

#include <Eigen/Core>
#include <Eigen/SVD>
#include <charconv>
#include <cmath>
#include <ostream>
#include <vector>

#include "slamgen/error.hpp"
#include "slamgen/geom.hpp"

namespace slamgen {

using Matrix3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

enum class DeltaFrame { kBody, kWorld };

struct MotionMatrices {
  Matrix3X T;  // translation deltas, meters
  Matrix3X R;  // rotation deltas as rotation vectors, radians
};

/// Column i holds the motion from frame i to i+1. In body mode the
/// translation is expressed in frame i's camera axes; in world mode it is the
/// plain position difference. Rotation columns are always the log of the
/// relative rotation q_i^-1 q_{i+1}.
inline MotionMatrices motion_matrices(const std::vector<Pose>& poses, DeltaFrame frame = DeltaFrame::kBody) {
  if (poses.size() < 2) throw Error("motion_matrices: need at least 2 poses");
  const Eigen::Index n = static_cast<Eigen::Index>(poses.size()) - 1;
  MotionMatrices m{Matrix3X(3, n), Matrix3X(3, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Pose& a = poses[i];
    const Pose& b = poses[i + 1];
    const Vec3 dp = b.translation() - a.translation();
    m.T.col(i) = frame == DeltaFrame::kBody ? Vec3(a.rotation().conjugate() * dp) : dp;
    m.R.col(i) = so3_log(a.rotation().conjugate() * b.rotation());
  }
  return m;
}

struct PrincipalMotion {
  Vec3 values = Vec3::Zero();  // descending
  Mat3 U = Mat3::Identity();   // left singular vectors, one per column
  Eigen::MatrixXd V;           // right singular vectors (thin)
};

/// SVD of the raw (uncentered) 3 x n matrix.
inline PrincipalMotion principal_motion(const Matrix3X& M) {
  if (M.cols() < 1) throw Error("principal_motion: matrix has no columns");
  PrincipalMotion pm;
  if (M.isZero(0.0)) {
    pm.V = Eigen::MatrixXd::Zero(M.cols(), std::min<Eigen::Index>(3, M.cols()));
    return pm;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeThinV);
  const auto s = svd.singularValues();
  // Values below the numerical-rank cutoff are roundoff; report them as 0.
  const double cut = svd.threshold() * s[0];
  for (Eigen::Index k = 0; k < s.size(); ++k) pm.values[k] = s[k] > cut ? s[k] : 0.0;
  pm.U = svd.matrixU();
  pm.V = svd.matrixV();
  return pm;
}

namespace detail {

inline double diversity_term(const Vec3& s) {
  if (!(s[0] > 0.0)) return 0.0;
  return std::sqrt(s[1] * s[2]) / s[0];
}

}  // namespace detail

struct Diversity {
  double sigma = 0.0;
  PrincipalMotion translation;
  PrincipalMotion rotation;
};

inline Diversity diversity(const MotionMatrices& m) {
  Diversity d;
  d.translation = principal_motion(m.T);
  d.rotation = principal_motion(m.R);
  d.sigma = 0.5 * (detail::diversity_term(d.translation.values) + detail::diversity_term(d.rotation.values));
  return d;
}

/// sigma = (sqrt(t2 t3)/t1 + sqrt(r2 r3)/r1) / 2; a term whose leading
/// singular value is zero contributes 0.
inline double diversity_sigma(const std::vector<Pose>& poses, DeltaFrame frame = DeltaFrame::kBody) {
  return diversity(motion_matrices(poses, frame)).sigma;
}

/// Coordinates of each column in the principal basis, U^T M.
inline Matrix3X project_motions(const Matrix3X& M, const PrincipalMotion& pm) { return pm.U.transpose() * M; }

/// CSV: frame,t1,t2,t3,r1,r2,r3 with the projected coordinates of each delta.
inline void write_motion_csv(std::ostream& os, const MotionMatrices& m, const Diversity& d) {
  const Matrix3X pt = project_motions(m.T, d.translation);
  const Matrix3X pr = project_motions(m.R, d.rotation);
  os << "frame,t1,t2,t3,r1,r2,r3\n";
  char buf[64];
  auto put = [&](double v) {
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, r.ptr - buf);
  };
  for (Eigen::Index i = 0; i < m.T.cols(); ++i) {
    os << i;
    for (int k = 0; k < 3; ++k) {
      os << ',';
      put(pt(k, i));
    }
    for (int k = 0; k < 3; ++k) {
      os << ',';
      put(pr(k, i));
    }
    os << '\n';
  }
}

}  // namespace slamgen

#endif  // SLAMGEN_MOTIONSTATS_HPP
