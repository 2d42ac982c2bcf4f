#ifndef SLAMGEN_EVALBENCH_HPP
#define SLAMGEN_EVALBENCH_HPP

// Trajectory benchmark: ATE after alignment, RPE over consecutive frames,
// success rate, and fixed-length sequence cutting.

#include <Eigen/Core>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "slamgen/error.hpp"
#include "slamgen/geom.hpp"

namespace slamgen {

enum class AlignMode { kNone, kSe3, kSim3 };

/// p -> scale * R p + t
struct Similarity {
  double scale = 1.0;
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (R * p) + t; }
  /// Moves a whole pose; the rotation part rotates the camera frame too.
  Pose apply(const Pose& p) const { return {Quat(R) * p.rotation(), apply(p.translation())}; }
};

/// Least-squares similarity (or rigid motion for kSe3) that maps est onto gt,
/// in the closed form of Umeyama (1991).
inline Similarity align_similarity(const std::vector<Vec3>& est, const std::vector<Vec3>& gt, AlignMode mode) {
  if (est.size() != gt.size()) throw Error("align: trajectories differ in length");
  if (mode == AlignMode::kNone) return {};
  if (est.size() < 3) throw Error("align: need at least 3 positions");
  const double n = static_cast<double>(est.size());
  Vec3 me = Vec3::Zero(), mg = Vec3::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    me += est[i];
    mg += gt[i];
  }
  me /= n;
  mg /= n;
  Mat3 cov = Mat3::Zero();
  double var_e = 0.0, var_g = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const Vec3 de = est[i] - me;
    const Vec3 dg = gt[i] - mg;
    cov += dg * de.transpose();
    var_e += de.squaredNorm();
    var_g += dg.squaredNorm();
  }
  cov /= n;
  var_e /= n;
  var_g /= n;
  const double ext = std::max({1.0, me.cwiseAbs().maxCoeff(), mg.cwiseAbs().maxCoeff()});
  if (var_e <= 1e-24 * ext * ext || var_g <= 1e-24 * ext * ext) throw Error("align: degenerate point set (all positions coincide)");

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 s = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s[2] = -1.0;
  Similarity out;
  out.R = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  if (mode == AlignMode::kSim3) out.scale = svd.singularValues().dot(s) / var_e;
  out.t = mg - out.scale * (out.R * me);
  return out;
}

struct ErrorStats {
  double rmse = 0.0;
  double mean = 0.0;
  double median = 0.0;
};

inline ErrorStats error_stats(std::vector<double> e) {
  ErrorStats s;
  if (e.empty()) return s;
  double sq = 0.0, sum = 0.0;
  for (double x : e) {
    sq += x * x;
    sum += x;
  }
  const double n = static_cast<double>(e.size());
  s.rmse = std::sqrt(sq / n);
  s.mean = sum / n;
  std::sort(e.begin(), e.end());
  const std::size_t m = e.size() / 2;
  s.median = e.size() % 2 ? e[m] : 0.5 * (e[m - 1] + e[m]);
  return s;
}

inline std::vector<Vec3> positions(const std::vector<Pose>& poses) {
  std::vector<Vec3> p;
  p.reserve(poses.size());
  for (const auto& x : poses) p.push_back(x.translation());
  return p;
}

struct AteResult {
  ErrorStats error;
  Similarity alignment;
};

inline AteResult ate(const std::vector<Pose>& est, const std::vector<Pose>& gt, AlignMode mode) {
  if (est.size() != gt.size()) throw Error("ate: trajectories differ in length");
  if (est.empty()) throw Error("ate: empty trajectories");
  AteResult r;
  const auto pe = positions(est);
  const auto pg = positions(gt);
  r.alignment = align_similarity(pe, pg, mode);
  std::vector<double> e(pe.size());
  for (std::size_t i = 0; i < pe.size(); ++i) e[i] = (r.alignment.apply(pe[i]) - pg[i]).norm();
  r.error = error_stats(std::move(e));
  return r;
}

struct RpeResult {
  ErrorStats translation;  // meters per frame
  ErrorStats rotation;     // degrees per frame
};

/// Per consecutive pair: E = (gt_i^-1 gt_{i+1})^-1 (est_i^-1 est_{i+1}).
/// `scale` multiplies the estimate's translations first (monocular correction).
inline RpeResult rpe(const std::vector<Pose>& est, const std::vector<Pose>& gt, double scale = 1.0) {
  if (est.size() != gt.size()) throw Error("rpe: trajectories differ in length");
  if (est.size() < 2) throw Error("rpe: need at least 2 poses");
  std::vector<double> et, er;
  for (std::size_t i = 0; i + 1 < est.size(); ++i) {
    const Pose dg = gt[i].inverse() * gt[i + 1];
    Pose de = est[i].inverse() * est[i + 1];
    de = Pose(de.rotation(), scale * de.translation());
    const Pose e = dg.inverse() * de;
    et.push_back(e.translation().norm());
    er.push_back(rad2deg(rotation_angle(e.rotation())));
  }
  return {error_stats(std::move(et)), error_stats(std::move(er))};
}

enum class EvalMode { kMono, kStereo };

struct EvalResult {
  AteResult ate;
  RpeResult rpe;
  bool aligned = false;
  double scale = 1.0;
};

/// Monocular runs get a similarity alignment and its scale applied to the
/// RPE; stereo runs a rigid alignment for ATE only.
inline EvalResult evaluate(const std::vector<Pose>& est, const std::vector<Pose>& gt, EvalMode mode, bool align = true) {
  EvalResult r;
  const AlignMode am = !align ? AlignMode::kNone : mode == EvalMode::kMono ? AlignMode::kSim3 : AlignMode::kSe3;
  r.ate = ate(est, gt, am);
  r.aligned = am != AlignMode::kNone;
  r.scale = r.ate.alignment.scale;
  r.rpe = rpe(est, gt, r.scale);
  return r;
}

// ---------------------------------------------------------------------------
// Sequences

struct SequenceWindow {
  std::string source;
  std::size_t start = 0;
  std::size_t length = 0;
};

/// Consecutive non-overlapping windows of exactly `length` frames; the
/// trailing remainder is dropped.
inline std::vector<SequenceWindow> cut_sequences(const std::vector<std::pair<std::string, std::size_t>>& sequences,
                                                 std::size_t length = 200) {
  if (length == 0) throw Error("cut_sequences: window length must be positive");
  std::vector<SequenceWindow> out;
  for (const auto& [id, n] : sequences)
    for (std::size_t s = 0; s + length <= n; s += length) out.push_back({id, s, length});
  return out;
}

template <typename T>
std::vector<T> slice(const std::vector<T>& v, const SequenceWindow& w) {
  if (w.start + w.length > v.size()) throw Error("slice: window exceeds the sequence");
  return std::vector<T>(v.begin() + static_cast<std::ptrdiff_t>(w.start),
                        v.begin() + static_cast<std::ptrdiff_t>(w.start + w.length));
}

struct SequenceOutcome {
  std::string id;
  bool tracked = false;
  std::optional<std::vector<Pose>> estimate;
};

inline double success_rate(const std::vector<SequenceOutcome>& outcomes) {
  if (outcomes.empty()) throw Error("success_rate: no outcomes");
  const auto ok = std::count_if(outcomes.begin(), outcomes.end(), [](const SequenceOutcome& o) { return o.tracked; });
  return static_cast<double>(ok) / static_cast<double>(outcomes.size());
}

/// Lines of "id tracked" with tracked in {0, 1}; '#' starts a comment.
inline std::vector<SequenceOutcome> read_outcomes(std::istream& is) {
  std::vector<SequenceOutcome> out;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ss(line);
    std::string id, flag, extra;
    if (!(ss >> id)) continue;
    if (!(ss >> flag) || (ss >> extra)) throw ParseError::at_line("expected 'id tracked'", ln);
    if (flag != "0" && flag != "1") throw ParseError::at_line("tracked flag must be 0 or 1", ln);
    out.push_back({id, flag == "1", std::nullopt});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline void write_eval_text(std::ostream& os, const EvalResult& r, std::optional<double> sr = std::nullopt) {
  char buf[160];
  auto row = [&](const char* name, const ErrorStats& s, const char* unit) {
    std::snprintf(buf, sizeof buf, "%-8s %14.6f %14.6f %14.6f  %s\n", name, s.rmse, s.mean, s.median, unit);
    os << buf;
  };
  std::snprintf(buf, sizeof buf, "%-8s %14s %14s %14s\n", "metric", "rmse", "mean", "median");
  os << buf;
  row("ate", r.ate.error, "m");
  row("rpe_t", r.rpe.translation, "m/frame");
  row("rpe_r", r.rpe.rotation, "deg/frame");
  std::snprintf(buf, sizeof buf, "aligned  %s\nscale    %.9f\n", r.aligned ? "yes" : "no", r.scale);
  os << buf;
  if (sr) {
    std::snprintf(buf, sizeof buf, "sr       %.6f\n", *sr);
    os << buf;
  }
}

inline void write_eval_csv_header(std::ostream& os) {
  os << "sequence,start,frames,ate_rmse,ate_mean,ate_median,rpe_t_rmse,rpe_t_mean,rpe_t_median,"
        "rpe_r_rmse,rpe_r_mean,rpe_r_median,aligned,scale\n";
}

inline void write_eval_csv_row(std::ostream& os, const SequenceWindow& w, const EvalResult& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%.9g\n", w.source.c_str(),
                w.start, w.length, r.ate.error.rmse, r.ate.error.mean, r.ate.error.median, r.rpe.translation.rmse,
                r.rpe.translation.mean, r.rpe.translation.median, r.rpe.rotation.rmse, r.rpe.rotation.mean,
                r.rpe.rotation.median, r.aligned ? 1 : 0, r.scale);
  os << buf;
}

}  // namespace slamgen

#endif  // SLAMGEN_EVALBENCH_HPP
