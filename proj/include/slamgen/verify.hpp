#ifndef SLAMGEN_VERIFY_HPP
#define SLAMGEN_VERIFY_HPP

// Consistency checks on generated sequences: photometric error after warping
// by the flow labels, occluded-area screening and collision screening.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "slamgen/error.hpp"
#include "slamgen/labelgen.hpp"
#include "slamgen/raster.hpp"

namespace slamgen {

/// Mean RGB distance between each valid reference pixel and the test image
/// sampled (bilinearly) where the flow sends it. Throws if no pixel is valid.
inline double warp_photometric_error(const RasterImage& rgb_ref, const RasterImage& rgb_tst, const FlowField& flow) {
  const int w = rgb_ref.width();
  const int h = rgb_ref.height();
  if (!rgb_ref.same_shape(rgb_tst) || !rgb_ref.same_shape(flow.flow) || !rgb_ref.same_shape(flow.mask))
    throw Error("warp_photometric_error: image and flow sizes differ");
  if (rgb_ref.channels() != 3 || rgb_tst.channels() != 3) throw Error("warp_photometric_error: expected 3-channel images");
  const auto f = flow.flow.values<float>();
  const auto m = flow.mask.values<std::uint8_t>();
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (m[i] != 0) continue;
      const double u = x + static_cast<double>(f[2 * i]);
      const double v = y + static_cast<double>(f[2 * i + 1]);
      if (u < 0.0 || u >= w || v < 0.0 || v >= h) continue;
      double e2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double d = rgb_ref.at<std::uint8_t>(x, y, c) - sample_bilinear<std::uint8_t>(rgb_tst, u, v, c);
        e2 += d * d;
      }
      sum += std::sqrt(e2);
      ++n;
    }
  }
  if (n == 0) throw Error("warp_photometric_error: no valid pixels");
  return sum / static_cast<double>(n);
}

/// Fraction of pixels carrying any mask bit.
inline double occlusion_fraction(const FlowField& flow) {
  const auto m = flow.mask.values<std::uint8_t>();
  if (m.empty()) return 0.0;
  const auto flagged = std::count_if(m.begin(), m.end(), [](std::uint8_t b) { return b != 0; });
  return static_cast<double>(flagged) / static_cast<double>(m.size());
}

/// Smallest finite depth, +inf when the image has no hits.
inline double min_depth(const RasterImage& depth) {
  double best = std::numeric_limits<double>::infinity();
  for (float z : depth.values<float>())
    if (is_depth_hit(z) || z == 0.0f) best = std::min(best, static_cast<double>(z));
  return best;
}

struct CollisionVerdict {
  double min_depth = 0.0;
  bool pass = true;
};

inline std::vector<CollisionVerdict> collision_check(const std::vector<RasterImage>& depths, double threshold = 0.25) {
  std::vector<CollisionVerdict> out;
  out.reserve(depths.size());
  for (const auto& d : depths) {
    const double z = min_depth(d);
    out.push_back({z, !(z < threshold)});
  }
  return out;
}

struct VerifyThresholds {
  double photometric = 5.0;
  double occlusion = 0.3;
  double collision = 0.25;  // meters
};

struct PairRecord {
  int ref = 0;
  int tst = 0;
  double photometric_error = 0.0;
  double occlusion_fraction = 0.0;
  double min_depth = 0.0;  // min over both frames
  bool photometric_ok = true;
  bool occlusion_ok = true;
  bool collision_ok = true;
};

struct VerifyReport {
  VerifyThresholds thresholds;
  std::vector<PairRecord> pairs;
  std::vector<CollisionVerdict> frames;

  double max_photometric_error() const {
    double m = 0.0;
    for (const auto& p : pairs) m = std::max(m, p.photometric_error);
    return m;
  }
  double max_occlusion_fraction() const {
    double m = 0.0;
    for (const auto& p : pairs) m = std::max(m, p.occlusion_fraction);
    return m;
  }
  double min_depth() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& f : frames) m = std::min(m, f.min_depth);
    return m;
  }
  bool photometric_ok() const { return max_photometric_error() < thresholds.photometric; }
  bool occlusion_ok() const {
    return std::all_of(pairs.begin(), pairs.end(), [](const PairRecord& p) { return p.occlusion_ok; });
  }
  bool collision_ok() const {
    return std::all_of(frames.begin(), frames.end(), [](const CollisionVerdict& f) { return f.pass; });
  }
  bool pass() const { return photometric_ok() && occlusion_ok() && collision_ok(); }
};

/// Checks a sequence of n frames with n-1 flows (flows[i] maps frame i to i+1).
inline VerifyReport verify_sequence(const std::vector<RasterImage>& rgbs, const std::vector<RasterImage>& depths,
                                    const std::vector<FlowField>& flows, const VerifyThresholds& th = {}) {
  if (rgbs.size() != depths.size()) throw Error("verify: rgb and depth frame counts differ");
  if (!rgbs.empty() && flows.size() + 1 != rgbs.size()) throw Error("verify: expected one flow per consecutive pair");
  VerifyReport rep;
  rep.thresholds = th;
  rep.frames = collision_check(depths, th.collision);
  for (std::size_t i = 0; i < flows.size(); ++i) {
    PairRecord p;
    p.ref = static_cast<int>(i);
    p.tst = static_cast<int>(i + 1);
    p.photometric_error = warp_photometric_error(rgbs[i], rgbs[i + 1], flows[i]);
    p.occlusion_fraction = occlusion_fraction(flows[i]);
    p.min_depth = std::min(rep.frames[i].min_depth, rep.frames[i + 1].min_depth);
    p.photometric_ok = p.photometric_error < th.photometric;
    p.occlusion_ok = !(p.occlusion_fraction > th.occlusion);
    p.collision_ok = rep.frames[i].pass && rep.frames[i + 1].pass;
    rep.pairs.push_back(p);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Text form
//
//   # ref tst photometric_error occlusion_fraction min_depth photometric occlusion collision
//   0 1 0.73 0.041 1.25 pass pass pass
//   ...
//   frame <index> <min_depth> <pass|fail>
//   thresholds <photometric> <occlusion> <collision>
//   summary pairs=<n> frames=<n> max_photometric_error=<x> max_occlusion_fraction=<x> min_depth=<x> photometric=<v> occlusion=<v> collision=<v> overall=<v>

namespace detail {

inline std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_num(const std::string& s, std::size_t line) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParseError::at_line("bad number '" + s + "'", line);
  return v;
}

inline const char* verdict(bool ok) { return ok ? "pass" : "fail"; }

inline bool parse_verdict(const std::string& s, std::size_t line) {
  if (s == "pass") return true;
  if (s == "fail") return false;
  throw ParseError::at_line("expected pass or fail, got '" + s + "'", line);
}

}  // namespace detail

inline void write_report(std::ostream& os, const VerifyReport& r) {
  using detail::num;
  using detail::verdict;
  os << "# ref tst photometric_error occlusion_fraction min_depth photometric occlusion collision\n";
  for (const auto& p : r.pairs)
    os << p.ref << ' ' << p.tst << ' ' << num(p.photometric_error) << ' ' << num(p.occlusion_fraction) << ' '
       << num(p.min_depth) << ' ' << verdict(p.photometric_ok) << ' ' << verdict(p.occlusion_ok) << ' '
       << verdict(p.collision_ok) << '\n';
  for (std::size_t i = 0; i < r.frames.size(); ++i)
    os << "frame " << i << ' ' << num(r.frames[i].min_depth) << ' ' << verdict(r.frames[i].pass) << '\n';
  os << "thresholds " << num(r.thresholds.photometric) << ' ' << num(r.thresholds.occlusion) << ' '
     << num(r.thresholds.collision) << '\n';
  os << "summary pairs=" << r.pairs.size() << " frames=" << r.frames.size()
     << " max_photometric_error=" << num(r.max_photometric_error())
     << " max_occlusion_fraction=" << num(r.max_occlusion_fraction()) << " min_depth=" << num(r.min_depth())
     << " photometric=" << verdict(r.photometric_ok()) << " occlusion=" << verdict(r.occlusion_ok())
     << " collision=" << verdict(r.collision_ok()) << " overall=" << verdict(r.pass()) << '\n';
}

inline VerifyReport read_report(std::istream& is) {
  VerifyReport r;
  std::string line;
  std::size_t ln = 0;
  bool summary = false;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok[0] == "summary") {
      summary = true;
      continue;
    }
    if (tok[0] == "frame") {
      if (tok.size() != 4) throw ParseError::at_line("frame line needs 3 fields", ln);
      CollisionVerdict f{detail::parse_num(tok[2], ln), detail::parse_verdict(tok[3], ln)};
      r.frames.push_back(f);
      continue;
    }
    if (tok[0] == "thresholds") {
      if (tok.size() != 4) throw ParseError::at_line("thresholds line needs 3 fields", ln);
      r.thresholds = {detail::parse_num(tok[1], ln), detail::parse_num(tok[2], ln), detail::parse_num(tok[3], ln)};
      continue;
    }
    if (tok.size() != 8) throw ParseError::at_line("pair line needs 8 fields", ln);
    PairRecord p;
    p.ref = static_cast<int>(detail::parse_num(tok[0], ln));
    p.tst = static_cast<int>(detail::parse_num(tok[1], ln));
    p.photometric_error = detail::parse_num(tok[2], ln);
    p.occlusion_fraction = detail::parse_num(tok[3], ln);
    p.min_depth = detail::parse_num(tok[4], ln);
    p.photometric_ok = detail::parse_verdict(tok[5], ln);
    p.occlusion_ok = detail::parse_verdict(tok[6], ln);
    p.collision_ok = detail::parse_verdict(tok[7], ln);
    r.pairs.push_back(p);
  }
  if (!summary) throw ParseError::at_line("missing summary line", ln);
  return r;
}

}  // namespace slamgen

#endif  // SLAMGEN_VERIFY_HPP
