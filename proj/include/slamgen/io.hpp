#ifndef SLAMGEN_IO_HPP
#define SLAMGEN_IO_HPP

// File formats. Binary formats are little-endian regardless of host.
//
//   poses   text, one frame per line: "tx ty tz qx qy qz qw" (camera to world)
//   TTNR    "TTNR" u8 version=1, u8 dtype {1=u8,2=u16,3=f32}, u8 channels,
//           u32 width, u32 height, row-major interleaved data
//   TOCC    "TOCC" u8 version=1, f32 resolution, 3 x f32 origin, 3 x u32 dims,
//           one byte per cell {0 unknown, 1 free, 2 occupied}, x fastest
//   TLDR    "TLDR" u32 count, count x (f32 x, f32 y, f32 z)

#include <bit>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "slamgen/error.hpp"
#include "slamgen/geom.hpp"
#include "slamgen/occupancy.hpp"
#include "slamgen/raster.hpp"

namespace slamgen {

using Bytes = std::vector<std::uint8_t>;

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const Bytes& data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!f) throw Error("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, Bytes(text.begin(), text.end()));
}

namespace detail {

class ByteWriter {
 public:
  void raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  Bytes take() { return std::move(out_); }
  void reserve(std::size_t n) { out_.reserve(n); }

 private:
  template <typename U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

class ByteReader {
 public:
  ByteReader(const Bytes& data, const char* format) : data_(data), format_(format) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  void magic(std::string_view m) {
    need(m.size(), "magic");
    if (std::memcmp(data_.data() + pos_, m.data(), m.size()) != 0)
      throw ParseError::at_offset(std::string(format_) + ": bad magic, expected \"" + std::string(m) + "\"", pos_);
    pos_ += m.size();
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return data_[pos_++];
  }
  std::uint16_t u16(const char* what) { return le<std::uint16_t>(what); }
  std::uint32_t u32(const char* what) { return le<std::uint32_t>(what); }
  float f32(const char* what) { return std::bit_cast<float>(le<std::uint32_t>(what)); }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw ParseError::at_offset(std::string(format_) + ": truncated while reading " + what + " (" +
                                      std::to_string(n) + " bytes needed, " + std::to_string(remaining()) + " left)",
                                  data_.size());
  }
  void finish() const {
    if (remaining() != 0)
      throw ParseError::at_offset(std::string(format_) + ": " + std::to_string(remaining()) + " trailing bytes", pos_);
  }

 private:
  template <typename U>
  U le(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(data_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  const Bytes& data_;
  const char* format_;
  std::size_t pos_ = 0;
};

inline std::string shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Poses

inline void write_poses(std::ostream& os, const std::vector<Pose>& poses) {
  for (const auto& p : poses) {
    const Vec3& t = p.translation();
    const Quat& q = p.rotation();
    os << detail::shortest(t.x()) << ' ' << detail::shortest(t.y()) << ' ' << detail::shortest(t.z()) << ' '
       << detail::shortest(q.x()) << ' ' << detail::shortest(q.y()) << ' ' << detail::shortest(q.z()) << ' '
       << detail::shortest(q.w()) << '\n';
  }
}

inline std::string poses_to_string(const std::vector<Pose>& poses) {
  std::ostringstream os;
  write_poses(os, poses);
  return os.str();
}

/// Blank lines and lines starting with '#' are skipped.
inline std::vector<Pose> read_poses(std::istream& is) {
  std::vector<Pose> out;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    double v[7];
    int n = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p == end) break;
      if (n == 7) throw ParseError::at_line("pose line has more than 7 fields", ln);
      auto r = std::from_chars(p, end, v[n]);
      if (r.ec != std::errc() || (r.ptr < end && *r.ptr != ' ' && *r.ptr != '\t'))
        throw ParseError::at_line("pose field " + std::to_string(n + 1) + " is not a number", ln);
      p = r.ptr;
      ++n;
    }
    if (n != 7) throw ParseError::at_line("pose line has " + std::to_string(n) + " fields, expected 7", ln);
    try {
      out.push_back(Pose::from_xyzw(v[0], v[1], v[2], v[3], v[4], v[5], v[6]));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError::at_line(e.what(), ln);
    }
  }
  return out;
}

inline std::vector<Pose> poses_from_string(const std::string& s) {
  std::istringstream is(s);
  return read_poses(is);
}

inline void save_poses(const std::filesystem::path& path, const std::vector<Pose>& poses) {
  write_text_file(path, poses_to_string(poses));
}
inline std::vector<Pose> load_poses(const std::filesystem::path& path) { return poses_from_string(read_text_file(path)); }

// ---------------------------------------------------------------------------
// TTNR rasters

inline Bytes encode_raster(const RasterImage& img) {
  detail::ByteWriter w;
  w.reserve(15 + img.byte_size());
  w.raw("TTNR");
  w.u8(1);
  w.u8(static_cast<std::uint8_t>(img.dtype()));
  w.u8(static_cast<std::uint8_t>(img.channels()));
  w.u32(static_cast<std::uint32_t>(img.width()));
  w.u32(static_cast<std::uint32_t>(img.height()));
  switch (img.dtype()) {
    case DType::kU8:
      for (auto v : img.values<std::uint8_t>()) w.u8(v);
      break;
    case DType::kU16:
      for (auto v : img.values<std::uint16_t>()) w.u16(v);
      break;
    case DType::kF32:
      for (auto v : img.values<float>()) w.f32(v);
      break;
  }
  return w.take();
}

inline RasterImage decode_raster(const Bytes& data) {
  detail::ByteReader r(data, "TTNR");
  r.magic("TTNR");
  const std::size_t at_version = r.offset();
  if (const auto v = r.u8("version"); v != 1)
    throw ParseError::at_offset("TTNR: unsupported version " + std::to_string(v), at_version);
  const std::size_t at_dtype = r.offset();
  const auto code = r.u8("dtype");
  if (code < 1 || code > 3) throw ParseError::at_offset("TTNR: unknown dtype code " + std::to_string(code), at_dtype);
  const std::size_t at_channels = r.offset();
  const auto channels = r.u8("channels");
  if (channels == 0) throw ParseError::at_offset("TTNR: zero channels", at_channels);
  const std::uint32_t width = r.u32("width");
  const std::uint32_t height = r.u32("height");
  if (width > 1u << 20 || height > 1u << 20) throw ParseError::at_offset("TTNR: implausible image size", 7);
  const auto dtype = static_cast<DType>(code);
  RasterImage img(static_cast<int>(width), static_cast<int>(height), channels, dtype);
  r.need(img.byte_size(), "pixel data");
  switch (dtype) {
    case DType::kU8:
      for (auto& v : img.values<std::uint8_t>()) v = r.u8("pixel data");
      break;
    case DType::kU16:
      for (auto& v : img.values<std::uint16_t>()) v = r.u16("pixel data");
      break;
    case DType::kF32:
      for (auto& v : img.values<float>()) v = r.f32("pixel data");
      break;
  }
  r.finish();
  return img;
}

/// Decodes and checks the element type and channel count.
inline RasterImage decode_raster(const Bytes& data, DType expect, int channels) {
  RasterImage img = decode_raster(data);
  if (img.dtype() != expect || img.channels() != channels)
    throw ParseError::at_offset(std::string("TTNR: expected ") + dtype_name(expect) + " x" + std::to_string(channels) +
                                    ", file holds " + dtype_name(img.dtype()) + " x" + std::to_string(img.channels()),
                                5);
  return img;
}

inline void save_raster(const std::filesystem::path& path, const RasterImage& img) { write_file(path, encode_raster(img)); }
inline RasterImage load_raster(const std::filesystem::path& path) { return decode_raster(read_file(path)); }

// ---------------------------------------------------------------------------
// TOCC grids

inline Bytes encode_grid(const OccupancyGrid& g) {
  detail::ByteWriter w;
  w.reserve(37 + g.size());
  w.raw("TOCC");
  w.u8(1);
  w.f32(static_cast<float>(g.resolution()));
  for (int a = 0; a < 3; ++a) w.f32(static_cast<float>(g.origin()[a]));
  for (int a = 0; a < 3; ++a) w.u32(static_cast<std::uint32_t>(g.dims()[a]));
  for (auto c : g.raw()) w.u8(c);
  return w.take();
}

inline OccupancyGrid decode_grid(const Bytes& data) {
  detail::ByteReader r(data, "TOCC");
  r.magic("TOCC");
  if (const auto v = r.u8("version"); v != 1) throw ParseError::at_offset("TOCC: unsupported version " + std::to_string(v), 4);
  const float res = r.f32("resolution");
  if (!(res > 0.0f) || !std::isfinite(res)) throw ParseError::at_offset("TOCC: resolution must be positive", 5);
  Vec3 origin;
  for (int a = 0; a < 3; ++a) origin[a] = r.f32("origin");
  Index3 dims;
  for (int a = 0; a < 3; ++a) {
    const std::size_t at = r.offset();
    const std::uint32_t d = r.u32("dims");
    if (d == 0 || d > 1u << 16) throw ParseError::at_offset("TOCC: invalid dimension " + std::to_string(d), at);
    dims[a] = static_cast<int>(d);
  }
  OccupancyGrid g(origin, res, dims);
  r.need(g.size(), "cells");
  const std::size_t base = r.offset();
  std::vector<std::uint8_t> cells(g.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    cells[k] = r.u8("cells");
    if (cells[k] > 2) throw ParseError::at_offset("TOCC: invalid cell state " + std::to_string(cells[k]), base + k);
  }
  r.finish();
  g.assign_raw(std::move(cells));
  return g;
}

inline void save_grid(const std::filesystem::path& path, const OccupancyGrid& g) { write_file(path, encode_grid(g)); }
inline OccupancyGrid load_grid(const std::filesystem::path& path) { return decode_grid(read_file(path)); }

// ---------------------------------------------------------------------------
// TLDR point lists

inline Bytes encode_points(const std::vector<Vec3>& pts) {
  detail::ByteWriter w;
  w.reserve(8 + 12 * pts.size());
  w.raw("TLDR");
  w.u32(static_cast<std::uint32_t>(pts.size()));
  for (const auto& p : pts)
    for (int a = 0; a < 3; ++a) w.f32(static_cast<float>(p[a]));
  return w.take();
}

inline std::vector<Vec3> decode_points(const Bytes& data) {
  detail::ByteReader r(data, "TLDR");
  r.magic("TLDR");
  const std::uint32_t n = r.u32("count");
  r.need(static_cast<std::size_t>(n) * 12, "points");
  std::vector<Vec3> pts(n);
  for (auto& p : pts)
    for (int a = 0; a < 3; ++a) p[a] = r.f32("points");
  r.finish();
  return pts;
}

inline void save_points(const std::filesystem::path& path, const std::vector<Vec3>& pts) { write_file(path, encode_points(pts)); }
inline std::vector<Vec3> load_points(const std::filesystem::path& path) { return decode_points(read_file(path)); }

}  // namespace slamgen

#endif  // SLAMGEN_IO_HPP
