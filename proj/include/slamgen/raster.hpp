#ifndef SLAMGEN_RASTER_HPP
#define SLAMGEN_RASTER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "slamgen/error.hpp"

namespace slamgen {

/// Element type tag. Numeric values are the on-disk dtype codes.
enum class DType : std::uint8_t { kU8 = 1, kU16 = 2, kF32 = 3 };

inline std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::kU8: return 1;
    case DType::kU16: return 2;
    case DType::kF32: return 4;
  }
  throw Error("unknown dtype code " + std::to_string(static_cast<int>(t)));
}

inline const char* dtype_name(DType t) {
  switch (t) {
    case DType::kU8: return "u8";
    case DType::kU16: return "u16";
    case DType::kF32: return "f32";
  }
  return "?";
}

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, std::uint8_t>) return DType::kU8;
  else if constexpr (std::is_same_v<T, std::uint16_t>) return DType::kU16;
  else {
    static_assert(std::is_same_v<T, float>, "RasterImage supports u8, u16 and f32");
    return DType::kF32;
  }
}

/// Miss sentinel stored in depth images.
inline constexpr float kDepthMiss = std::numeric_limits<float>::max();

inline bool is_depth_hit(float z) { return z > 0.0f && z < kDepthMiss; }

/// Typed 2-D grid, row-major and channel-interleaved.
class RasterImage {
 public:
  using Buffer = std::variant<std::vector<std::uint8_t>, std::vector<std::uint16_t>, std::vector<float>>;

  RasterImage() : data_(std::vector<std::uint8_t>{}) {}

  RasterImage(int width, int height, int channels, DType dtype)
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels <= 0 || channels > 255)
      throw Error("raster: invalid shape");
    const std::size_t n = element_count();
    switch (dtype) {
      case DType::kU8: data_ = std::vector<std::uint8_t>(n); break;
      case DType::kU16: data_ = std::vector<std::uint16_t>(n); break;
      case DType::kF32: data_ = std::vector<float>(n); break;
    }
  }

  template <typename T>
  static RasterImage filled(int width, int height, int channels, T value) {
    RasterImage img(width, height, channels, dtype_of<T>());
    for (T& x : img.values<T>()) x = value;
    return img;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  DType dtype() const { return static_cast<DType>(data_.index() + 1); }
  std::size_t element_count() const {
    return static_cast<std::size_t>(width_) * height_ * channels_;
  }
  std::size_t byte_size() const { return element_count() * dtype_size(dtype()); }

  template <typename T>
  std::span<T> values() {
    check_type<T>();
    return std::get<std::vector<T>>(data_);
  }
  template <typename T>
  std::span<const T> values() const {
    check_type<T>();
    return std::get<std::vector<T>>(data_);
  }

  template <typename T>
  T& at(int x, int y, int c = 0) {
    return values<T>()[index(x, y, c)];
  }
  template <typename T>
  const T& at(int x, int y, int c = 0) const {
    return values<T>()[index(x, y, c)];
  }

  bool same_shape(const RasterImage& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }

  bool operator==(const RasterImage& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_ &&
           data_ == o.data_;
  }

 private:
  template <typename T>
  void check_type() const {
    if (dtype() != dtype_of<T>())
      throw Error(std::string("raster: dtype mismatch, image is ") + dtype_name(dtype()) +
                  ", requested " + dtype_name(dtype_of<T>()));
  }
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  Buffer data_;
};

/// Bilinear sample of channel c at sub-pixel (u, v); pixel centers at
/// integer coordinates, coordinates clamped to the border.
template <typename T>
double sample_bilinear(const RasterImage& img, double u, double v, int c = 0) {
  const double uc = std::clamp(u, 0.0, static_cast<double>(img.width() - 1));
  const double vc = std::clamp(v, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(std::floor(uc));
  const int y0 = static_cast<int>(std::floor(vc));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double ax = uc - x0;
  const double ay = vc - y0;
  const double v00 = img.at<T>(x0, y0, c);
  const double v10 = img.at<T>(x1, y0, c);
  const double v01 = img.at<T>(x0, y1, c);
  const double v11 = img.at<T>(x1, y1, c);
  return (1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) + ay * ((1.0 - ax) * v01 + ax * v11);
}

}  // namespace slamgen

#endif  // SLAMGEN_RASTER_HPP
