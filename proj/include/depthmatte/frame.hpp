#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "depthmatte/error.hpp"

namespace depthmatte {

template <class T>
using Rgb = std::array<T, 3>;

template <class T>
using Rgba = std::array<T, 4>;

namespace detail {

inline void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(Errc::dimension_mismatch,
                "raster must be at least 1x1, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
}

inline int clamp_index(int i, int n) noexcept { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

inline std::size_t area(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

}  // namespace detail

/// Row-major interleaved RGBA raster with unit-interval channels.
template <class T>
class BasicColorFrame {
 public:
  using value_type = T;
  static constexpr int kChannels = 4;

  BasicColorFrame() = default;
  BasicColorFrame(int width, int height, Rgba<T> fill = {0, 0, 0, 1})
      : width_(width), height_(height) {
    detail::check_dims(width, height);
    pixels_.resize(detail::area(width, height) * kChannels);
    for (std::size_t i = 0; i < pixels_.size(); i += kChannels) {
      std::copy(fill.begin(), fill.end(), pixels_.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return detail::area(width_, height_); }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint64_t frame_index = 0;
  std::int64_t timestamp_ns = 0;

  T* pixel(int x, int y) noexcept {
    return pixels_.data() + (static_cast<std::size_t>(y) * width_ + x) * kChannels;
  }
  const T* pixel(int x, int y) const noexcept {
    return pixels_.data() + (static_cast<std::size_t>(y) * width_ + x) * kChannels;
  }
  T* row(int y) noexcept { return pixel(0, y); }
  const T* row(int y) const noexcept { return pixel(0, y); }

  Rgba<T> at(int x, int y) const noexcept {
    const T* p = pixel(x, y);
    return {p[0], p[1], p[2], p[3]};
  }
  void set(int x, int y, Rgba<T> v) noexcept { std::copy(v.begin(), v.end(), pixel(x, y)); }

  std::span<T> data() noexcept { return pixels_; }
  std::span<const T> data() const noexcept { return pixels_; }

  bool same_size(int w, int h) const noexcept { return width_ == w && height_ == h; }

  template <class U>
  bool same_size(const U& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const BasicColorFrame& other) const {
    return width_ == other.width_ && height_ == other.height_ && pixels_ == other.pixels_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> pixels_;
};

/// Single-plane coverage raster, values in [0,1].
template <class T>
class BasicAlphaMask {
 public:
  using value_type = T;

  BasicAlphaMask() = default;
  BasicAlphaMask(int width, int height, T fill = T(0)) : width_(width), height_(height) {
    detail::check_dims(width, height);
    values_.assign(detail::area(width, height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  T& operator()(int x, int y) noexcept { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  T operator()(int x, int y) const noexcept {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }
  T* row(int y) noexcept { return values_.data() + static_cast<std::size_t>(y) * width_; }
  const T* row(int y) const noexcept {
    return values_.data() + static_cast<std::size_t>(y) * width_;
  }

  std::span<T> data() noexcept { return values_; }
  std::span<const T> data() const noexcept { return values_; }

  template <class U>
  bool same_size(const U& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const BasicAlphaMask& other) const {
    return width_ == other.width_ && height_ == other.height_ && values_ == other.values_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
};

/// Depth in meters with float32 storage, matching the capture files.
/// Non-finite or non-positive samples mark missing returns and are kept as-is.
class DepthFrame {
 public:
  DepthFrame() = default;
  DepthFrame(int width, int height, float fill = 0.0f) : width_(width), height_(height) {
    detail::check_dims(width, height);
    depths_.assign(detail::area(width, height), fill);
  }
  DepthFrame(int width, int height, std::vector<float> depths)
      : width_(width), height_(height), depths_(std::move(depths)) {
    detail::check_dims(width, height);
    if (depths_.size() != detail::area(width, height)) {
      throw Error(Errc::size_mismatch, "depth sample count does not match dimensions");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return depths_.size(); }

  std::uint64_t frame_index = 0;

  float& operator()(int x, int y) noexcept {
    return depths_[static_cast<std::size_t>(y) * width_ + x];
  }
  float operator()(int x, int y) const noexcept {
    return depths_[static_cast<std::size_t>(y) * width_ + x];
  }
  float* row(int y) noexcept { return depths_.data() + static_cast<std::size_t>(y) * width_; }
  const float* row(int y) const noexcept {
    return depths_.data() + static_cast<std::size_t>(y) * width_;
  }

  std::span<float> data() noexcept { return depths_; }
  std::span<const float> data() const noexcept { return depths_; }

  template <class U>
  bool same_size(const U& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> depths_;
};

using ColorFrame = BasicColorFrame<float>;
using AlphaMask = BasicAlphaMask<float>;

template <class T>
inline bool is_valid_depth(T d) noexcept {
  return std::isfinite(d) && d > T(0);
}

template <class T>
constexpr T clamp01(T v) noexcept {
  return v < T(0) ? T(0) : (v > T(1) ? T(1) : v);
}

template <class A, class B>
void require_same_size(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(Errc::dimension_mismatch,
                std::string(what) + ": " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
  }
}

}  // namespace depthmatte
