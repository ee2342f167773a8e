#pragma once

// Registration of the low-resolution depth raster onto the color raster.
//
// Sampling follows GPU texture conventions: output pixel x samples the
// source at (x + 0.5) * src / dst - 0.5, with clamp-to-edge addressing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "depthmatte/frame.hpp"
#include "depthmatte/parallel.hpp"

namespace depthmatte {

enum class DepthInterp { linear, nearest };

namespace detail {

struct Tap {
  int i0;
  int i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

// Linear-filter taps along one axis. Weights are exactly 0 on sample centers.
inline std::vector<Tap> linear_taps(int extent, int dst, int offset = 0) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  // u = (x + 0.5) * extent / dst - 0.5 = ((2x + 1) * extent - dst) / (2 * dst),
  // split in integer arithmetic so sample centers land exactly.
  const std::int64_t den = 2 * std::int64_t(dst);
  for (int x = 0; x < dst; ++x) {
    const std::int64_t num = (2 * std::int64_t(x) + 1) * extent - dst;
    std::int64_t q = num / den;
    std::int64_t r = num % den;
    if (r < 0) {
      r += den;
      --q;
    }
    const double w = double(r) / double(den);
    int i0 = static_cast<int>(q);
    int i1 = i0 + 1;
    i0 = std::clamp(i0, 0, extent - 1);
    i1 = std::clamp(i1, 0, extent - 1);
    taps[static_cast<std::size_t>(x)] = {i0 + offset, i1 + offset, w};
  }
  return taps;
}

inline std::vector<int> nearest_taps(int src, int dst) {
  std::vector<int> taps(static_cast<std::size_t>(dst));
  const double scale = double(src) / double(dst);
  for (int x = 0; x < dst; ++x) {
    taps[static_cast<std::size_t>(x)] = std::clamp(static_cast<int>(std::floor((x + 0.5) * scale)), 0, src - 1);
  }
  return taps;
}

}  // namespace detail

/// Upscales depth to (target_w, target_h). A tap with nonzero weight on an
/// invalid sample makes the output invalid (NaN) instead of blending a
/// missing return into real geometry.
inline void upscale_depth_into(const DepthFrame& depth, int target_w, int target_h, DepthFrame& out,
                               DepthInterp interp = DepthInterp::linear) {
  if (target_w < depth.width() || target_h < depth.height()) {
    throw Error(Errc::bad_target, "target " + std::to_string(target_w) + "x" + std::to_string(target_h) +
                                      " is smaller than source " + std::to_string(depth.width()) + "x" +
                                      std::to_string(depth.height()));
  }
  if (out.width() != target_w || out.height() != target_h) out = DepthFrame(target_w, target_h);
  out.frame_index = depth.frame_index;
  constexpr float kInvalid = std::numeric_limits<float>::quiet_NaN();
  if (depth.width() == target_w && depth.height() == target_h) {
    std::transform(depth.data().begin(), depth.data().end(), out.data().begin(),
                   [](float d) { return is_valid_depth(d) ? d : kInvalid; });
    return;
  }

  if (interp == DepthInterp::nearest) {
    const auto xs = detail::nearest_taps(depth.width(), target_w);
    const auto ys = detail::nearest_taps(depth.height(), target_h);
    for_each_row(target_h, static_cast<std::size_t>(target_w), [&](int y) {
      const float* src = depth.row(ys[static_cast<std::size_t>(y)]);
      float* dst = out.row(y);
      for (int x = 0; x < target_w; ++x) {
        const float d = src[xs[static_cast<std::size_t>(x)]];
        dst[x] = is_valid_depth(d) ? d : kInvalid;
      }
    });
    return;
  }

  // Separable: horizontal pass over every source row into a double buffer,
  // then a vertical pass per output row. Invalid samples become NaN first so
  // any tap with nonzero weight on them poisons the result; zero-weight taps
  // are skipped and cannot.
  const auto xs = detail::linear_taps(depth.width(), target_w);
  const auto ys = detail::linear_taps(depth.height(), target_h);
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> horiz(static_cast<std::size_t>(depth.height()) * target_w);
  for_each_row(depth.height(), static_cast<std::size_t>(target_w), [&](int y) {
    const float* src = depth.row(y);
    double* dst = horiz.data() + static_cast<std::size_t>(y) * target_w;
    for (int x = 0; x < target_w; ++x) {
      const auto& tx = xs[static_cast<std::size_t>(x)];
      const float a = src[tx.i0];
      const float b = src[tx.i1];
      const double va = is_valid_depth(a) ? double(a) : nan;
      const double vb = is_valid_depth(b) ? double(b) : nan;
      dst[x] = tx.w1 == 0.0 ? va : (1.0 - tx.w1) * va + tx.w1 * vb;
    }
  });
  for_each_row(target_h, static_cast<std::size_t>(target_w), [&](int y) {
    const auto& ty = ys[static_cast<std::size_t>(y)];
    const double* r0 = horiz.data() + static_cast<std::size_t>(ty.i0) * target_w;
    const double* r1 = horiz.data() + static_cast<std::size_t>(ty.i1) * target_w;
    float* dst = out.row(y);
    if (ty.w1 == 0.0) {
      for (int x = 0; x < target_w; ++x) dst[x] = static_cast<float>(r0[x]);
      return;
    }
    const double w0 = 1.0 - ty.w1;
    const double w1 = ty.w1;
    for (int x = 0; x < target_w; ++x) dst[x] = static_cast<float>(w0 * r0[x] + w1 * r1[x]);
  });
}

inline DepthFrame upscale_depth(const DepthFrame& depth, int target_w, int target_h,
                                DepthInterp interp = DepthInterp::linear) {
  DepthFrame out;
  upscale_depth_into(depth, target_w, target_h, out, interp);
  return out;
}

struct CropRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

/// Largest centered window of (width, height) with the aspect of target.
inline CropRect center_crop_rect(int width, int height, int target_w, int target_h) {
  CropRect r{0, 0, width, height};
  const auto lhs = std::int64_t(width) * target_h;
  const auto rhs = std::int64_t(height) * target_w;
  if (lhs > rhs) {
    r.width = static_cast<int>((std::int64_t(height) * target_w + target_h / 2) / target_h);
    r.width = std::clamp(r.width, 1, width);
    r.x = (width - r.width) / 2;
  } else if (lhs < rhs) {
    r.height = static_cast<int>((std::int64_t(width) * target_h + target_w / 2) / target_w);
    r.height = std::clamp(r.height, 1, height);
    r.y = (height - r.height) / 2;
  }
  return r;
}

/// Center-crops color to the target aspect ratio, then bilinearly resamples
/// the crop to (target_w, target_h). Samples never reach outside the crop.
template <class T>
void center_crop_scale_into(const BasicColorFrame<T>& color, int target_w, int target_h,
                            BasicColorFrame<T>& out) {
  detail::check_dims(target_w, target_h);
  if (out.width() != target_w || out.height() != target_h) out = BasicColorFrame<T>(target_w, target_h);
  out.frame_index = color.frame_index;
  out.timestamp_ns = color.timestamp_ns;
  if (color.same_size(target_w, target_h)) {
    std::copy(color.data().begin(), color.data().end(), out.data().begin());
    return;
  }
  const auto crop = center_crop_rect(color.width(), color.height(), target_w, target_h);
  const auto xs = detail::linear_taps(crop.width, target_w, crop.x);
  const auto ys = detail::linear_taps(crop.height, target_h, crop.y);
  for_each_row(target_h, static_cast<std::size_t>(target_w) * 4, [&](int y) {
    const auto& ty = ys[static_cast<std::size_t>(y)];
    const T* r0 = color.row(ty.i0);
    const T* r1 = color.row(ty.i1);
    const T wy1 = static_cast<T>(ty.w1);
    T* dst = out.row(y);
    for (int x = 0; x < target_w; ++x) {
      const auto& tx = xs[static_cast<std::size_t>(x)];
      const T wx1 = static_cast<T>(tx.w1);
      const T* a = r0 + 4 * tx.i0;
      const T* b = r0 + 4 * tx.i1;
      const T* c = r1 + 4 * tx.i0;
      const T* d = r1 + 4 * tx.i1;
      // a + w * (b - a): equal taps reproduce their value exactly.
      for (int ch = 0; ch < 4; ++ch) {
        const T top = a[ch] + wx1 * (b[ch] - a[ch]);
        const T bottom = c[ch] + wx1 * (d[ch] - c[ch]);
        dst[4 * x + ch] = clamp01(top + wy1 * (bottom - top));
      }
    }
  });
}

template <class T>
BasicColorFrame<T> center_crop_scale(const BasicColorFrame<T>& color, int target_w, int target_h) {
  BasicColorFrame<T> out;
  center_crop_scale_into(color, target_w, target_h, out);
  return out;
}

}  // namespace depthmatte
