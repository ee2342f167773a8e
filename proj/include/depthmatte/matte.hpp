#pragma once

// First pass: per-pixel alpha from registered depth plus the color
// adjustments aimed at the foreground. No pixel reads a neighbor here.

#include <cmath>

#include "depthmatte/frame.hpp"
#include "depthmatte/parallel.hpp"
#include "depthmatte/params.hpp"

namespace depthmatte {

/// Opacity for depth d. Fully opaque up to the threshold, fully transparent
/// past threshold + rolloff, smoothstep in between. d == threshold is opaque.
template <class T>
T compute_alpha(T d, T threshold, T rolloff, T invalid_alpha = T(0)) noexcept {
  if (!is_valid_depth(d)) return invalid_alpha;
  if (!(rolloff > T(0))) return d <= threshold ? T(1) : T(0);
  T t = (d - threshold) / rolloff;
  t = t < T(0) ? T(0) : (t > T(1) ? T(1) : t);
  return T(1) - t * t * (T(3) - T(2) * t);
}

template <class T>
Rgb<T> apply_gamma(Rgb<T> rgb, T gamma) noexcept {
  if (gamma == T(1)) return rgb;
  for (auto& v : rgb) v = std::pow(v, gamma);
  return rgb;
}

template <class T>
Rgb<T> apply_gain(Rgb<T> rgb, const Rgb<T>& gain_rgb, T exposure_gain) noexcept {
  for (int c = 0; c < 3; ++c) rgb[c] = clamp01(rgb[c] * gain_rgb[c] * exposure_gain);
  return rgb;
}

/// Gamma, then per-channel gain times exposure, then clamp. Same arithmetic
/// as apply_gain(apply_gamma(...)) applied in place on an RGBA pixel.
template <class T>
struct ColorAdjust {
  T gamma;
  Rgb<T> gain;
  T exposure;

  explicit ColorAdjust(const MatteParams& p)
      : gamma(static_cast<T>(p.gamma)),
        gain{static_cast<T>(p.gain_rgb[0]), static_cast<T>(p.gain_rgb[1]), static_cast<T>(p.gain_rgb[2])},
        exposure(static_cast<T>(p.exposure_gain)) {}

  bool identity() const noexcept {
    return gamma == T(1) && exposure == T(1) && gain[0] == T(1) && gain[1] == T(1) && gain[2] == T(1);
  }

  void operator()(T* rgb) const noexcept {
    for (int c = 0; c < 3; ++c) {
      const T v = gamma == T(1) ? rgb[c] : std::pow(rgb[c], gamma);
      rgb[c] = clamp01(v * gain[c] * exposure);
    }
  }
};

/// Writes the RGBA foreground buffer (straight alpha) into out. When
/// alpha_plane is given it also receives the coverage values, saving the
/// second pass an extraction sweep.
template <class T>
void matte_pass_into(const BasicColorFrame<T>& color, const DepthFrame& depth, const MatteParams& params,
                     BasicColorFrame<T>& out, BasicAlphaMask<T>* alpha_plane = nullptr) {
  require_same_size(color, depth, "matte_pass: color vs registered depth");
  if (!out.same_size(color)) out = BasicColorFrame<T>(color.width(), color.height());
  if (alpha_plane && !alpha_plane->same_size(color)) *alpha_plane = BasicAlphaMask<T>(color.width(), color.height());
  out.frame_index = color.frame_index;
  out.timestamp_ns = color.timestamp_ns;
  const T threshold = static_cast<T>(params.depth_m);
  const T rolloff = static_cast<T>(params.rolloff_m);
  const T invalid_alpha = static_cast<T>(params.invalid_depth_alpha);
  const ColorAdjust<T> adjust(params);
  const bool adjust_fg = params.adjust_target == AdjustTarget::foreground && !adjust.identity();
  const int width = color.width();
  for_each_row(color.height(), static_cast<std::size_t>(width) * 4, [&](int y) {
    const T* src = color.row(y);
    const float* d = depth.row(y);
    T* dst = out.row(y);
    std::copy(src, src + 4 * static_cast<std::size_t>(width), dst);
    if (adjust_fg) {
      for (int x = 0; x < width; ++x) adjust(dst + 4 * x);
    }
    if (alpha_plane) {
      T* a = alpha_plane->row(y);
      for (int x = 0; x < width; ++x) a[x] = compute_alpha(static_cast<T>(d[x]), threshold, rolloff, invalid_alpha);
      for (int x = 0; x < width; ++x) dst[4 * x + 3] = a[x];
    } else {
      for (int x = 0; x < width; ++x) {
        dst[4 * x + 3] = compute_alpha(static_cast<T>(d[x]), threshold, rolloff, invalid_alpha);
      }
    }
  });
}

template <class T>
BasicColorFrame<T> matte_pass(const BasicColorFrame<T>& color, const DepthFrame& depth, const MatteParams& params) {
  BasicColorFrame<T> out;
  matte_pass_into(color, depth, params, out);
  return out;
}

/// Coverage plane of an RGBA buffer.
template <class T>
void extract_alpha_into(const BasicColorFrame<T>& frame, BasicAlphaMask<T>& out) {
  if (!out.same_size(frame)) out = BasicAlphaMask<T>(frame.width(), frame.height());
  const auto src = frame.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[4 * i + 3];
}

template <class T>
BasicAlphaMask<T> extract_alpha(const BasicColorFrame<T>& frame) {
  BasicAlphaMask<T> out;
  extract_alpha_into(frame, out);
  return out;
}

template <class T>
void replace_alpha(BasicColorFrame<T>& frame, const BasicAlphaMask<T>& alpha) {
  require_same_size(frame, alpha, "replace_alpha");
  auto dst = frame.data();
  const auto src = alpha.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[4 * i + 3] = src[i];
}

}  // namespace depthmatte
