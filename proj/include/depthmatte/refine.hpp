#pragma once

// Second pass: grayscale close of the coverage plane, background adjustment
// and the final mix. The close reads neighbors, so it runs only after the
// whole first-pass buffer exists, and erosion only after dilation finished.

#include <algorithm>
#include <cmath>
#include <vector>

#include "depthmatte/frame.hpp"
#include "depthmatte/matte.hpp"
#include "depthmatte/parallel.hpp"
#include "depthmatte/params.hpp"

namespace depthmatte {

inline constexpr int kMaxCloseKernel = 9;

/// Bands the continuous UI slider onto a square kernel size:
/// [0,3) off, [3,5) 3x3, [5,7) 5x5, [7,9) 7x7, [9,inf) 9x9.
inline int kernel_from_slider(double v) noexcept {
  if (!(v >= 3.0)) return 0;
  if (v < 5.0) return 3;
  if (v < 7.0) return 5;
  if (v < 9.0) return 7;
  return 9;
}

inline bool is_close_kernel(int k) noexcept { return k == 0 || k == 3 || k == 5 || k == 7 || k == 9; }

namespace detail {

inline void check_morph_kernel(int k) {
  if (k != 0 && (k < 1 || k % 2 == 0)) {
    throw Error(Errc::bad_kernel, "morphology kernel must be 0 or odd, got " + std::to_string(k));
  }
}

struct MaxOp {
  template <class T>
  static T apply(T a, T b) noexcept { return a < b ? b : a; }
};
struct MinOp {
  template <class T>
  static T apply(T a, T b) noexcept { return b < a ? b : a; }
};

// Horizontal window over one row with clamp-to-edge. The row is padded once
// and then combined offset by offset so the inner loop vectorizes.
template <class Op, class T>
void window_row(const T* src, int width, int k, std::vector<T>& pad, T* dst) {
  const int r = k / 2;
  pad.resize(static_cast<std::size_t>(width + 2 * r));
  std::fill(pad.begin(), pad.begin() + r, src[0]);
  std::copy(src, src + width, pad.begin() + r);
  std::fill(pad.begin() + r + width, pad.end(), src[width - 1]);
  const T* p = pad.data();
  std::copy(p, p + width, dst);
  for (int j = 1; j < k; ++j) {
    const T* q = p + j;
    for (int x = 0; x < width; ++x) dst[x] = Op::apply(dst[x], q[x]);
  }
}

inline constexpr int kMorphBlockRows = 64;

// Separable k x k window (horizontal then vertical) fused per block of output
// rows: the horizontal results live in a ring of k rows, so the intermediate
// plane never round-trips through memory. Virtual row j holds the filtered
// source row clamp(j) and sits in ring slot j mod k.
template <class Op, class T>
void window_2d(const BasicAlphaMask<T>& in, BasicAlphaMask<T>& out, int k) {
  const int r = k / 2;
  const int width = in.width();
  const int height = in.height();
  const int blocks = (height + kMorphBlockRows - 1) / kMorphBlockRows;
  const auto w = static_cast<std::size_t>(width);
  for_each_row(blocks, w * kMorphBlockRows * static_cast<std::size_t>(k), [&](int b) {
    thread_local std::vector<T> ring;
    thread_local std::vector<T> pad;
    ring.resize(w * static_cast<std::size_t>(k));
    auto slot = [&](int j) { return ring.data() + static_cast<std::size_t>(((j % k) + k) % k) * w; };
    const int y0 = b * kMorphBlockRows;
    const int y1 = std::min(height, y0 + kMorphBlockRows);
    for (int j = y0 - r; j < y0 + r; ++j) window_row<Op>(in.row(clamp_index(j, height)), width, k, pad, slot(j));
    for (int y = y0; y < y1; ++y) {
      window_row<Op>(in.row(clamp_index(y + r, height)), width, k, pad, slot(y + r));
      T* dst = out.row(y);
      const T* first = slot(y - r);
      std::copy(first, first + width, dst);
      for (int j = y - r + 1; j <= y + r; ++j) {
        const T* src = slot(j);
        for (int x = 0; x < width; ++x) dst[x] = Op::apply(dst[x], src[x]);
      }
    }
  });
}

}  // namespace detail

/// Reusable scratch for the separable morphology; one per pipeline worker.
template <class T>
class BasicMorphology {
 public:
  /// Windowed max over a k x k square.
  void dilate(const BasicAlphaMask<T>& in, int k, BasicAlphaMask<T>& out) {
    apply<detail::MaxOp>(in, k, out);
  }

  /// Windowed min over a k x k square.
  void erode(const BasicAlphaMask<T>& in, int k, BasicAlphaMask<T>& out) {
    apply<detail::MinOp>(in, k, out);
  }

  /// Dilation then erosion with the same kernel; k = 0 bypasses.
  void close(const BasicAlphaMask<T>& in, int k, BasicAlphaMask<T>& out) {
    if (!is_close_kernel(k)) {
      throw Error(Errc::bad_kernel, "close kernel must be one of 0,3,5,7,9, got " + std::to_string(k));
    }
    if (k == 0) {
      out = in;
      return;
    }
    apply<detail::MaxOp>(in, k, dilated_);
    apply<detail::MinOp>(dilated_, k, out);
  }

 private:
  template <class Op>
  void apply(const BasicAlphaMask<T>& in, int k, BasicAlphaMask<T>& out) {
    detail::check_morph_kernel(k);
    if (!out.same_size(in)) out = BasicAlphaMask<T>(in.width(), in.height());
    if (k <= 1) {
      std::copy(in.data().begin(), in.data().end(), out.data().begin());
      return;
    }
    detail::window_2d<Op>(in, out, k);
  }

  BasicAlphaMask<T> dilated_;
};

using Morphology = BasicMorphology<float>;

template <class T>
BasicAlphaMask<T> dilate(const BasicAlphaMask<T>& mask, int k) {
  BasicAlphaMask<T> out;
  BasicMorphology<T>{}.dilate(mask, k, out);
  return out;
}

template <class T>
BasicAlphaMask<T> erode(const BasicAlphaMask<T>& mask, int k) {
  BasicAlphaMask<T> out;
  BasicMorphology<T>{}.erode(mask, k, out);
  return out;
}

template <class T>
BasicAlphaMask<T> close_alpha(const BasicAlphaMask<T>& mask, int k) {
  BasicAlphaMask<T> out;
  BasicMorphology<T>{}.close(mask, k, out);
  return out;
}

/// out = fg * a + bg' * (1 - a) with a taken from fg's straight alpha and bg'
/// the background after the color adjustment when it is the target. Output
/// alpha is 1.
template <class T>
void composite_into(const BasicColorFrame<T>& fg, const BasicColorFrame<T>& bg, const MatteParams& params,
                    BasicColorFrame<T>& out) {
  require_same_size(fg, bg, "composite: foreground vs background");
  if (!out.same_size(fg)) out = BasicColorFrame<T>(fg.width(), fg.height());
  out.frame_index = fg.frame_index;
  out.timestamp_ns = fg.timestamp_ns;
  const ColorAdjust<T> adjust(params);
  const bool adjust_bg = params.adjust_target == AdjustTarget::background && !adjust.identity();
  const int width = fg.width();
  for_each_row(fg.height(), static_cast<std::size_t>(width) * 4, [&](int y) {
    const T* f = fg.row(y);
    const T* b = bg.row(y);
    T* dst = out.row(y);
    if (adjust_bg) {
      for (int x = 0; x < width; ++x) {
        T back[3] = {b[4 * x + 0], b[4 * x + 1], b[4 * x + 2]};
        adjust(back);
        const T a = f[4 * x + 3];
        const T ia = T(1) - a;
        for (int c = 0; c < 3; ++c) dst[4 * x + c] = clamp01(f[4 * x + c] * a + back[c] * ia);
        dst[4 * x + 3] = T(1);
      }
      return;
    }
    for (int x = 0; x < width; ++x) {
      const T a = f[4 * x + 3];
      const T ia = T(1) - a;
      for (int c = 0; c < 3; ++c) dst[4 * x + c] = clamp01(f[4 * x + c] * a + b[4 * x + c] * ia);
      dst[4 * x + 3] = T(1);
    }
  });
}

template <class T>
BasicColorFrame<T> composite(const BasicColorFrame<T>& fg, const BasicColorFrame<T>& bg, const MatteParams& params) {
  BasicColorFrame<T> out;
  composite_into(fg, bg, params, out);
  return out;
}

}  // namespace depthmatte
