#pragma once

// Optional denoisers for sensor-noisy color input. All three act on RGB only,
// leave alpha untouched, and address out-of-frame taps with clamp-to-edge.

#include <algorithm>
#include <cmath>
#include <vector>

#include "depthmatte/frame.hpp"
#include "depthmatte/parallel.hpp"
#include "depthmatte/params.hpp"

namespace depthmatte {

namespace detail {

inline void check_odd_kernel(int ksize) {
  if (ksize < 1 || ksize % 2 == 0) {
    throw Error(Errc::bad_kernel, "kernel size must be odd and >= 1, got " + std::to_string(ksize));
  }
}

}  // namespace detail

inline std::vector<double> gaussian_kernel(double sigma, int ksize) {
  detail::check_odd_kernel(ksize);
  if (!(sigma > 0.0)) throw Error(Errc::bad_kernel, "gaussian sigma must be positive");
  const int r = ksize / 2;
  std::vector<double> w(static_cast<std::size_t>(ksize));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    w[static_cast<std::size_t>(i + r)] = std::exp(-double(i) * i / (2.0 * sigma * sigma));
    sum += w[static_cast<std::size_t>(i + r)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

/// Separable Gaussian: horizontal pass into a double buffer, then vertical.
template <class T>
BasicColorFrame<T> gaussian_blur(const BasicColorFrame<T>& img, double sigma, int ksize) {
  const auto w = gaussian_kernel(sigma, ksize);
  BasicColorFrame<T> out = img;
  if (ksize == 1) return out;
  const int r = ksize / 2;
  const int width = img.width();
  const int height = img.height();
  std::vector<double> tmp(img.pixel_count() * 3);

  for_each_row(height, static_cast<std::size_t>(width) * ksize, [&](int y) {
    const T* src = img.row(y);
    double* dst = tmp.data() + static_cast<std::size_t>(y) * width * 3;
    for (int x = 0; x < width; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -r; i <= r; ++i) {
        const T* p = src + 4 * detail::clamp_index(x + i, width);
        const double wi = w[static_cast<std::size_t>(i + r)];
        for (int c = 0; c < 3; ++c) acc[c] += wi * p[c];
      }
      for (int c = 0; c < 3; ++c) dst[3 * x + c] = acc[c];
    }
  });
  for_each_row(height, static_cast<std::size_t>(width) * ksize, [&](int y) {
    T* dst = out.row(y);
    for (int x = 0; x < width; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -r; i <= r; ++i) {
        const double* p = tmp.data() + (static_cast<std::size_t>(detail::clamp_index(y + i, height)) * width + x) * 3;
        const double wi = w[static_cast<std::size_t>(i + r)];
        for (int c = 0; c < 3; ++c) acc[c] += wi * p[c];
      }
      for (int c = 0; c < 3; ++c) dst[4 * x + c] = clamp01(static_cast<T>(acc[c]));
    }
  });
  return out;
}

template <class T>
BasicColorFrame<T> median_blur(const BasicColorFrame<T>& img, int ksize) {
  detail::check_odd_kernel(ksize);
  BasicColorFrame<T> out = img;
  if (ksize == 1) return out;
  const int r = ksize / 2;
  const int width = img.width();
  const int height = img.height();
  const auto n = static_cast<std::size_t>(ksize) * ksize;
  for_each_row(height, static_cast<std::size_t>(width) * n, [&](int y) {
    std::vector<T> window(n);
    T* dst = out.row(y);
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        std::size_t k = 0;
        for (int dy = -r; dy <= r; ++dy) {
          const T* src = img.row(detail::clamp_index(y + dy, height));
          for (int dx = -r; dx <= r; ++dx) window[k++] = src[4 * detail::clamp_index(x + dx, width) + c];
        }
        auto mid = window.begin() + static_cast<std::ptrdiff_t>(n / 2);
        std::nth_element(window.begin(), mid, window.end());
        dst[4 * x + c] = *mid;
      }
    }
  });
  return out;
}

/// Spatial weight exp(-|dp|^2 / 2 sigma_space^2) times range weight
/// exp(-|drgb|^2 / 2 sigma_color^2), renormalized per pixel.
template <class T>
BasicColorFrame<T> bilateral(const BasicColorFrame<T>& img, int radius, double sigma_color,
                             double sigma_space) {
  if (radius < 0) throw Error(Errc::bad_kernel, "bilateral radius must be >= 0");
  if (!(sigma_color > 0.0) || !(sigma_space > 0.0)) {
    throw Error(Errc::bad_kernel, "bilateral sigmas must be positive");
  }
  BasicColorFrame<T> out = img;
  if (radius == 0) return out;
  const int width = img.width();
  const int height = img.height();
  const int ksize = 2 * radius + 1;
  std::vector<double> spatial(static_cast<std::size_t>(ksize) * ksize);
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      spatial[static_cast<std::size_t>((dy + radius) * ksize + dx + radius)] =
          std::exp(-double(dx * dx + dy * dy) / (2.0 * sigma_space * sigma_space));
    }
  }
  const double range_scale = -1.0 / (2.0 * sigma_color * sigma_color);
  for_each_row(height, static_cast<std::size_t>(width) * ksize * ksize, [&](int y) {
    T* dst = out.row(y);
    for (int x = 0; x < width; ++x) {
      const T* center = img.pixel(x, y);
      double acc[3] = {0, 0, 0};
      double norm = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const T* src = img.row(detail::clamp_index(y + dy, height));
        for (int dx = -radius; dx <= radius; ++dx) {
          const T* p = src + 4 * detail::clamp_index(x + dx, width);
          double dist2 = 0.0;
          for (int c = 0; c < 3; ++c) {
            const double d = double(p[c]) - double(center[c]);
            dist2 += d * d;
          }
          const double wgt =
              spatial[static_cast<std::size_t>((dy + radius) * ksize + dx + radius)] * std::exp(dist2 * range_scale);
          norm += wgt;
          for (int c = 0; c < 3; ++c) acc[c] += wgt * p[c];
        }
      }
      for (int c = 0; c < 3; ++c) dst[4 * x + c] = clamp01(static_cast<T>(acc[c] / norm));
    }
  });
  return out;
}

/// Runs the configured filter; PrefilterKind::none returns the input.
template <class T>
BasicColorFrame<T> apply_prefilter(const BasicColorFrame<T>& img, const PrefilterParams& p) {
  switch (p.kind) {
    case PrefilterKind::gaussian: return gaussian_blur(img, p.gaussian_sigma, p.gaussian_ksize);
    case PrefilterKind::median: return median_blur(img, p.median_ksize);
    case PrefilterKind::bilateral:
      return bilateral(img, p.bilateral_radius, p.bilateral_sigma_color, p.bilateral_sigma_space);
    case PrefilterKind::none: break;
  }
  return img;
}

}  // namespace depthmatte
