#pragma once

// Desk-scale latency harness for the second pass (close + composite) and the
// full per-frame pipeline.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "depthmatte/matte.hpp"
#include "depthmatte/parallel.hpp"
#include "depthmatte/refine.hpp"
#include "depthmatte/stream.hpp"
#include "depthmatte/synth.hpp"

namespace depthmatte {

struct BenchConfig {
  std::vector<std::pair<int, int>> resolutions{{320, 240}};
  std::vector<int> kernels{0, 3, 5, 7, 9};
  int repetitions = 15;
  int warmup = 2;
  std::uint64_t seed = 7;
  bool single_threaded = false;
};

struct BenchRow {
  int width = 0;
  int height = 0;
  int kernel = 0;
  int repetitions = 0;
  std::int64_t close_median_ns = 0;
  std::int64_t close_p95_ns = 0;
  std::int64_t composite_median_ns = 0;
  std::int64_t composite_p95_ns = 0;
  std::int64_t total_median_ns = 0;
  std::int64_t total_p95_ns = 0;
};

inline std::int64_t median_of(std::vector<std::int64_t> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

/// Nearest-rank percentile.
inline std::int64_t percentile_of(std::vector<std::int64_t> v, double p) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * double(v.size())));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  return v[rank - 1];
}

/// Foreground buffer resembling a first-pass output: a soft-edged subject
/// with speckle holes and islands, so the close has real work to do.
inline ColorFrame bench_foreground(int width, int height, std::uint64_t seed) {
  ColorFrame fg(width, height);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = (x + 0.5) / width - 0.5;
      const double dy = (y + 0.5) / height - 0.5;
      const double r = std::sqrt(dx * dx / 0.09 + dy * dy / 0.16);
      float a = static_cast<float>(compute_alpha(r, 0.9, 0.2));
      const float speck = u(rng);
      if (speck < 0.02f) a = 0.0f;
      else if (speck > 0.99f) a = 1.0f;
      fg.set(x, y, {u(rng), u(rng), u(rng), a});
    }
  }
  return fg;
}

inline std::vector<BenchRow> run_bench(const BenchConfig& config) {
  if (config.repetitions < 3) throw Error(Errc::validation_error, "bench needs at least 3 repetitions");
  for (int k : config.kernels) {
    if (!is_close_kernel(k)) throw Error(Errc::bad_kernel, "bench kernel must be one of 0,3,5,7,9");
  }
  const int saved_threads = worker_threads();
  if (config.single_threaded) set_worker_threads(1);

  using clock = std::chrono::steady_clock;
  auto ns = [](clock::duration d) { return std::chrono::duration_cast<std::chrono::nanoseconds>(d).count(); };

  std::vector<BenchRow> rows;
  MatteParams params;
  for (const auto& [w, h] : config.resolutions) {
    const ColorFrame source = bench_foreground(w, h, config.seed);
    const ColorFrame bg = synth_background("gradient", w, h);
    ColorFrame fg;
    ColorFrame out;
    AlphaMask alpha;
    AlphaMask closed;
    Morphology morphology;
    // Kernels are interleaved within each repetition so slow drift in machine
    // load (frequency scaling, noisy neighbours) lands on every kernel alike.
    const std::size_t nk = config.kernels.size();
    std::vector<std::vector<std::int64_t>> close_ns(nk);
    std::vector<std::vector<std::int64_t>> composite_ns(nk);
    std::vector<std::vector<std::int64_t>> total_ns(nk);
    for (int rep = 0; rep < config.warmup + config.repetitions; ++rep) {
      for (std::size_t ki = 0; ki < nk; ++ki) {
        const int k = config.kernels[ki];
        fg = source;
        const auto t0 = clock::now();
        if (k != 0) {
          extract_alpha_into(fg, alpha);
          morphology.close(alpha, k, closed);
          replace_alpha(fg, closed);
        }
        const auto t1 = clock::now();
        composite_into(fg, bg, params, out);
        const auto t2 = clock::now();
        if (rep < config.warmup) continue;
        close_ns[ki].push_back(ns(t1 - t0));
        composite_ns[ki].push_back(ns(t2 - t1));
        total_ns[ki].push_back(ns(t2 - t0));
      }
    }
    for (std::size_t ki = 0; ki < nk; ++ki) {
      rows.push_back({w, h, config.kernels[ki], config.repetitions, median_of(close_ns[ki]),
                      percentile_of(close_ns[ki], 95), median_of(composite_ns[ki]), percentile_of(composite_ns[ki], 95),
                      median_of(total_ns[ki]), percentile_of(total_ns[ki], 95)});
    }
  }
  if (config.single_threaded) set_worker_threads(saved_threads);
  return rows;
}

inline constexpr const char* kBenchCsvHeader =
    "width,height,kernel,repetitions,close_median_ns,close_p95_ns,composite_median_ns,composite_p95_ns,"
    "total_median_ns,total_p95_ns";

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << kBenchCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.width << ',' << r.height << ',' << r.kernel << ',' << r.repetitions << ',' << r.close_median_ns << ','
        << r.close_p95_ns << ',' << r.composite_median_ns << ',' << r.composite_p95_ns << ',' << r.total_median_ns
        << ',' << r.total_p95_ns << '\n';
  }
}

/// Mobile-GPU second-pass latencies (microseconds) used as a trend reference.
/// Only the endpoints and the 3x3 value are known.
inline const std::map<int, double>& reference_second_pass_us() {
  static const std::map<int, double> ref{{0, 897.88}, {3, 1540.0}, {9, 6550.0}};
  return ref;
}

inline void write_bench_markdown(std::ostream& out, const std::vector<BenchRow>& rows) {
  auto ms = [](std::int64_t v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << double(v) / 1e6;
    return s.str();
  };
  out << "# Second-pass latency (close + composite)\n\n";
  out << "| resolution | kernel | close median (ms) | close p95 (ms) | total median (ms) | total p95 (ms) |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out << "| " << r.width << "x" << r.height << " | " << (r.kernel ? std::to_string(r.kernel) + "x" + std::to_string(r.kernel) : "bypass")
        << " | " << ms(r.close_median_ns) << " | " << ms(r.close_p95_ns) << " | " << ms(r.total_median_ns) << " | "
        << ms(r.total_p95_ns) << " |\n";
  }

  std::map<std::pair<int, int>, std::vector<const BenchRow*>> by_res;
  for (const auto& r : rows) by_res[{r.width, r.height}].push_back(&r);
  for (const auto& [res, group] : by_res) {
    std::int64_t peak = 1;
    for (const auto* r : group) peak = std::max(peak, r->total_median_ns);
    out << "\n## " << res.first << "x" << res.second << "\n\n```\n";
    const BenchRow* bypass = nullptr;
    const BenchRow* largest = nullptr;
    for (const auto* r : group) {
      const int bar = static_cast<int>(std::lround(40.0 * double(r->total_median_ns) / double(peak)));
      out << std::setw(6) << (r->kernel ? std::to_string(r->kernel) + "x" + std::to_string(r->kernel) : "bypass") << " |"
          << std::string(static_cast<std::size_t>(bar), '#') << ' ' << ms(r->total_median_ns) << " ms\n";
      if (r->kernel == 0) bypass = r;
      if (!largest || r->kernel > largest->kernel) largest = r;
    }
    out << "```\n";
    if (bypass && largest && largest->kernel == 9 && bypass->total_median_ns > 0) {
      out << "\nratio 9x9 / bypass: " << std::fixed << std::setprecision(2)
          << double(largest->total_median_ns) / double(bypass->total_median_ns) << "\n";
    }
  }
  const auto& ref = reference_second_pass_us();
  out << "\nReference trend (mobile GPU, not a target): bypass " << ref.at(0) << " us, 3x3 " << ref.at(3) / 1000.0
      << " ms, 9x9 " << ref.at(9) / 1000.0 << " ms; ratio 9x9 / bypass " << std::setprecision(1)
      << ref.at(9) / ref.at(0) << ".\n";
}

// ---------------------------------------------------------------------------
// Full pipeline (align through composite) at a composite resolution.

struct PipelineBenchResult {
  int width = 0;
  int height = 0;
  int kernel = 0;
  std::int64_t median_ns = 0;
  std::int64_t p95_ns = 0;
  bool within_budget() const noexcept { return median_ns <= kFrameBudgetNs; }
};

/// Synthetic 4:3 scene with depth at a quarter of the composite resolution,
/// the streaming-depth ratio at 1280x960.
inline PipelineBenchResult run_pipeline_bench(int width, int height, int kernel, int repetitions, int warmup = 2) {
  SceneSpec spec;
  spec.color_width = width;
  spec.color_height = height;
  spec.depth_width = std::max(1, width / 4);
  spec.depth_height = std::max(1, height / 4);
  spec.velocity_px_per_frame = 4.0;
  SyntheticSource source(spec);
  StreamOptions options;
  options.output_width = width;
  options.output_height = height;
  StreamRunner runner(source, options);
  MatteParams params;
  params.depth_m = 2.0;
  params.rolloff_m = 0.2;
  params.kernel_slider = kernel;
  std::vector<std::int64_t> samples;
  for (int i = 0; i < warmup + repetitions; ++i) {
    const auto t = runner.run_frame(static_cast<std::uint64_t>(i), params);
    if (i >= warmup) samples.push_back(t.processing_ns());
  }
  return {width, height, kernel, median_of(samples), percentile_of(samples, 95)};
}

}  // namespace depthmatte
