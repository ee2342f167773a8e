#pragma once

// Streaming driver: 60 fps color paired with 30 fps depth, per-stage timing
// against the 60 Hz frame budget, and the lag measurement for moving subjects.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "depthmatte/align.hpp"
#include "depthmatte/io.hpp"
#include "depthmatte/matte.hpp"
#include "depthmatte/params.hpp"
#include "depthmatte/prefilter.hpp"
#include "depthmatte/refine.hpp"
#include "depthmatte/synth.hpp"

namespace depthmatte {

inline constexpr std::int64_t kFrameBudgetNs = 16'666'667;

// ---------------------------------------------------------------------------
// Cadence

enum class DepthCadence {
  reuse,   // one depth frame per two color frames
  paired,  // every color frame has its own depth frame
};

struct FramePair {
  std::uint64_t color_index = 0;
  std::uint64_t depth_index = 0;

  bool operator==(const FramePair&) const = default;
};

inline FramePair scheduled_pair(std::uint64_t color_index, DepthCadence cadence = DepthCadence::reuse) {
  return {color_index, cadence == DepthCadence::reuse ? color_index / 2 : color_index};
}

/// Depth index for each color frame: floor(c / 2) under reuse.
inline std::vector<FramePair> schedule(std::size_t n_color_frames, DepthCadence cadence = DepthCadence::reuse) {
  std::vector<FramePair> pairs;
  pairs.reserve(n_color_frames);
  for (std::size_t c = 0; c < n_color_frames; ++c) pairs.push_back(scheduled_pair(c, cadence));
  return pairs;
}

// ---------------------------------------------------------------------------
// Timings

enum class Stage { ingest, align, prefilter, matte, close, composite, encode };
inline constexpr std::size_t kStageCount = 7;
inline constexpr std::array<const char*, kStageCount> kStageNames{
    "ingest", "align", "prefilter", "matte", "close", "composite", "encode"};

struct FrameTimings {
  std::uint64_t frame_index = 0;
  std::uint64_t depth_index = 0;
  std::uint32_t params_hash = 0;
  std::array<std::int64_t, kStageCount> durations_ns{};
  std::int64_t total_ns = 0;
  bool within_budget = true;

  std::int64_t& operator[](Stage s) noexcept { return durations_ns[static_cast<std::size_t>(s)]; }
  std::int64_t operator[](Stage s) const noexcept { return durations_ns[static_cast<std::size_t>(s)]; }

  std::int64_t stage_sum() const noexcept {
    std::int64_t sum = 0;
    for (auto d : durations_ns) sum += d;
    return sum;
  }

  /// align through composite, the budgeted processing path
  std::int64_t processing_ns() const noexcept {
    return (*this)[Stage::align] + (*this)[Stage::prefilter] + (*this)[Stage::matte] + (*this)[Stage::close] +
           (*this)[Stage::composite];
  }

  void finish(std::int64_t total) noexcept {
    total_ns = total;
    within_budget = total_ns <= kFrameBudgetNs;
  }
};

inline nlohmann::json to_json(const FrameTimings& t) {
  nlohmann::json j{{"frame", t.frame_index},
                   {"depth_index", t.depth_index},
                   {"params_hash", t.params_hash},
                   {"total_ns", t.total_ns},
                   {"within_budget", t.within_budget},
                   {"budget_ns", kFrameBudgetNs}};
  for (std::size_t i = 0; i < kStageCount; ++i) j[std::string(kStageNames[i]) + "_ns"] = t.durations_ns[i];
  return j;
}

inline constexpr const char* kTimingsCsvHeader =
    "frame,ingest_ns,align_ns,prefilter_ns,matte_ns,close_ns,composite_ns,encode_ns,total_ns,within_budget";

inline void write_timings_csv(std::ostream& out, const std::vector<FrameTimings>& rows) {
  out << kTimingsCsvHeader << '\n';
  for (const auto& t : rows) {
    out << t.frame_index;
    for (auto d : t.durations_ns) out << ',' << d;
    out << ',' << t.total_ns << ',' << (t.within_budget ? "true" : "false") << '\n';
  }
}

class StageClock {
 public:
  using clock = std::chrono::steady_clock;

  explicit StageClock(FrameTimings& t) : timings_(t), frame_start_(clock::now()), last_(frame_start_) {}

  void lap(Stage s) {
    const auto now = clock::now();
    timings_[s] += std::chrono::duration_cast<std::chrono::nanoseconds>(now - last_).count();
    last_ = now;
  }

  void finish() {
    lap_discard();
    timings_.finish(std::chrono::duration_cast<std::chrono::nanoseconds>(last_ - frame_start_).count());
  }

  void lap_discard() { last_ = clock::now(); }

 private:
  FrameTimings& timings_;
  clock::time_point frame_start_;
  clock::time_point last_;
};

// ---------------------------------------------------------------------------
// Sources

class FrameSource {
 public:
  virtual ~FrameSource() = default;

  /// nullopt for an unbounded source.
  virtual std::optional<std::size_t> color_frame_count() const = 0;
  virtual DepthCadence cadence() const { return DepthCadence::reuse; }
  virtual ColorFrame color(std::uint64_t index) = 0;
  /// index counts frames of the depth stream, not color frames.
  virtual DepthFrame depth(std::uint64_t index) = 0;

  virtual std::vector<std::string> background_names() const { return builtin_backgrounds(); }
  virtual std::string default_background() const { return background_names().front(); }
  /// Raw background image; registration to the output size happens downstream.
  virtual ColorFrame background(const std::string& name, int width, int height) {
    const auto names = background_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw Error(Errc::io_failure, "unknown background '" + name + "'");
    }
    return synth_background(name, width, height);
  }
};

/// Endless synthetic scene. Depth frame d is captured at color instant 2d
/// (reuse) or d (paired), so reused depth trails a moving subject.
class SyntheticSource : public FrameSource {
 public:
  explicit SyntheticSource(SceneSpec spec, DepthCadence cadence = DepthCadence::reuse,
                           std::optional<std::size_t> frames = std::nullopt)
      : spec_(std::move(spec)), cadence_(cadence), frames_(frames) {
    validate(spec_);
  }

  std::optional<std::size_t> color_frame_count() const override { return frames_; }
  DepthCadence cadence() const override { return cadence_; }
  ColorFrame color(std::uint64_t index) override { return synth_color(spec_, index); }
  DepthFrame depth(std::uint64_t index) override {
    auto d = synth_depth(spec_, cadence_ == DepthCadence::reuse ? 2 * index : index);
    d.frame_index = index;
    return d;
  }

  const SceneSpec& spec() const noexcept { return spec_; }

 private:
  SceneSpec spec_;
  DepthCadence cadence_;
  std::optional<std::size_t> frames_;
};

/// Frames from a manifest. Each entry is a synchronized color/depth capture;
/// under reuse the depth stream only carries the even entries' depth.
class DatasetSource : public FrameSource {
 public:
  explicit DatasetSource(DatasetManifest manifest, DepthCadence cadence = DepthCadence::reuse)
      : manifest_(std::move(manifest)), cadence_(cadence) {}

  std::optional<std::size_t> color_frame_count() const override { return manifest_.entries.size(); }
  DepthCadence cadence() const override { return cadence_; }

  ColorFrame color(std::uint64_t index) override {
    auto frame = load_color(entry(index).color);
    frame.frame_index = index;
    frame.timestamp_ns = static_cast<std::int64_t>(index) * kFrameBudgetNs;
    return frame;
  }

  DepthFrame depth(std::uint64_t index) override {
    const auto& e = entry(cadence_ == DepthCadence::reuse ? 2 * index : index);
    auto d = load_depth(e.depth, e.depth_width, e.depth_height);
    d.frame_index = index;
    return d;
  }

  std::vector<std::string> background_names() const override {
    auto names = builtin_backgrounds();
    if (manifest_.background) names.insert(names.begin(), "manifest");
    return names;
  }

  ColorFrame background(const std::string& name, int width, int height) override {
    if (name == "manifest" && manifest_.background) return load_color(*manifest_.background);
    return FrameSource::background(name, width, height);
  }

  const DatasetManifest& manifest() const noexcept { return manifest_; }

 private:
  const ManifestEntry& entry(std::uint64_t index) const {
    if (index >= manifest_.entries.size()) {
      throw Error(Errc::source_exhausted, "dataset has " + std::to_string(manifest_.entries.size()) +
                                              " entries, frame " + std::to_string(index) + " requested");
    }
    return manifest_.entries[index];
  }

  DatasetManifest manifest_;
  DepthCadence cadence_;
};

// ---------------------------------------------------------------------------
// Parameter feeds. The driver takes exactly one snapshot per frame.

class ParamFeed {
 public:
  virtual ~ParamFeed() = default;
  virtual MatteParams snapshot(std::uint64_t frame_index) = 0;
};

class FixedParams : public ParamFeed {
 public:
  explicit FixedParams(MatteParams p) : params_(std::move(p)) {}
  MatteParams snapshot(std::uint64_t) override { return params_; }

 private:
  MatteParams params_;
};

/// Piecewise-constant trace: the entry with the largest start <= frame wins.
class ScriptedParams : public ParamFeed {
 public:
  explicit ScriptedParams(MatteParams initial) { trace_[0] = std::move(initial); }
  void at(std::uint64_t first_frame, MatteParams p) { trace_[first_frame] = std::move(p); }
  MatteParams snapshot(std::uint64_t frame_index) override {
    return std::prev(trace_.upper_bound(frame_index))->second;
  }

 private:
  std::map<std::uint64_t, MatteParams> trace_;
};

/// Last-writer-wins slot written by a control thread.
class LiveParams : public ParamFeed {
 public:
  explicit LiveParams(MatteParams initial = {}) : params_(std::move(initial)) {}

  void set(MatteParams p) {
    std::lock_guard lock(mutex_);
    params_ = std::move(p);
  }
  MatteParams get() const {
    std::lock_guard lock(mutex_);
    return params_;
  }
  MatteParams snapshot(std::uint64_t) override { return get(); }

 private:
  mutable std::mutex mutex_;
  MatteParams params_;
};

// ---------------------------------------------------------------------------
// Compositor: the two-pass pipeline with reusable buffers.

/// Output size for a color/depth pair: the largest centered color window
/// with the depth raster's aspect ratio.
inline std::pair<int, int> default_output_size(int color_w, int color_h, int depth_w, int depth_h) {
  const auto r = center_crop_rect(color_w, color_h, depth_w, depth_h);
  return {r.width, r.height};
}

class Compositor {
 public:
  /// Runs align -> prefilter -> matte -> close -> composite. background must
  /// already be registered to the output size (see register_background).
  const ColorFrame& process(const ColorFrame& color, const DepthFrame& depth, const ColorFrame& background,
                            const MatteParams& params, int out_w, int out_h, StageClock& clock) {
    const ColorFrame* src = &color;
    if (!color.same_size(out_w, out_h)) {
      center_crop_scale_into(color, out_w, out_h, aligned_color_);
      src = &aligned_color_;
    }
    upscale_depth_into(depth, out_w, out_h, registered_depth_, params.depth_interp);
    clock.lap(Stage::align);

    if (params.prefilter.kind != PrefilterKind::none) {
      filtered_ = apply_prefilter(*src, params.prefilter);
      src = &filtered_;
    }
    clock.lap(Stage::prefilter);

    const int k = kernel_from_slider(params.kernel_slider);
    matte_pass_into(*src, registered_depth_, params, foreground_, k != 0 ? &alpha_ : nullptr);
    clock.lap(Stage::matte);

    if (k != 0) {
      morphology_.close(alpha_, k, closed_);
      replace_alpha(foreground_, closed_);
    }
    clock.lap(Stage::close);

    composite_into(foreground_, background, params, output_);
    clock.lap(Stage::composite);
    return output_;
  }

  /// Center-crops and scales a raw background to the output size.
  static ColorFrame register_background(const ColorFrame& raw, int out_w, int out_h) {
    return center_crop_scale(raw, out_w, out_h);
  }

  const ColorFrame& foreground() const noexcept { return foreground_; }
  const DepthFrame& registered_depth() const noexcept { return registered_depth_; }
  const ColorFrame& output() const noexcept { return output_; }

 private:
  ColorFrame aligned_color_;
  ColorFrame filtered_;
  DepthFrame registered_depth_;
  ColorFrame foreground_;
  AlphaMask alpha_;
  AlphaMask closed_;
  Morphology morphology_;
  ColorFrame output_;
};

using FrameEncoder = std::function<std::vector<std::uint8_t>(const ColorFrame&)>;
using FrameSink =
    std::function<void(const ColorFrame& composite, const FrameTimings& timings, const std::vector<std::uint8_t>& encoded)>;

struct StreamOptions {
  int output_width = 0;  // 0: derived from the first color/depth pair
  int output_height = 0;
  FrameEncoder encoder;  // optional; its cost is the encode stage
  bool realtime = false;  // pace frames at 60 Hz on the wall clock
  std::function<std::string()> background_name;  // sampled once per frame
};

/// Stateful frame-at-a-time driver over a source. Keeps the current depth
/// frame so reused depth is fetched once and processed twice.
class StreamRunner {
 public:
  StreamRunner(FrameSource& source, StreamOptions options = {})
      : source_(source), options_(std::move(options)) {}

  /// Processes color frame c with the given params snapshot.
  FrameTimings run_frame(std::uint64_t color_index, const MatteParams& params) {
    FrameTimings t;
    t.frame_index = color_index;
    t.params_hash = params_hash(params);
    try {
      StageClock clock(t);
      const auto count = source_.color_frame_count();
      if (count && color_index >= *count) {
        throw Error(Errc::source_exhausted, "source has " + std::to_string(*count) + " color frames");
      }
      const auto pair = scheduled_pair(color_index, source_.cadence());
      t.depth_index = pair.depth_index;
      ColorFrame color = source_.color(color_index);
      color.frame_index = color_index;
      if (!depth_ || depth_->frame_index != pair.depth_index) {
        depth_ = source_.depth(pair.depth_index);
        depth_->frame_index = pair.depth_index;
      }
      if (out_w_ == 0) {
        if (options_.output_width > 0 && options_.output_height > 0) {
          out_w_ = options_.output_width;
          out_h_ = options_.output_height;
        } else {
          std::tie(out_w_, out_h_) =
              default_output_size(color.width(), color.height(), depth_->width(), depth_->height());
        }
      }
      const std::string bg_name =
          options_.background_name ? options_.background_name() : source_.default_background();
      if (bg_name != bg_name_ || background_.empty()) {
        background_ = Compositor::register_background(source_.background(bg_name, out_w_, out_h_), out_w_, out_h_);
        bg_name_ = bg_name;
      }
      clock.lap(Stage::ingest);

      const ColorFrame& out = compositor_.process(color, *depth_, background_, params, out_w_, out_h_, clock);

      encoded_.clear();
      if (options_.encoder) encoded_ = options_.encoder(out);
      clock.lap(Stage::encode);
      clock.finish();
    } catch (const FrameError&) {
      throw;
    } catch (const Error& e) {
      throw FrameError(e, color_index);
    }
    return t;
  }

  const ColorFrame& output() const noexcept { return compositor_.output(); }
  const Compositor& compositor() const noexcept { return compositor_; }
  const std::vector<std::uint8_t>& encoded() const noexcept { return encoded_; }
  std::pair<int, int> output_size() const noexcept { return {out_w_, out_h_}; }

 private:
  FrameSource& source_;
  StreamOptions options_;
  Compositor compositor_;
  std::optional<DepthFrame> depth_;
  ColorFrame background_;
  std::string bg_name_;
  std::vector<std::uint8_t> encoded_;
  int out_w_ = 0;
  int out_h_ = 0;
};

/// Runs n_frames scheduled frames, snapshotting params once per frame and
/// handing each composite to sink in frame order.
inline std::vector<FrameTimings> run_stream(FrameSource& source, ParamFeed& feed, const FrameSink& sink,
                                            std::size_t n_frames, StreamOptions options = {}) {
  const bool realtime = options.realtime;
  StreamRunner runner(source, std::move(options));
  std::vector<FrameTimings> timings;
  timings.reserve(n_frames);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t c = 0; c < n_frames; ++c) {
    if (realtime) std::this_thread::sleep_until(start + std::chrono::nanoseconds(kFrameBudgetNs * std::int64_t(c)));
    const MatteParams params = feed.snapshot(c);
    timings.push_back(runner.run_frame(c, params));
    if (sink) sink(runner.output(), timings.back(), runner.encoded());
  }
  return timings;
}

// ---------------------------------------------------------------------------
// Lag measurement

/// x-centroid (pixel-center convention) of a coverage mask; nullopt if empty.
template <class Mask>
std::optional<double> centroid_x(const Mask& mask) {
  double sum = 0.0;
  double moment = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const double a = mask(x, y);
      sum += a;
      moment += a * (x + 0.5);
    }
  }
  if (sum <= 0.0) return std::nullopt;
  return moment / sum;
}

/// Per color frame: color-subject centroid minus alpha-mask centroid, in
/// output pixels. Positive values mean the matte trails a subject moving
/// right. Frames where either centroid is undefined report 0.
inline std::vector<double> measure_lag(const SceneSpec& spec, const MatteParams& params, std::size_t n_frames) {
  SyntheticSource source(spec, DepthCadence::reuse);
  StreamRunner runner(source);
  std::vector<double> offsets;
  offsets.reserve(n_frames);
  AlphaMask alpha;
  for (std::size_t c = 0; c < n_frames; ++c) {
    runner.run_frame(c, params);
    const auto [w, h] = runner.output_size();
    extract_alpha_into(runner.compositor().foreground(), alpha);
    auto color_mask = scene_silhouette(spec, c, spec.color_width, spec.color_height);
    std::optional<double> color_cx;
    if (color_mask.width() == w && color_mask.height() == h) {
      color_cx = centroid_x(color_mask);
    } else {
      // Subject centroid in output pixels after the same crop and scale the color went through.
      const auto crop = center_crop_rect(spec.color_width, spec.color_height, w, h);
      if (auto cx = centroid_x(color_mask)) color_cx = (*cx - crop.x) * double(w) / double(crop.width);
    }
    const auto alpha_cx = centroid_x(alpha);
    offsets.push_back(color_cx && alpha_cx ? *color_cx - *alpha_cx : 0.0);
  }
  return offsets;
}

}  // namespace depthmatte
