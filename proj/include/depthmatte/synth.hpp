#pragma once

// Synthetic RGB-D scenes: a flat-colored subject moving horizontally in front
// of a flat backdrop, rendered at independent color and depth resolutions.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "depthmatte/frame.hpp"

namespace depthmatte {

enum class SubjectShape { ellipse, rectangle };

struct SceneSpec {
  SubjectShape subject_shape = SubjectShape::ellipse;
  double subject_depth_m = 1.0;
  double background_depth_m = 3.0;
  double velocity_px_per_frame = 0.0;  // color pixels per color frame
  Rgb<float> subject_color{0.85f, 0.55f, 0.40f};
  Rgb<float> background_color{0.25f, 0.30f, 0.35f};
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  int color_width = 1440;
  int color_height = 1920;
  int depth_width = 576;
  int depth_height = 768;
  // Subject geometry at frame 0, as fractions of the raster size.
  double center_x = 0.5;
  double center_y = 0.5;
  double half_width = 0.2;
  double half_height = 0.3;
};

/// Throws ValidationError listing every bad field.
inline void validate(const SceneSpec& spec) {
  std::vector<FieldError> bad;
  auto in_range = [](double v) { return std::isfinite(v) && v > 0.0 && v <= 5.0; };
  if (!in_range(spec.subject_depth_m)) bad.push_back({"subject_depth_m", "must be in (0, 5]"});
  if (!in_range(spec.background_depth_m)) bad.push_back({"background_depth_m", "must be in (0, 5]"});
  if (!(spec.subject_depth_m < spec.background_depth_m)) {
    bad.push_back({"subject_depth_m", "must be nearer than background_depth_m"});
  }
  if (!std::isfinite(spec.velocity_px_per_frame)) bad.push_back({"velocity_px_per_frame", "must be finite"});
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    bad.push_back({"noise_sigma", "must be >= 0"});
  }
  if (spec.color_width < 1 || spec.color_height < 1) bad.push_back({"color_resolution", "must be >= 1x1"});
  if (spec.depth_width < 1 || spec.depth_height < 1) bad.push_back({"depth_resolution", "must be >= 1x1"});
  if (!(spec.half_width > 0.0) || !(spec.half_height > 0.0)) {
    bad.push_back({"subject_size", "half extents must be positive"});
  }
  for (float c : spec.subject_color) {
    if (!(c >= 0.0f && c <= 1.0f)) bad.push_back({"subject_color", "channels must be in [0, 1]"});
  }
  for (float c : spec.background_color) {
    if (!(c >= 0.0f && c <= 1.0f)) bad.push_back({"background_color", "channels must be in [0, 1]"});
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

/// Horizontal subject displacement in color pixels.
inline long subject_offset_px(const SceneSpec& spec, std::uint64_t frame_index) {
  return std::lround(static_cast<double>(frame_index) * spec.velocity_px_per_frame);
}

/// Binary subject silhouette at frame_index rasterized at width x height.
/// Pixel centers are tested against the subject outline; the outline scales
/// with the raster so color and depth silhouettes describe the same shape.
inline AlphaMask scene_silhouette(const SceneSpec& spec, std::uint64_t frame_index, int width, int height) {
  AlphaMask mask(width, height);
  const double sx = double(width) / spec.color_width;
  const double cx = spec.center_x * width + double(subject_offset_px(spec, frame_index)) * sx;
  const double cy = spec.center_y * height;
  const double hw = spec.half_width * width;
  const double hh = spec.half_height * height;
  for (int y = 0; y < height; ++y) {
    const double py = y + 0.5;
    for (int x = 0; x < width; ++x) {
      const double px = x + 0.5;
      bool inside = false;
      if (spec.subject_shape == SubjectShape::rectangle) {
        inside = px >= cx - hw && px < cx + hw && py >= cy - hh && py < cy + hh;
      } else {
        const double u = (px - cx) / hw;
        const double v = (py - cy) / hh;
        inside = u * u + v * v <= 1.0;
      }
      mask(x, y) = inside ? 1.0f : 0.0f;
    }
  }
  return mask;
}

inline ColorFrame synth_color(const SceneSpec& spec, std::uint64_t frame_index) {
  const auto silhouette = scene_silhouette(spec, frame_index, spec.color_width, spec.color_height);
  ColorFrame frame(spec.color_width, spec.color_height);
  frame.frame_index = frame_index;
  frame.timestamp_ns = static_cast<std::int64_t>(frame_index) * 16'666'667;
  std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ull + frame_index);
  std::normal_distribution<float> noise(0.0f, static_cast<float>(spec.noise_sigma));
  const bool noisy = spec.noise_sigma > 0.0;
  for (int y = 0; y < frame.height(); ++y) {
    // Mild vertical shading keeps the backdrop from being a single value.
    const float shade = 0.85f + 0.15f * (float(y) + 0.5f) / float(frame.height());
    for (int x = 0; x < frame.width(); ++x) {
      float* p = frame.pixel(x, y);
      const bool subject = silhouette(x, y) > 0.5f;
      for (int c = 0; c < 3; ++c) {
        float v = subject ? spec.subject_color[c] : spec.background_color[c] * shade;
        if (noisy) v += noise(rng);
        p[c] = clamp01(v);
      }
      p[3] = 1.0f;
    }
  }
  return frame;
}

inline DepthFrame synth_depth(const SceneSpec& spec, std::uint64_t frame_index) {
  const auto silhouette = scene_silhouette(spec, frame_index, spec.depth_width, spec.depth_height);
  DepthFrame depth(spec.depth_width, spec.depth_height);
  depth.frame_index = frame_index;
  const auto in = silhouette.data();
  auto out = depth.data();
  const auto near = static_cast<float>(spec.subject_depth_m);
  const auto far = static_cast<float>(spec.background_depth_m);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > 0.5f ? near : far;
  return depth;
}

/// Color and depth captured at the same instant.
inline std::pair<ColorFrame, DepthFrame> synth_scene(const SceneSpec& spec, std::uint64_t frame_index) {
  validate(spec);
  return {synth_color(spec, frame_index), synth_depth(spec, frame_index)};
}

/// Procedural replacement backgrounds, selectable by name.
inline ColorFrame synth_background(const std::string& name, int width, int height) {
  ColorFrame bg(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const float u = (float(x) + 0.5f) / float(width);
      const float v = (float(y) + 0.5f) / float(height);
      Rgba<float> px{0, 0, 0, 1};
      if (name == "checker") {
        const bool on = ((x * 8 / width) + (y * 8 / height)) % 2 == 0;
        px = on ? Rgba<float>{0.9f, 0.9f, 0.9f, 1} : Rgba<float>{0.2f, 0.2f, 0.2f, 1};
      } else if (name == "green") {
        px = {0.0f, 0.69f, 0.25f, 1};
      } else if (name == "sunset") {
        px = {0.95f - 0.3f * v, 0.45f + 0.2f * v * u, 0.25f + 0.5f * v, 1};
      } else {  // "gradient"
        px = {0.1f + 0.3f * u, 0.2f + 0.4f * v, 0.6f + 0.3f * (1 - v), 1};
      }
      bg.set(x, y, px);
    }
  }
  return bg;
}

inline const std::vector<std::string>& builtin_backgrounds() {
  static const std::vector<std::string> names{"gradient", "checker", "green", "sunset"};
  return names;
}

// ---------------------------------------------------------------------------
// JSON form of SceneSpec used by the synth subcommand. Absent keys keep defaults.

inline nlohmann::json scene_to_json(const SceneSpec& s) {
  return {
      {"subject_shape", s.subject_shape == SubjectShape::rectangle ? "rectangle" : "ellipse"},
      {"subject_depth_m", s.subject_depth_m},
      {"background_depth_m", s.background_depth_m},
      {"velocity_px_per_frame", s.velocity_px_per_frame},
      {"subject_color", s.subject_color},
      {"background_color", s.background_color},
      {"noise_sigma", s.noise_sigma},
      {"seed", s.seed},
      {"color_resolution", {s.color_width, s.color_height}},
      {"depth_resolution", {s.depth_width, s.depth_height}},
      {"center", {s.center_x, s.center_y}},
      {"half_extent", {s.half_width, s.half_height}},
  };
}

inline SceneSpec scene_from_json(const nlohmann::json& j) {
  SceneSpec s;
  try {
    if (j.contains("subject_shape")) {
      const auto shape = j["subject_shape"].get<std::string>();
      if (shape == "rectangle") s.subject_shape = SubjectShape::rectangle;
      else if (shape == "ellipse") s.subject_shape = SubjectShape::ellipse;
      else throw ValidationError("subject_shape", "must be ellipse or rectangle");
    }
    auto opt = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    opt("subject_depth_m", s.subject_depth_m);
    opt("background_depth_m", s.background_depth_m);
    opt("velocity_px_per_frame", s.velocity_px_per_frame);
    opt("subject_color", s.subject_color);
    opt("background_color", s.background_color);
    opt("noise_sigma", s.noise_sigma);
    opt("seed", s.seed);
    auto pair = [&](const char* key, auto& a, auto& b) {
      if (!j.contains(key)) return;
      const auto& v = j[key];
      if (!v.is_array() || v.size() != 2) throw ValidationError(key, "must be a two-element array");
      a = v[0].get<std::decay_t<decltype(a)>>();
      b = v[1].get<std::decay_t<decltype(b)>>();
    };
    pair("color_resolution", s.color_width, s.color_height);
    pair("depth_resolution", s.depth_width, s.depth_height);
    pair("center", s.center_x, s.center_y);
    pair("half_extent", s.half_width, s.half_height);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("scene", e.what());
  }
  validate(s);
  return s;
}

}  // namespace depthmatte
