#pragma once

// Tuning state shared by the offline tools, the stream driver and the live
// service, with its single JSON schema. Updates are partial objects; any
// invalid field rejects the whole update.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "depthmatte/align.hpp"
#include "depthmatte/error.hpp"
#include "depthmatte/frame.hpp"

namespace depthmatte {

enum class AdjustTarget { foreground, background };
enum class PrefilterKind { none, gaussian, median, bilateral };

struct PrefilterParams {
  PrefilterKind kind = PrefilterKind::none;
  double gaussian_sigma = 1.0;
  int gaussian_ksize = 5;
  int median_ksize = 3;
  int bilateral_radius = 4;
  double bilateral_sigma_color = 0.1;
  double bilateral_sigma_space = 2.0;

  bool operator==(const PrefilterParams&) const = default;
};

struct MatteParams {
  double depth_m = 1.5;        // threshold D: d <= D is foreground
  double rolloff_m = 0.0;      // R: width of the smoothstep fade beyond D
  double kernel_slider = 0.0;  // banded into the close kernel size
  double gamma = 1.0;
  double exposure_gain = 1.0;
  Rgb<double> gain_rgb{1.0, 1.0, 1.0};
  AdjustTarget adjust_target = AdjustTarget::foreground;
  double invalid_depth_alpha = 0.0;
  DepthInterp depth_interp = DepthInterp::linear;
  PrefilterParams prefilter;

  bool operator==(const MatteParams&) const = default;
};

namespace limits {
inline constexpr double kMaxDepthM = 5.0;
inline constexpr double kMaxRolloffM = 1.0;
inline constexpr double kMinExposure = 1.0;
inline constexpr double kMaxExposure = 3.0;
inline constexpr double kMaxGamma = 10.0;
inline constexpr double kMaxChannelGain = 10.0;
inline constexpr double kMaxKernelSlider = 100.0;
inline constexpr int kMaxFilterKernel = 31;
inline constexpr int kMaxBilateralRadius = 15;
}  // namespace limits

inline const char* to_string(AdjustTarget t) { return t == AdjustTarget::background ? "bg" : "fg"; }
inline const char* to_string(DepthInterp i) { return i == DepthInterp::nearest ? "nearest" : "linear"; }
inline const char* to_string(PrefilterKind k) {
  switch (k) {
    case PrefilterKind::gaussian: return "gaussian";
    case PrefilterKind::median: return "median";
    case PrefilterKind::bilateral: return "bilateral";
    case PrefilterKind::none: break;
  }
  return "none";
}

inline nlohmann::json to_json(const MatteParams& p) {
  const auto& f = p.prefilter;
  return {
      {"depth_m", p.depth_m},
      {"rolloff_m", p.rolloff_m},
      {"kernel_slider", p.kernel_slider},
      {"gamma", p.gamma},
      {"exposure_gain", p.exposure_gain},
      {"gain_rgb", p.gain_rgb},
      {"adjust_target", to_string(p.adjust_target)},
      {"invalid_depth_alpha", p.invalid_depth_alpha},
      {"depth_interp", to_string(p.depth_interp)},
      {"prefilter",
       {{"kind", to_string(f.kind)},
        {"gaussian_sigma", f.gaussian_sigma},
        {"gaussian_ksize", f.gaussian_ksize},
        {"median_ksize", f.median_ksize},
        {"bilateral_radius", f.bilateral_radius},
        {"bilateral_sigma_color", f.bilateral_sigma_color},
        {"bilateral_sigma_space", f.bilateral_sigma_space}}},
  };
}

/// FNV-1a over the canonical (sorted-key) JSON form. Identifies the snapshot
/// a frame was rendered under.
inline std::uint32_t params_hash(const MatteParams& p) {
  const std::string text = to_json(p).dump();
  std::uint32_t h = 2166136261u;
  for (unsigned char c : text) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

namespace detail {

class UpdateReader {
 public:
  std::vector<FieldError> errors;

  bool number(const nlohmann::json& v, const std::string& name, double lo, double hi, bool lo_open,
              double& out) {
    if (!v.is_number()) {
      errors.push_back({name, "expected a number"});
      return false;
    }
    const double x = v.get<double>();
    const bool ok = std::isfinite(x) && (lo_open ? x > lo : x >= lo) && x <= hi;
    if (!ok) {
      errors.push_back({name, std::string("must be in ") + (lo_open ? "(" : "[") + fmt(lo) + ", " +
                                  fmt(hi) + "]"});
      return false;
    }
    out = x;
    return true;
  }

  bool odd_kernel(const nlohmann::json& v, const std::string& name, int& out) {
    if (!v.is_number_integer()) {
      errors.push_back({name, "expected an integer"});
      return false;
    }
    const auto k = v.get<std::int64_t>();
    if (k < 1 || k > limits::kMaxFilterKernel || k % 2 == 0) {
      errors.push_back({name, "must be odd in [1, " + std::to_string(limits::kMaxFilterKernel) + "]"});
      return false;
    }
    out = static_cast<int>(k);
    return true;
  }

  template <class E>
  bool choice(const nlohmann::json& v, const std::string& name,
              std::initializer_list<std::pair<const char*, E>> options, E& out) {
    std::string allowed;
    for (const auto& [label, value] : options) {
      if (v.is_string() && v.get<std::string>() == label) {
        out = value;
        return true;
      }
      allowed += allowed.empty() ? label : std::string("|") + label;
    }
    errors.push_back({name, "must be one of " + allowed});
    return false;
  }

  void unknown(const std::string& name) { errors.push_back({name, "unknown field"}); }

 private:
  static std::string fmt(double v) {
    nlohmann::json j = v;
    return j.dump();
  }
};

inline void merge_prefilter(const nlohmann::json& u, PrefilterParams& f, UpdateReader& r) {
  if (!u.is_object()) {
    r.errors.push_back({"prefilter", "expected an object"});
    return;
  }
  for (const auto& [key, v] : u.items()) {
    const std::string name = "prefilter." + key;
    if (key == "kind") {
      r.choice(v, name,
               {{"none", PrefilterKind::none},
                {"gaussian", PrefilterKind::gaussian},
                {"median", PrefilterKind::median},
                {"bilateral", PrefilterKind::bilateral}},
               f.kind);
    } else if (key == "gaussian_sigma") {
      r.number(v, name, 0.0, 50.0, true, f.gaussian_sigma);
    } else if (key == "gaussian_ksize") {
      r.odd_kernel(v, name, f.gaussian_ksize);
    } else if (key == "median_ksize") {
      r.odd_kernel(v, name, f.median_ksize);
    } else if (key == "bilateral_radius") {
      double radius = f.bilateral_radius;
      if (!v.is_number_integer()) {
        r.errors.push_back({name, "expected an integer"});
      } else if (r.number(v, name, 0.0, limits::kMaxBilateralRadius, false, radius)) {
        f.bilateral_radius = static_cast<int>(radius);
      }
    } else if (key == "bilateral_sigma_color") {
      r.number(v, name, 0.0, 10.0, true, f.bilateral_sigma_color);
    } else if (key == "bilateral_sigma_space") {
      r.number(v, name, 0.0, 50.0, true, f.bilateral_sigma_space);
    } else {
      r.unknown(name);
    }
  }
}

}  // namespace detail

/// Merges a partial update into current. Either every field applies or the
/// call throws ValidationError naming each offending field and its range.
inline MatteParams apply_update(const MatteParams& current, const nlohmann::json& update) {
  if (!update.is_object()) throw ValidationError("params", "expected a JSON object");
  MatteParams next = current;
  detail::UpdateReader r;
  for (const auto& [key, v] : update.items()) {
    if (key == "depth_m") {
      r.number(v, key, 0.0, limits::kMaxDepthM, false, next.depth_m);
    } else if (key == "rolloff_m") {
      r.number(v, key, 0.0, limits::kMaxRolloffM, false, next.rolloff_m);
    } else if (key == "kernel_slider") {
      r.number(v, key, 0.0, limits::kMaxKernelSlider, false, next.kernel_slider);
    } else if (key == "gamma") {
      r.number(v, key, 0.0, limits::kMaxGamma, true, next.gamma);
    } else if (key == "exposure_gain") {
      r.number(v, key, limits::kMinExposure, limits::kMaxExposure, false, next.exposure_gain);
    } else if (key == "gain_rgb") {
      if (!v.is_array() || v.size() != 3) {
        r.errors.push_back({key, "expected [r, g, b]"});
        continue;
      }
      for (std::size_t c = 0; c < 3; ++c) {
        r.number(v[c], key + "[" + std::to_string(c) + "]", 0.0, limits::kMaxChannelGain, false,
                 next.gain_rgb[c]);
      }
    } else if (key == "adjust_target") {
      r.choice(v, key, {{"fg", AdjustTarget::foreground}, {"bg", AdjustTarget::background}},
               next.adjust_target);
    } else if (key == "invalid_depth_alpha") {
      r.number(v, key, 0.0, 1.0, false, next.invalid_depth_alpha);
    } else if (key == "depth_interp") {
      r.choice(v, key, {{"linear", DepthInterp::linear}, {"nearest", DepthInterp::nearest}},
               next.depth_interp);
    } else if (key == "prefilter") {
      detail::merge_prefilter(v, next.prefilter, r);
    } else {
      r.unknown(key);
    }
  }
  if (!r.errors.empty()) throw ValidationError(std::move(r.errors));
  return next;
}

inline MatteParams params_from_json(const nlohmann::json& j) { return apply_update(MatteParams{}, j); }

}  // namespace depthmatte
