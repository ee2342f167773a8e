#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "depthmatte/align.hpp"
#include "depthmatte/matte.hpp"
#include "depthmatte/synth.hpp"
#include "oracles.hpp"

using namespace depthmatte;

TEST(Alpha, WorkedExamples) {
  EXPECT_EQ(compute_alpha(1.0, 1.5, 0.0), 1.0);
  EXPECT_NEAR(compute_alpha(1.2, 1.0, 0.4), 0.5, 1e-12);  // (1.2 - 1.0) / 0.4 is not exactly 0.5 in binary
  EXPECT_EQ(compute_alpha(1.25, 1.0, 0.5), 0.5);
  EXPECT_NEAR(compute_alpha(1.1, 1.0, 0.4), 0.84375, 1e-12);
  EXPECT_EQ(compute_alpha(std::nan(""), 1.0, 0.4), 0.0);
  EXPECT_EQ(compute_alpha(std::nan(""), 1.0, 0.4, 0.75), 0.75);
  EXPECT_EQ(compute_alpha(-1.0, 1.0, 0.0), 0.0);
  EXPECT_EQ(compute_alpha(1.5, 1.5, 0.0), 1.0);  // boundary is opaque
}

TEST(Alpha, EndpointsAndMidpoint) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double D = 5.0 * u(rng);
    const double R = u(rng);
    EXPECT_NEAR(compute_alpha(D, D, R), 1.0, 1e-9);
    EXPECT_NEAR(compute_alpha(D + R, D, R), 0.0, 1e-9);
  }
  // t = 0.5 exactly: D = 1, R = 0.5, d = 1.25 (all dyadic).
  EXPECT_EQ(compute_alpha(1.25, 1.0, 0.5), 0.5);
}

TEST(Alpha, MonotoneAndMatchesFormula) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double D = u(rng);
    const double R = u(rng) / 5.0;
    double prev = 2.0;
    for (double d = 0.01; d < 6.0; d += 0.01) {
      const double a = compute_alpha(d, D, R);
      ASSERT_LE(a, prev + 1e-15);
      ASSERT_NEAR(a, oracle::smoothstep_alpha(d, D, R), 1e-12);
      if (R == 0.0) {
        ASSERT_TRUE(a == 0.0 || a == 1.0);
      }
      prev = a;
    }
  }
}

TEST(Alpha, ConvergesToHardThresholdAsRollOffShrinks) {
  for (double d : {0.5, 0.99, 1.01, 2.0}) {
    EXPECT_NEAR(compute_alpha(d, 1.0, 1e-9), compute_alpha(d, 1.0, 0.0), 1e-12);
  }
}

TEST(ColorOps, GammaAndGain) {
  const auto id = apply_gamma(Rgb<double>{0.1, 0.5, 0.9}, 1.0);
  EXPECT_EQ(id, (Rgb<double>{0.1, 0.5, 0.9}));
  EXPECT_NEAR(apply_gamma(Rgb<double>{0.25, 0.25, 0.25}, 0.5)[0], 0.5, 1e-12);
  EXPECT_NEAR(apply_gamma(Rgb<double>{0.5, 0.5, 0.5}, 0.5)[0], 0.70710678, 1e-8);
  EXPECT_EQ(apply_gamma(Rgb<double>{0.0, 1.0, 0.0}, 3.0), (Rgb<double>{0.0, 1.0, 0.0}));
  EXPECT_NEAR(apply_gain(Rgb<double>{0.2, 0.2, 0.2}, {1, 1, 1}, 3.0)[1], 0.6, 1e-12);
  EXPECT_EQ(apply_gain(Rgb<double>{0.5, 0.5, 0.5}, {1, 1, 1}, 3.0), (Rgb<double>{1, 1, 1}));
  EXPECT_EQ(apply_gain(Rgb<double>{0.3, 0.6, 0.9}, {1, 1, 1}, 1.0), (Rgb<double>{0.3, 0.6, 0.9}));
  // Strictly monotone in v.
  double prev = -1;
  for (double v = 0; v <= 1.0; v += 0.01) {
    const double g = apply_gamma(Rgb<double>{v, v, v}, 2.2)[0];
    ASSERT_GT(g, prev);
    prev = g;
  }
}

TEST(MattePass, UniformDepthPlanes) {
  std::mt19937_64 rng(3);
  const auto color = oracle::random_color(rng, 16, 12);
  MatteParams p;
  p.depth_m = 1.5;
  const auto near = matte_pass(color, DepthFrame(16, 12, 0.8f), p);
  const auto far = matte_pass(color, DepthFrame(16, 12, 4.0f), p);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 16; ++x) {
      ASSERT_EQ(near.at(x, y)[3], 1.0f);
      ASSERT_EQ(far.at(x, y)[3], 0.0f);
      for (int c = 0; c < 3; ++c) ASSERT_EQ(near.at(x, y)[c], color.at(x, y)[c]);
    }
  }
}

TEST(MattePass, AlphaPlaneIsPerPixelMap) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(0.0f, 4.0f);
  const auto color = oracle::random_color(rng, 20, 10);
  DepthFrame depth(20, 10);
  for (auto& d : depth.data()) d = u(rng);
  depth(3, 3) = std::nanf("");
  MatteParams p;
  p.depth_m = 1.7;
  p.rolloff_m = 0.6;
  p.invalid_depth_alpha = 0.25;
  AlphaMask plane;
  ColorFrame fg;
  matte_pass_into(color, depth, p, fg, &plane);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 20; ++x) {
      const float expect = compute_alpha(depth(x, y), 1.7f, 0.6f, 0.25f);
      ASSERT_EQ(fg.at(x, y)[3], expect);
      ASSERT_EQ(plane(x, y), expect);
    }
  }
}

TEST(MattePass, ForegroundAdjustmentOrder) {
  ColorFrame color(2, 1, {0.25f, 0.5f, 0.1f, 1});
  MatteParams p;
  p.gamma = 0.5;
  p.exposure_gain = 2.0;
  p.gain_rgb = {1.0, 0.5, 1.0};
  const auto fg = matte_pass(color, DepthFrame(2, 1, 1.0f), p);
  // gamma first, then gain x exposure, then clamp.
  EXPECT_NEAR(fg.at(0, 0)[0], 1.0f, 1e-6);
  EXPECT_NEAR(fg.at(0, 0)[1], std::sqrt(0.5f) * 0.5f * 2.0f, 1e-6);
  EXPECT_NEAR(fg.at(0, 0)[2], std::sqrt(0.1f) * 2.0f, 1e-6);
  p.adjust_target = AdjustTarget::background;
  const auto untouched = matte_pass(color, DepthFrame(2, 1, 1.0f), p);
  EXPECT_EQ(untouched.at(1, 0), color.at(1, 0));
}

TEST(MattePass, DimensionMismatch) {
  try {
    matte_pass(ColorFrame(4, 4), DepthFrame(4, 5, 1.0f), MatteParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
}

TEST(MattePass, SilhouetteOfTwoDepthSceneIsExact) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    SceneSpec spec;
    spec.subject_shape = trial % 2 ? SubjectShape::rectangle : SubjectShape::ellipse;
    spec.color_width = spec.depth_width = 40 + static_cast<int>(rng() % 60);
    spec.color_height = spec.depth_height = 40 + static_cast<int>(rng() % 60);
    spec.center_x = 0.3 + double(rng() % 40) / 100.0;
    spec.center_y = 0.3 + double(rng() % 40) / 100.0;
    spec.half_width = 0.1 + double(rng() % 15) / 100.0;
    spec.half_height = 0.1 + double(rng() % 15) / 100.0;
    spec.velocity_px_per_frame = double(rng() % 5);
    const std::uint64_t frame = rng() % 4;
    const auto [color, depth] = synth_scene(spec, frame);
    MatteParams p;
    p.depth_m = 2.0;
    const auto fg = matte_pass(color, upscale_depth(depth, color.width(), color.height()), p);
    const auto truth = scene_silhouette(spec, frame, spec.color_width, spec.color_height);
    for (int y = 0; y < truth.height(); ++y)
      for (int x = 0; x < truth.width(); ++x) ASSERT_EQ(fg.at(x, y)[3], truth(x, y)) << trial;
  }
}
