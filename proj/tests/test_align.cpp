#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "depthmatte/align.hpp"
#include "oracles.hpp"

using namespace depthmatte;

namespace {

void expect_matches_oracle(const DepthFrame& src, int tw, int th, double tol) {
  const auto fast = upscale_depth(src, tw, th);
  const auto ref = oracle::bilinear(src, tw, th);
  ASSERT_EQ(fast.width(), tw);
  ASSERT_EQ(fast.height(), th);
  for (int y = 0; y < th; ++y) {
    for (int x = 0; x < tw; ++x) {
      const double r = ref[static_cast<std::size_t>(y) * tw + x];
      const double f = fast(x, y);
      if (std::isnan(r)) {
        ASSERT_TRUE(std::isnan(f)) << x << "," << y;
      } else {
        ASSERT_NEAR(f, r, tol) << x << "," << y;
      }
    }
  }
}

}  // namespace

TEST(Upscale, TwoByTwoDoubledMatchesOracle) {
  expect_matches_oracle(DepthFrame(2, 2, std::vector<float>{1, 2, 3, 4}), 4, 4, 1e-6);
  // Hand-checked corners and an interior sample: output (1,1) samples
  // source (0.25, 0.25) -> 1 + 0.25 * 1 + 0.25 * 2 = 1.75.
  const auto up = upscale_depth(DepthFrame(2, 2, std::vector<float>{1, 2, 3, 4}), 4, 4);
  EXPECT_FLOAT_EQ(up(0, 0), 1.0f);
  EXPECT_FLOAT_EQ(up(3, 3), 4.0f);
  EXPECT_FLOAT_EQ(up(1, 1), 1.75f);
}

TEST(Upscale, FactorTwoPointFiveFullSize) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.3f, 5.0f);
  DepthFrame src(576, 768);
  for (auto& d : src.data()) d = u(rng);
  expect_matches_oracle(src, 1440, 1920, 1e-5);
}

TEST(Upscale, RandomSmallRastersMatchOracle) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> dim(1, 12);
  std::uniform_int_distribution<int> extra(0, 20);
  std::uniform_real_distribution<float> depth(0.1f, 5.0f);
  for (int trial = 0; trial < 100; ++trial) {
    DepthFrame src(dim(rng), dim(rng));
    for (auto& d : src.data()) d = depth(rng);
    expect_matches_oracle(src, src.width() + extra(rng), src.height() + extra(rng), 1e-6);
  }
}

TEST(Upscale, InvalidSamplesPropagate) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> depth(0.1f, 5.0f);
  for (int trial = 0; trial < 30; ++trial) {
    DepthFrame src(7, 5);
    for (auto& d : src.data()) d = depth(rng);
    src(3, 2) = std::nanf("");
    src(0, 4) = 0.0f;
    src(6, 0) = -std::numeric_limits<float>::infinity();
    expect_matches_oracle(src, 18, 13, 1e-6);
  }
  // A constant map with a hole: the hole's neighbourhood is invalid, the rest constant.
  DepthFrame src(4, 4, 1.7f);
  src(1, 1) = std::nanf("");
  const auto up = upscale_depth(src, 8, 8);
  EXPECT_TRUE(std::isnan(up(2, 2)));
  EXPECT_EQ(up(7, 7), 1.7f);
}

TEST(Upscale, ConstantStaysConstantAndIdentityIsExact) {
  const auto up = upscale_depth(DepthFrame(13, 7, 1.7f), 40, 33);
  for (float d : up.data()) ASSERT_FLOAT_EQ(d, 1.7f);
  std::mt19937_64 rng(4);
  DepthFrame src(9, 6);
  for (auto& d : src.data()) d = float(rng() % 1000) / 100.0f;
  const auto same = upscale_depth(src, 9, 6);
  EXPECT_TRUE(std::equal(src.data().begin(), src.data().end(), same.data().begin()));
}

TEST(Upscale, IdentitySizeStillMarksInvalidSamples) {
  DepthFrame src(3, 2, std::vector<float>{1.0f, 0.0f, 2.0f, -1.0f, 3.0f, std::numeric_limits<float>::infinity()});
  const auto same = upscale_depth(src, 3, 2);
  const auto want = oracle::bilinear(src, 3, 2);
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(std::isnan(same.data()[i]), std::isnan(want[i])) << i;
    if (!std::isnan(want[i])) {
      EXPECT_EQ(same.data()[i], want[i]);
    }
  }
}

TEST(Upscale, ConvexWhereValid) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> depth(0.5f, 4.0f);
  DepthFrame src(10, 10);
  for (auto& d : src.data()) d = depth(rng);
  const auto [lo, hi] = std::minmax_element(src.data().begin(), src.data().end());
  for (const auto up = upscale_depth(src, 37, 23); float d : up.data()) {
    ASSERT_GE(d, *lo);
    ASSERT_LE(d, *hi);
  }
}

TEST(Upscale, SmallerTargetIsBadTarget) {
  try {
    upscale_depth(DepthFrame(10, 10, 1.0f), 9, 20);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::bad_target);
  }
}

TEST(Upscale, NearestModePicksSourceSamples) {
  const DepthFrame src(2, 2, std::vector<float>{1, 2, 3, 4});
  const auto up = upscale_depth(src, 4, 4, DepthInterp::nearest);
  EXPECT_EQ(up(0, 0), 1.0f);
  EXPECT_EQ(up(1, 1), 1.0f);
  EXPECT_EQ(up(2, 1), 2.0f);
  EXPECT_EQ(up(3, 3), 4.0f);
}

TEST(CenterCrop, WiderInputTrimsEightyPixelsEachSide) {
  const auto r = center_crop_rect(1600, 1920, 1440, 1920);
  EXPECT_EQ(r.x, 80);
  EXPECT_EQ(r.y, 0);
  EXPECT_EQ(r.width, 1440);
  EXPECT_EQ(r.height, 1920);
  // Content check on a small analogue: columns tagged by index survive the crop unchanged.
  ColorFrame img(20, 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 20; ++x) img.set(x, y, {x / 32.0f, y / 32.0f, 0.5f, 1});
  const auto out = center_crop_scale(img, 18, 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 18; ++x) ASSERT_EQ(out.at(x, y), img.at(x + 1, y));
}

TEST(CenterCrop, SameSizeIsIdentityAndSolidStaysSolid) {
  std::mt19937_64 rng(6);
  const auto img = oracle::random_color(rng, 15, 20);
  EXPECT_EQ(center_crop_scale(img, 15, 20), img);
  const ColorFrame solid(33, 17, {0.2f, 0.4f, 0.6f, 1.0f});
  for (const auto out = center_crop_scale(solid, 48, 64); float v : out.data()) {
    ASSERT_TRUE(v == 0.2f || v == 0.4f || v == 0.6f || v == 1.0f) << v;
  }
}

TEST(CenterCrop, CenterPixelPreservedAtIntegerScale) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 2 * static_cast<int>(rng() % 10) + 3;
    const int h = 2 * static_cast<int>(rng() % 10) + 3;
    const auto img = oracle::random_color(rng, w, h);
    for (int s : {3, 5}) {
      const auto out = center_crop_scale(img, w * s, h * s);
      ASSERT_EQ(out.at(w * s / 2, h * s / 2), img.at(w / 2, h / 2));
    }
  }
}
