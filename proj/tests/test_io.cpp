#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "depthmatte/io.hpp"
#include "depthmatte/synth.hpp"
#include "oracles.hpp"

using namespace depthmatte;

TEST(DepthFile, StreamingResolutionIs307200Bytes) {
  oracle::TempDir dir("io");
  const DepthFrame d(320, 240, 1.25f);
  write_depth(d, dir / "d.bin");
  EXPECT_EQ(std::filesystem::file_size(dir / "d.bin"), 307200u);
  const auto back = load_depth(dir / "d.bin", 320, 240);
  EXPECT_EQ(back.width(), 320);
  EXPECT_EQ(back.height(), 240);
  EXPECT_EQ(back(319, 239), 1.25f);
}

TEST(DepthFile, TwoByTwoLayoutIsRowMajorLittleEndian) {
  oracle::TempDir dir("io");
  write_depth(DepthFrame(2, 2, std::vector<float>{1.0f, 2.0f, 3.0f, 4.0f}), dir / "d.bin");
  const auto bytes = read_file(dir / "d.bin");
  ASSERT_EQ(bytes.size(), 16u);
  // 1.0f is 0x3F800000; little-endian puts the low byte first.
  const std::vector<std::uint8_t> one{0x00, 0x00, 0x80, 0x3F};
  EXPECT_TRUE(std::equal(one.begin(), one.end(), bytes.begin()));
  const std::vector<std::uint8_t> four{0x00, 0x00, 0x80, 0x40};
  EXPECT_TRUE(std::equal(four.begin(), four.end(), bytes.begin() + 12));
}

TEST(DepthFile, RoundTripIsBitExactIncludingNonFinite) {
  oracle::TempDir dir("io");
  std::mt19937_64 rng(11);
  std::vector<float> v(4096);
  for (auto& f : v) f = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
  v[0] = std::numeric_limits<float>::quiet_NaN();
  v[1] = std::numeric_limits<float>::infinity();
  v[2] = -std::numeric_limits<float>::infinity();
  v[3] = -0.0f;
  const DepthFrame d(64, 64, v);
  write_depth(d, dir / "d.bin");
  const auto back = load_depth(dir / "d.bin", 64, 64);
  for (std::size_t i = 0; i < v.size(); ++i) {
    ASSERT_EQ(std::bit_cast<std::uint32_t>(back.data()[i]), std::bit_cast<std::uint32_t>(v[i])) << i;
  }
}

TEST(DepthFile, WrongSizeIsSizeMismatch) {
  oracle::TempDir dir("io");
  std::ofstream(dir / "short.bin", std::ios::binary) << std::string(100, '\0');
  try {
    load_depth(dir / "short.bin", 320, 240);
    FAIL() << "expected SizeMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::size_mismatch);
    EXPECT_NE(std::string(e.what()).find("short.bin"), std::string::npos);
  }
}

TEST(DepthFile, MissingFileIsIoFailure) {
  try {
    load_depth("/nonexistent/depth.bin", 2, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io_failure);
  }
}

TEST(ColorFile, PngRoundTripWithinQuantization) {
  oracle::TempDir dir("io");
  std::mt19937_64 rng(3);
  auto img = oracle::random_color(rng, 17, 9);
  save_png(img, dir / "c.png");
  const auto back = load_color(dir / "c.png");
  ASSERT_EQ(back.width(), 17);
  ASSERT_EQ(back.height(), 9);
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    EXPECT_NEAR(back.data()[i], img.data()[i], 0.5 / 255.0 + 1e-6);
  }
}

TEST(ColorFile, OpaqueRgbPngGetsUnitAlpha) {
  oracle::TempDir dir("io");
  // Encode an RGB (no alpha) PNG directly through libpng's simplified API.
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 4;
  image.height = 3;
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(4 * 3 * 3, 77);
  const auto path = (dir / "rgb.png").string();
  ASSERT_TRUE(png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr));
  const auto frame = load_color(path);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) {
      EXPECT_EQ(frame.at(x, y)[3], 1.0f);
      EXPECT_FLOAT_EQ(frame.at(x, y)[0], 77.0f / 255.0f);
    }
  }
}

TEST(ColorFile, FullSizeJpegDecodes) {
  SceneSpec spec;  // 1440 x 1920 color
  const auto color = synth_color(spec, 0);
  const auto jpeg = encode_jpeg(color, 90);
  const auto back = decode_color(jpeg);
  EXPECT_EQ(back.width(), 1440);
  EXPECT_EQ(back.height(), 1920);
  for (float v : back.data()) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
}

TEST(ColorFile, TruncatedFilesAreDecodeFailures) {
  std::mt19937_64 rng(5);
  const auto img = oracle::random_color(rng, 32, 32);
  for (auto bytes : {encode_png(img), encode_jpeg(img)}) {
    bytes.resize(bytes.size() / 2);
    try {
      decode_color(bytes);
      FAIL() << "expected DecodeFailure";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::decode_failure);
    }
  }
  const std::vector<std::uint8_t> junk{'n', 'o', 't', ' ', 'a', 'n', ' ', 'i', 'm', 'g'};
  EXPECT_THROW(decode_color(junk), Error);
}

TEST(Manifest, SaveLoadResolvesRelativePaths) {
  oracle::TempDir dir("io");
  DatasetManifest m;
  m.entries.push_back({dir / "c0.png", dir / "d0.bin", 8, 6});
  m.background = dir / "bg.png";
  save_manifest(m, dir / "manifest.json");
  const auto text = read_file(dir / "manifest.json");
  const auto j = nlohmann::json::parse(text.begin(), text.end());
  EXPECT_EQ(j["entries"][0]["color"], "c0.png");
  const auto back = load_manifest(dir / "manifest.json");
  ASSERT_EQ(back.entries.size(), 1u);
  EXPECT_EQ(std::filesystem::weakly_canonical(back.entries[0].depth),
            std::filesystem::weakly_canonical(dir / "d0.bin"));
  EXPECT_EQ(back.entries[0].depth_width, 8);
  ASSERT_TRUE(back.background.has_value());
}

TEST(Manifest, ValidationChecksDepthSizes) {
  oracle::TempDir dir("io");
  write_depth(DepthFrame(4, 4, 1.0f), dir / "d.bin");
  save_png(ColorFrame(4, 4), dir / "c.png");
  DatasetManifest m;
  m.entries.push_back({dir / "c.png", dir / "d.bin", 4, 4});
  EXPECT_NO_THROW(validate_manifest(m));
  m.entries[0].depth_width = 5;
  EXPECT_THROW(validate_manifest(m), Error);
}

// ---------------------------------------------------------------------------
// Synthetic scenes

TEST(Synth, StaticSceneIsFrameInvariant) {
  SceneSpec spec;
  spec.color_width = 64;
  spec.color_height = 48;
  spec.depth_width = 32;
  spec.depth_height = 24;
  const auto [c0, d0] = synth_scene(spec, 0);
  const auto [c7, d7] = synth_scene(spec, 7);
  EXPECT_TRUE(std::equal(c0.data().begin(), c0.data().end(), c7.data().begin()));
  EXPECT_TRUE(std::equal(d0.data().begin(), d0.data().end(), d7.data().begin()));
}

TEST(Synth, DepthHasExactlyTwoValues) {
  SceneSpec spec;
  spec.color_width = 90;
  spec.color_height = 120;
  spec.depth_width = 36;
  spec.depth_height = 48;
  const auto d = synth_depth(spec, 3);
  std::set<float> values(d.data().begin(), d.data().end());
  EXPECT_EQ(values, (std::set<float>{1.0f, 3.0f}));
}

TEST(Synth, VelocityShiftsCentroidByFourPixels) {
  SceneSpec spec;
  spec.color_width = 200;
  spec.color_height = 100;
  spec.depth_width = 100;
  spec.depth_height = 50;
  spec.velocity_px_per_frame = 4.0;
  spec.subject_color = {1.0f, 1.0f, 1.0f};
  spec.background_color = {0.0f, 0.0f, 0.0f};
  // Mask the rendered color independently of the generator's silhouette.
  auto mask_of = [](const ColorFrame& c) {
    AlphaMask m(c.width(), c.height());
    for (int y = 0; y < c.height(); ++y)
      for (int x = 0; x < c.width(); ++x) m(x, y) = c.at(x, y)[0] > 0.9f ? 1.0f : 0.0f;
    return m;
  };
  const double c0 = oracle::centroid_x(mask_of(synth_color(spec, 0)));
  const double c1 = oracle::centroid_x(mask_of(synth_color(spec, 1)));
  EXPECT_NEAR(c1 - c0, 4.0, 1e-9);
}

TEST(Synth, NoiseIsSeededAndColorOnly) {
  SceneSpec spec;
  spec.color_width = 40;
  spec.color_height = 30;
  spec.depth_width = 20;
  spec.depth_height = 15;
  spec.noise_sigma = 0.05;
  spec.seed = 9;
  EXPECT_EQ(synth_color(spec, 2), synth_color(spec, 2));
  spec.seed = 10;
  const auto other = synth_color(spec, 2);
  spec.seed = 9;
  EXPECT_FALSE(other == synth_color(spec, 2));
  const auto depth = synth_depth(spec, 2);
  std::set<float> values(depth.data().begin(), depth.data().end());
  EXPECT_EQ(values.size(), 2u);
}

TEST(Synth, InvalidSpecsAreRejected) {
  SceneSpec spec;
  spec.subject_depth_m = 3.5;
  spec.background_depth_m = 3.0;
  EXPECT_THROW(validate(spec), ValidationError);
  spec = {};
  spec.background_depth_m = 6.0;
  EXPECT_THROW(validate(spec), ValidationError);
  spec = {};
  spec.noise_sigma = -1;
  EXPECT_THROW(validate(spec), ValidationError);
}

TEST(Synth, SpecJsonRoundTrip) {
  SceneSpec spec;
  spec.subject_shape = SubjectShape::rectangle;
  spec.velocity_px_per_frame = 2.5;
  spec.color_width = 320;
  spec.depth_width = 160;
  const auto back = scene_from_json(scene_to_json(spec));
  EXPECT_EQ(back.subject_shape, SubjectShape::rectangle);
  EXPECT_EQ(back.velocity_px_per_frame, 2.5);
  EXPECT_EQ(back.color_width, 320);
  EXPECT_EQ(back.depth_width, 160);
  EXPECT_THROW(scene_from_json({{"subject_depth_m", 4.0}, {"background_depth_m", 2.0}}), ValidationError);
}
