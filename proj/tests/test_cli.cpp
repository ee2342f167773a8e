#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "depthmatte/io.hpp"
#include "depthmatte/synth.hpp"
#include "oracles.hpp"

using namespace depthmatte;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string err;
};

/// Runs the CLI with stdout discarded and stderr captured.
Run cli(const std::string& args, const oracle::TempDir& dir) {
  const auto err_path = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + DEPTHMATTE_CLI + "\" " + args + " >/dev/null 2>\"" + err_path.string() + "\"";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(err_path);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

SceneSpec small_scene() {
  SceneSpec spec;
  spec.subject_shape = SubjectShape::rectangle;
  spec.color_width = 160;
  spec.color_height = 120;
  spec.depth_width = 80;
  spec.depth_height = 60;
  spec.half_width = 0.25;
  spec.half_height = 0.25;
  return spec;
}

fs::path write_spec(const oracle::TempDir& dir, const SceneSpec& spec) {
  const auto path = dir / "scene.json";
  std::ofstream(path) << scene_to_json(spec).dump();
  return path;
}

std::size_t count_files(const fs::path& dir, const std::string& prefix, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    n += name.rfind(prefix, 0) == 0 && e.path().extension() == ext;
  }
  return n;
}

}  // namespace

TEST(Synth, WritesFramesAndManifest) {
  oracle::TempDir dir("cli");
  const auto spec = write_spec(dir, small_scene());
  const auto r = cli("synth --spec " + spec.string() + " --frames 10 --out " + (dir / "ds").string(), dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(count_files(dir / "ds", "color_", ".png"), 10u);
  EXPECT_EQ(count_files(dir / "ds", "depth_", ".bin"), 10u);
  EXPECT_EQ(fs::file_size(dir / "ds" / "depth_000000.bin"), 80u * 60u * 4u);
  const auto m = load_manifest(dir / "ds" / "manifest.json");
  ASSERT_EQ(m.entries.size(), 10u);
  EXPECT_NO_THROW(validate_manifest(m));
}

TEST(Synth, VelocityShiftsTheSubject) {
  oracle::TempDir dir("cli");
  auto spec = small_scene();
  spec.velocity_px_per_frame = 4.0;
  spec.subject_color = {1, 1, 1};
  spec.background_color = {0, 0, 0};
  const auto r = cli("synth --spec " + write_spec(dir, spec).string() + " --frames 2 --out " + dir.path().string(), dir);
  ASSERT_EQ(r.status, 0) << r.err;
  auto mask = [](const ColorFrame& c) {
    AlphaMask m(c.width(), c.height());
    for (int y = 0; y < c.height(); ++y)
      for (int x = 0; x < c.width(); ++x) m(x, y) = c.at(x, y)[0] > 0.9f ? 1.0f : 0.0f;
    return m;
  };
  const double c0 = oracle::centroid_x(mask(load_color(dir / "color_000000.png")));
  const double c1 = oracle::centroid_x(mask(load_color(dir / "color_000001.png")));
  EXPECT_NEAR(c1 - c0, 4.0, 1e-9);
}

TEST(Synth, InvalidSpecFails) {
  oracle::TempDir dir("cli");
  auto spec = scene_to_json(small_scene());
  spec["subject_depth_m"] = 3.5;
  spec["background_depth_m"] = 3.0;
  std::ofstream(dir / "bad.json") << spec.dump();
  const auto r = cli("synth --spec " + (dir / "bad.json").string() + " --out " + (dir / "ds").string(), dir);
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("subject_depth_m"), std::string::npos) << r.err;
}

TEST(Process, CompositesEveryFrameAndWritesTimings) {
  oracle::TempDir dir("cli");
  ASSERT_EQ(cli("synth --spec " + write_spec(dir, small_scene()).string() + " --frames 4 --out " +
                    (dir / "ds").string(),
                dir)
                .status,
            0);
  const auto r = cli("process --manifest " + (dir / "ds" / "manifest.json").string() + " --out " +
                         (dir / "out").string() + " --depth-m 2.0 --rolloff-m 0 --kernel-slider 0",
                     dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(count_files(dir / "out", "composite_", ".png"), 4u);
  std::ifstream csv(dir / "out" / "timings.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 5u);
}

TEST(Process, HardThresholdReproducesTheSilhouette) {
  oracle::TempDir dir("cli");
  const auto spec = small_scene();  // subject 1 m, backdrop 3 m
  ASSERT_EQ(cli("synth --spec " + write_spec(dir, spec).string() + " --frames 1 --background checker --out " +
                    (dir / "ds").string(),
                dir)
                .status,
            0);
  const auto r = cli("process --manifest " + (dir / "ds" / "manifest.json").string() + " --out " +
                         (dir / "out").string() + " --depth-m 2.0 --rolloff-m 0 --kernel-slider 0",
                     dir);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto out = load_color(dir / "out" / "composite_000000.png");
  const auto color = load_color(dir / "ds" / "color_000000.png");
  const auto bg = load_color(dir / "ds" / "background.png");
  const auto sil = scene_silhouette(spec, 0, spec.color_width, spec.color_height);
  ASSERT_EQ(out.width(), 160);
  ASSERT_EQ(out.height(), 120);
  std::size_t mismatches = 0;
  for (int y = 0; y < 120; ++y) {
    for (int x = 0; x < 160; ++x) {
      const auto& want = sil(x, y) > 0.5f ? color : bg;
      for (int c = 0; c < 3; ++c) mismatches += out.at(x, y)[c] != want.at(x, y)[c];
    }
  }
  EXPECT_EQ(mismatches, 0u);
}

TEST(Process, MissingDepthFileNamesThePath) {
  oracle::TempDir dir("cli");
  ASSERT_EQ(cli("synth --spec " + write_spec(dir, small_scene()).string() + " --frames 2 --out " +
                    (dir / "ds").string(),
                dir)
                .status,
            0);
  fs::remove(dir / "ds" / "depth_000000.bin");
  const auto r = cli("process --manifest " + (dir / "ds" / "manifest.json").string() + " --out " +
                         (dir / "out").string(),
                     dir);
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("depth_000000.bin"), std::string::npos) << r.err;
}

TEST(Process, InvalidParamsExitWithUsageCode) {
  oracle::TempDir dir("cli");
  ASSERT_EQ(cli("synth --spec " + write_spec(dir, small_scene()).string() + " --frames 1 --out " +
                    (dir / "ds").string(),
                dir)
                .status,
            0);
  std::ofstream(dir / "p.json") << R"({"exposure_gain": 5.0})";
  const auto r = cli("process --manifest " + (dir / "ds" / "manifest.json").string() + " --params " +
                         (dir / "p.json").string() + " --out " + (dir / "out").string(),
                     dir);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("exposure_gain"), std::string::npos) << r.err;
}

TEST(Bench, WritesCsvAndMarkdown) {
  oracle::TempDir dir("cli");
  const auto r = cli("bench --resolutions 64x48 --kernels 0,3,9 --reps 3 --out " + (dir / "b").string(), dir);
  ASSERT_EQ(r.status, 0) << r.err;
  std::ifstream csv(dir / "b" / "bench.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 4u);
  EXPECT_TRUE(fs::exists(dir / "b" / "bench.md"));
}
