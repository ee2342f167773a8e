// depthmatte: offline processing, synthetic datasets, benchmarks and the live
// tuning service behind one binary.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "depthmatte/depthmatte.hpp"
#include "depthmatte/service.hpp"

namespace fs = std::filesystem;
using namespace depthmatte;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;

nlohmann::json read_json(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::decode_failure, path.string() + ": " + e.what());
  }
}

std::string frame_name(const char* prefix, std::uint64_t index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06llu%s", prefix, static_cast<unsigned long long>(index), ext);
  return buf;
}

DepthCadence parse_cadence(const std::string& s) {
  return s == "paired" ? DepthCadence::paired : DepthCadence::reuse;
}

/// Params precedence: individual flags > --params file > defaults.
struct ParamFlags {
  std::string file;
  std::optional<double> depth_m;
  std::optional<double> rolloff_m;
  std::optional<double> kernel_slider;

  void add_to(CLI::App* app) {
    app->add_option("--params", file, "JSON parameter file (same schema as set_params)")->check(CLI::ExistingFile);
    app->add_option("--depth-m", depth_m, "depth threshold D in meters");
    app->add_option("--rolloff-m", rolloff_m, "roll-off width R in meters");
    app->add_option("--kernel-slider", kernel_slider, "close kernel slider value");
  }

  MatteParams resolve() const {
    MatteParams p;
    if (!file.empty()) p = params_from_json(read_json(file));
    nlohmann::json overrides = nlohmann::json::object();
    if (depth_m) overrides["depth_m"] = *depth_m;
    if (rolloff_m) overrides["rolloff_m"] = *rolloff_m;
    if (kernel_slider) overrides["kernel_slider"] = *kernel_slider;
    return apply_update(p, overrides);
  }
};

std::vector<std::pair<int, int>> parse_resolutions(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    int w = 0;
    int h = 0;
    char x = 0;
    std::istringstream one(item);
    if (!(one >> w >> x >> h) || (x != 'x' && x != 'X') || w < 1 || h < 1) {
      throw ValidationError("resolutions", "expected WxH[,WxH...], got '" + item + "'");
    }
    out.emplace_back(w, h);
  }
  if (out.empty()) throw ValidationError("resolutions", "empty list");
  return out;
}

// ---------------------------------------------------------------------------

struct ProcessArgs {
  std::string manifest;
  std::string out;
  std::optional<std::size_t> frames;
  std::string cadence = "reuse";
  std::string background;
  ParamFlags params;
};

int run_process(const ProcessArgs& a) {
  const MatteParams params = a.params.resolve();
  DatasetManifest manifest = load_manifest(a.manifest);
  DatasetSource source(manifest, parse_cadence(a.cadence));
  fs::create_directories(a.out);

  std::size_t n = manifest.entries.size();
  if (a.frames) n = std::min(n, *a.frames);
  StreamOptions options;
  if (!a.background.empty()) {
    const std::string name = a.background;
    options.background_name = [name] { return name; };
  }
  FixedParams feed(params);
  const auto timings = run_stream(
      source, feed,
      [&](const ColorFrame& composite, const FrameTimings& t, const std::vector<std::uint8_t>&) {
        save_png(composite, fs::path(a.out) / frame_name("composite", t.frame_index, ".png"));
      },
      n, options);
  std::ofstream csv(fs::path(a.out) / "timings.csv");
  write_timings_csv(csv, timings);
  if (!csv) throw Error(Errc::io_failure, "cannot write timings.csv in " + a.out);
  std::cout << "wrote " << timings.size() << " composites to " << a.out << "\n";
  return 0;
}

struct SynthArgs {
  std::string spec;
  std::string out;
  std::size_t frames = 10;
  std::optional<std::uint64_t> seed;
  std::string background = "gradient";
};

int run_synth(const SynthArgs& a) {
  SceneSpec spec = a.spec.empty() ? SceneSpec{} : scene_from_json(read_json(a.spec));
  if (a.seed) spec.seed = *a.seed;
  validate(spec);
  const fs::path out(a.out);
  fs::create_directories(out);
  DatasetManifest manifest;
  for (std::size_t i = 0; i < a.frames; ++i) {
    const auto [color, depth] = synth_scene(spec, i);
    ManifestEntry e{out / frame_name("color", i, ".png"), out / frame_name("depth", i, ".bin"), depth.width(),
                    depth.height()};
    save_png(color, e.color);
    write_depth(depth, e.depth);
    manifest.entries.push_back(std::move(e));
  }
  manifest.background = out / "background.png";
  save_png(synth_background(a.background, spec.color_width, spec.color_height), *manifest.background);
  save_manifest(manifest, out / "manifest.json");
  std::ofstream(out / "scene.json") << scene_to_json(spec).dump(2) << "\n";
  std::cout << "wrote " << a.frames << " frames and manifest.json to " << a.out << "\n";
  return 0;
}

struct BenchArgs {
  std::string resolutions = "320x240,1440x1920";
  std::vector<int> kernels{0, 3, 5, 7, 9};
  int reps = 15;
  std::string out = "bench";
  std::string pipeline;
  bool single_threaded = false;
};

int run_bench_cmd(const BenchArgs& a) {
  BenchConfig config;
  config.resolutions = parse_resolutions(a.resolutions);
  config.kernels = a.kernels;
  config.repetitions = a.reps;
  config.single_threaded = a.single_threaded;
  const auto rows = run_bench(config);
  fs::create_directories(a.out);
  std::ofstream csv(fs::path(a.out) / "bench.csv");
  write_bench_csv(csv, rows);
  std::ofstream md(fs::path(a.out) / "bench.md");
  write_bench_markdown(md, rows);
  if (!a.pipeline.empty()) {
    md << "\n# Full pipeline (align through composite, 9x9 close)\n\n| resolution | median (ms) | p95 (ms) | within 16.67 ms |\n|---|---|---|---|\n";
    for (const auto& [w, h] : parse_resolutions(a.pipeline)) {
      const auto r = run_pipeline_bench(w, h, 9, a.reps);
      md << "| " << w << "x" << h << " | " << double(r.median_ns) / 1e6 << " | " << double(r.p95_ns) / 1e6 << " | "
         << (r.within_budget() ? "yes" : "no") << " |\n";
    }
  }
  write_bench_csv(std::cout, rows);
  return 0;
}

struct ServeArgs {
  std::string bind = "127.0.0.1:8080";
  std::string manifest;
  std::string spec;
  std::string cadence = "reuse";
  std::string static_dir;
  std::string format = "jpeg";
  bool realtime = true;
  ParamFlags params;
  std::optional<std::uint64_t> seed;
};

int run_serve(const ServeArgs& a) {
  ServiceConfig config;
  std::tie(config.host, config.port) = parse_bind(a.bind);
  config.initial_params = a.params.resolve();
  config.realtime = a.realtime;
  config.default_format = a.format == "png" ? FrameFormat::png : FrameFormat::jpeg;
  if (!a.static_dir.empty()) config.static_dir = a.static_dir;
  const DepthCadence cadence = parse_cadence(a.cadence);
  if (!a.manifest.empty()) {
    const DatasetManifest manifest = load_manifest(a.manifest);
    validate_manifest(manifest);
    config.make_source = [manifest, cadence] { return std::make_unique<DatasetSource>(manifest, cadence); };
  } else {
    SceneSpec spec = a.spec.empty() ? SceneSpec{} : scene_from_json(read_json(a.spec));
    if (a.seed) spec.seed = *a.seed;
    if (a.spec.empty()) spec.velocity_px_per_frame = 4.0;
    validate(spec);
    config.make_source = [spec, cadence] { return std::make_unique<SyntheticSource>(spec, cadence); };
  }
  TuningServer server(std::move(config));
  const auto port = server.start();
  std::cout << "serving on " << server.config().host << ":" << port << std::endl;
  server.stop_on_signals();
  server.wait();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-threshold background replacement for RGB-D streams"};
  app.require_subcommand(1);

  ProcessArgs process;
  auto* p = app.add_subcommand("process", "composite a dataset into a PNG sequence plus timings.csv");
  p->add_option("--manifest", process.manifest, "dataset manifest.json")->required()->check(CLI::ExistingFile);
  p->add_option("--out", process.out, "output directory")->required();
  p->add_option("--frames", process.frames, "process at most this many frames");
  p->add_option("--depth-cadence", process.cadence, "reuse: depth at half the color rate; paired: one per frame")
      ->check(CLI::IsMember({"reuse", "paired"}));
  p->add_option("--background", process.background, "background name (default: the manifest's image)");
  process.params.add_to(p);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic RGB-D dataset and its manifest");
  s->add_option("--spec", synth.spec, "scene JSON")->check(CLI::ExistingFile);
  s->add_option("--frames", synth.frames, "number of frames")->check(CLI::PositiveNumber);
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--seed", synth.seed, "noise seed (overrides the spec)");
  s->add_option("--background", synth.background, "procedural background written as background.png")
      ->check(CLI::IsMember(builtin_backgrounds()));

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "second-pass latency sweep over resolutions and kernels");
  b->add_option("--resolutions", bench.resolutions, "comma-separated WxH list");
  b->add_option("--kernels", bench.kernels, "close kernels to sweep")->delimiter(',');
  b->add_option("--reps", bench.reps, "timed repetitions per configuration")->check(CLI::Range(3, 100000));
  b->add_option("--out", bench.out, "directory for bench.csv and bench.md");
  b->add_option("--pipeline", bench.pipeline, "also time the full pipeline at these WxH resolutions");
  b->add_flag("--single-threaded", bench.single_threaded, "pin the kernels to one worker thread");

  ServeArgs serve;
  auto* v = app.add_subcommand("serve", "run the live tuning service");
  v->add_option("--bind", serve.bind, "host:port to listen on");
  v->add_option("--manifest", serve.manifest, "serve a dataset instead of a synthetic scene")->check(CLI::ExistingFile);
  v->add_option("--spec", serve.spec, "synthetic scene JSON")->check(CLI::ExistingFile);
  v->add_option("--seed", serve.seed, "synthetic scene seed");
  v->add_option("--depth-cadence", serve.cadence)->check(CLI::IsMember({"reuse", "paired"}));
  v->add_option("--static", serve.static_dir, "directory with the browser console bundle")->check(CLI::ExistingDirectory);
  v->add_option("--format", serve.format, "default frame encoding")->check(CLI::IsMember({"png", "jpeg"}));
  v->add_flag("--realtime,!--no-realtime", serve.realtime, "pace frames at 60 Hz (default on)");
  serve.params.add_to(v);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*p) return run_process(process);
    if (*s) return run_synth(synth);
    if (*b) return run_bench_cmd(bench);
    if (*v) return run_serve(serve);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
