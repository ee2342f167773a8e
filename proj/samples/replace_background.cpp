// Replaces the backdrop of a synthetic RGB-D capture: the subject stands at
// 1 m, the wall at 3 m, and everything past the 1.5 m threshold is swapped
// for a procedural sunset. Writes the foreground buffer and the composite.

#include <iostream>

#include "depthmatte/depthmatte.hpp"

int main(int argc, char** argv) {
  using namespace depthmatte;
  const std::string out_prefix = argc > 1 ? argv[1] : "replace_background";

  SceneSpec scene;
  scene.color_width = 720;
  scene.color_height = 960;
  scene.depth_width = 288;
  scene.depth_height = 384;
  scene.noise_sigma = 0.02;
  const auto [color, depth] = synth_scene(scene, 0);

  MatteParams params;
  params.depth_m = 1.5;
  params.rolloff_m = 0.19;
  params.kernel_slider = 4.2;  // 3x3 close
  params.exposure_gain = 1.4;
  params.adjust_target = AdjustTarget::foreground;

  // Register depth to the color grid, matte, close, composite.
  const DepthFrame registered = upscale_depth(depth, color.width(), color.height());
  ColorFrame fg = matte_pass(color, registered, params);
  replace_alpha(fg, close_alpha(extract_alpha(fg), kernel_from_slider(params.kernel_slider)));
  const ColorFrame bg = synth_background("sunset", color.width(), color.height());
  const ColorFrame out = composite(fg, bg, params);

  save_png(fg, out_prefix + "_foreground.png");
  save_png(out, out_prefix + "_composite.png");

  std::size_t covered = 0;
  for (const auto alpha = extract_alpha(fg); float a : alpha.data()) covered += a > 0.5f;
  std::cout << "foreground coverage: " << covered << " of " << fg.pixel_count() << " pixels\n"
            << "wrote " << out_prefix << "_foreground.png and " << out_prefix << "_composite.png\n";
  return 0;
}
