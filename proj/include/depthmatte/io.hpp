#pragma once

// Depth capture files, color image codecs and the dataset manifest.

#include <bit>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>
#include <nlohmann/json.hpp>

#include "depthmatte/frame.hpp"

namespace depthmatte {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Depth files: headerless little-endian float32, row-major.

inline std::vector<std::uint8_t> encode_depth(const DepthFrame& frame) {
  std::vector<std::uint8_t> bytes(frame.size() * 4);
  const auto depths = frame.data();
  for (std::size_t i = 0; i < depths.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(depths[i]);
    bytes[4 * i + 0] = static_cast<std::uint8_t>(bits);
    bytes[4 * i + 1] = static_cast<std::uint8_t>(bits >> 8);
    bytes[4 * i + 2] = static_cast<std::uint8_t>(bits >> 16);
    bytes[4 * i + 3] = static_cast<std::uint8_t>(bits >> 24);
  }
  return bytes;
}

inline DepthFrame decode_depth(std::span<const std::uint8_t> bytes, int width, int height) {
  if (width < 1 || height < 1 || bytes.size() != detail::area(width, height) * 4) {
    throw Error(Errc::size_mismatch, "expected " + std::to_string(detail::area(width, height) * 4) +
                                         " bytes for " + std::to_string(width) + "x" +
                                         std::to_string(height) + " depth, got " +
                                         std::to_string(bytes.size()));
  }
  std::vector<float> depths(detail::area(width, height));
  for (std::size_t i = 0; i < depths.size(); ++i) {
    const std::uint32_t bits = std::uint32_t(bytes[4 * i]) | (std::uint32_t(bytes[4 * i + 1]) << 8) |
                               (std::uint32_t(bytes[4 * i + 2]) << 16) |
                               (std::uint32_t(bytes[4 * i + 3]) << 24);
    depths[i] = std::bit_cast<float>(bits);
  }
  return DepthFrame(width, height, std::move(depths));
}

inline std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::io_failure, "read failed for " + path.string());
  return bytes;
}

inline void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_failure, "write failed for " + path.string());
}

inline DepthFrame load_depth(const fs::path& path, int width, int height) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw Error(Errc::io_failure, "cannot stat " + path.string() + ": " + ec.message());
  if (width < 1 || height < 1 || size != detail::area(width, height) * 4) {
    throw Error(Errc::size_mismatch, path.string() + " has " + std::to_string(size) +
                                         " bytes, expected " +
                                         std::to_string(detail::area(width, height) * 4) + " for " +
                                         std::to_string(width) + "x" + std::to_string(height));
  }
  const auto bytes = read_file(path);
  return decode_depth(bytes, width, height);
}

inline void write_depth(const DepthFrame& frame, const fs::path& path) {
  write_file(path, encode_depth(frame));
}

// ---------------------------------------------------------------------------
// Color codecs. Decoding goes straight to unit-interval floats; 8-bit
// quantization only happens on encode.

namespace detail {

inline std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0f));
}

inline ColorFrame from_rgba8(const std::uint8_t* rgba, int width, int height) {
  ColorFrame frame(width, height);
  auto out = frame.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = float(rgba[i]) / 255.0f;
  return frame;
}

inline std::vector<std::uint8_t> to_rgba8(const ColorFrame& frame) {
  const auto in = frame.data();
  std::vector<std::uint8_t> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = quantize(in[i]);
  return out;
}

inline ColorFrame decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(Errc::decode_failure, std::string("png: ") + image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  if (image.width < 1 || image.height < 1) {
    png_image_free(&image);
    throw Error(Errc::decode_failure, "png: empty image");
  }
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(Errc::decode_failure, "png: " + msg);
  }
  return from_rgba8(rgba.data(), static_cast<int>(image.width), static_cast<int>(image.height));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf escape;
  char message[JMSG_LENGTH_MAX];
};

extern "C" inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->escape, 1);
}

// libjpeg treats a premature end of data as a warning and pads the image with
// gray; a corrupt stream is a decode failure here.
extern "C" inline void jpeg_warning_as_error(j_common_ptr cinfo, int level) {
  if (level < 0) jpeg_error_exit(cinfo);
}

inline ColorFrame decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_warning_as_error;
  // Everything with a destructor lives above setjmp so longjmp never skips one.
  std::vector<std::uint8_t> rgba;
  std::vector<std::uint8_t> scanline;
  int width = 0;
  int height = 0;
  if (setjmp(err.escape)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(Errc::decode_failure, std::string("jpeg: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  rgba.resize(area(width, height) * 4);
  scanline.resize(static_cast<std::size_t>(width) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = scanline.data();
    const auto y = cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
    std::uint8_t* dst = rgba.data() + static_cast<std::size_t>(y) * width * 4;
    for (int x = 0; x < width; ++x) {
      dst[4 * x + 0] = scanline[3 * x + 0];
      dst[4 * x + 1] = scanline[3 * x + 1];
      dst[4 * x + 2] = scanline[3 * x + 2];
      dst[4 * x + 3] = 255;
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_rgba8(rgba.data(), width, height);
}

}  // namespace detail

/// Decodes a PNG or JPEG byte stream, sniffed by signature.
inline ColorFrame decode_color(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPng, 8) == 0) return detail::decode_png(bytes);
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return detail::decode_jpeg(bytes);
  }
  throw Error(Errc::decode_failure, "not a PNG or JPEG stream");
}

inline ColorFrame load_color(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_color(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

inline std::vector<std::uint8_t> encode_png(const ColorFrame& frame) {
  const auto rgba = detail::to_rgba8(frame);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = PNG_FORMAT_RGBA;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgba.data(), 0, nullptr)) {
    throw Error(Errc::io_failure, std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgba.data(), 0, nullptr)) {
    throw Error(Errc::io_failure, std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

/// Baseline JPEG of the RGB channels; alpha is dropped.
inline std::vector<std::uint8_t> encode_jpeg(const ColorFrame& frame, int quality = 85) {
  jpeg_compress_struct cinfo{};
  detail::JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = detail::jpeg_error_exit;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  std::vector<std::uint8_t> scanline(static_cast<std::size_t>(frame.width()) * 3);
  if (setjmp(err.escape)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw Error(Errc::io_failure, std::string("jpeg encode: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(frame.width());
  cinfo.image_height = static_cast<JDIMENSION>(frame.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    const float* src = frame.row(static_cast<int>(cinfo.next_scanline));
    for (int x = 0; x < frame.width(); ++x) {
      for (int c = 0; c < 3; ++c) scanline[3 * x + c] = detail::quantize(src[4 * x + c]);
    }
    JSAMPROW row = scanline.data();
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return out;
}

inline void save_png(const ColorFrame& frame, const fs::path& path) {
  write_file(path, encode_png(frame));
}

// ---------------------------------------------------------------------------
// Dataset manifest.

struct ManifestEntry {
  fs::path color;
  fs::path depth;
  int depth_width = 0;
  int depth_height = 0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::optional<fs::path> background;
};

inline nlohmann::json manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::json j;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    j["entries"].push_back({{"color", e.color.generic_string()},
                            {"depth", e.depth.generic_string()},
                            {"depth_width", e.depth_width},
                            {"depth_height", e.depth_height}});
  }
  j["background"] = manifest.background ? nlohmann::json(manifest.background->generic_string())
                                        : nlohmann::json(nullptr);
  return j;
}

/// Relative paths inside the manifest resolve against base_dir.
inline DatasetManifest manifest_from_json(const nlohmann::json& j, const fs::path& base_dir = {}) {
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  DatasetManifest manifest;
  try {
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.color = resolve(e.at("color").get<std::string>());
      entry.depth = resolve(e.at("depth").get<std::string>());
      entry.depth_width = e.at("depth_width").get<int>();
      entry.depth_height = e.at("depth_height").get<int>();
      if (entry.depth_width < 1 || entry.depth_height < 1) {
        throw Error(Errc::decode_failure, "manifest entry has non-positive depth dimensions");
      }
      manifest.entries.push_back(std::move(entry));
    }
    if (j.contains("background") && !j["background"].is_null()) {
      manifest.background = resolve(j["background"].get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::decode_failure, std::string("manifest: ") + e.what());
  }
  return manifest;
}

inline DatasetManifest load_manifest(const fs::path& path) {
  const auto bytes = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::decode_failure, path.string() + ": " + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

/// Writes the manifest with paths relative to its own directory when possible.
inline void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  DatasetManifest rel = manifest;
  const auto base = fs::absolute(path).parent_path();
  auto relativize = [&](fs::path& p) {
    auto r = fs::absolute(p).lexically_normal().lexically_relative(base.lexically_normal());
    if (!r.empty() && *r.begin() != "..") p = r;
  };
  for (auto& e : rel.entries) {
    relativize(e.color);
    relativize(e.depth);
  }
  if (rel.background) relativize(*rel.background);
  const auto text = manifest_to_json(rel).dump(2);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

/// Checks every entry's depth file against its declared dimensions.
inline void validate_manifest(const DatasetManifest& manifest) {
  for (const auto& e : manifest.entries) {
    std::error_code ec;
    const auto size = fs::file_size(e.depth, ec);
    if (ec) throw Error(Errc::io_failure, "cannot stat " + e.depth.string() + ": " + ec.message());
    if (size != detail::area(e.depth_width, e.depth_height) * 4) {
      throw Error(Errc::size_mismatch, e.depth.string() + " has " + std::to_string(size) +
                                           " bytes, expected " +
                                           std::to_string(detail::area(e.depth_width, e.depth_height) * 4));
    }
    if (!fs::exists(e.color, ec)) throw Error(Errc::io_failure, "missing color file " + e.color.string());
  }
}

}  // namespace depthmatte
