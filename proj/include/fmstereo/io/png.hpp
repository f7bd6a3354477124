// SPDX-License-Identifier: Apache-2.0
#pragma once

// 8-bit PNG read/write through libpng.

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fmstereo/error.hpp"
#include "fmstereo/raster.hpp"

namespace fmstereo {

using Image8 = Raster<std::uint8_t>;

inline std::uint8_t quantize8(float v) {
  const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

inline Image8 to_8bit(const Image& img) {
  Image8 out(img.height(), img.width(), img.channels());
  for (std::size_t i = 0; i < img.size(); ++i) out.values()[i] = quantize8(img.values()[i]);
  return out;
}

inline Image from_8bit(const Image8& img) {
  Image out(img.height(), img.width(), img.channels());
  for (std::size_t i = 0; i < img.size(); ++i) out.values()[i] = img.values()[i] / 255.0f;
  return out;
}

namespace detail {
struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;
}  // namespace detail

/// Writes a 1- or 3-channel 8-bit image. Output bytes depend only on pixels.
inline void write_png(const std::filesystem::path& path, const Image8& img) {
  if (img.channels() != 1 && img.channels() != 3) throw IoError("png: only gray or RGB images");
  detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: write failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
  for (int y = 0; y < img.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(img.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Reads an 8-bit PNG, expanding palette/gray+alpha as needed. `channels`
/// selects 1 (gray) or 3 (RGB) output.
inline Image8 read_png(const std::filesystem::path& path, int channels = 3) {
  detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("cannot open: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: corrupt or unreadable file " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  const bool is_gray = color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA;
  if (channels == 3 && is_gray) png_set_gray_to_rgb(png);
  if (channels == 1 && !is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if (static_cast<int>(png_get_channels(png, info)) != channels) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: unexpected channel layout in " + path.string());
  }
  Image8 img(h, w, channels);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = img.data() + static_cast<std::size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  Image8 img(mask.height(), mask.width(), 1);
  for (std::size_t i = 0; i < mask.size(); ++i) img.values()[i] = mask.values()[i] ? 255 : 0;
  write_png(path, img);
}

inline Mask read_mask_png(const std::filesystem::path& path) {
  const Image8 img = read_png(path, 1);
  Mask m(img.height(), img.width(), 1);
  for (std::size_t i = 0; i < img.size(); ++i) m.values()[i] = img.values()[i] >= 128 ? 1 : 0;
  return m;
}

}  // namespace fmstereo
