// SPDX-License-Identifier: Apache-2.0
#pragma once

// Portable float map: "Pf" (1 channel) or "PF" (3 channels), negative scale
// = little-endian, rows stored bottom to top.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fmstereo/error.hpp"
#include "fmstereo/raster.hpp"

namespace fmstereo {

inline void write_pfm(const std::filesystem::path& path, const Raster<float>& img) {
  if (img.channels() != 1 && img.channels() != 3) throw IoError("pfm: only 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << (img.channels() == 3 ? "PF" : "Pf") << '\n' << img.width() << ' ' << img.height() << "\n-1.0\n";
  const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
  std::vector<unsigned char> row(stride * 4);
  for (int y = img.height() - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < stride; ++i) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(img.data()[y * stride + i]);
      for (int b = 0; b < 4; ++b) row[i * 4 + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("pfm: write failed for " + path.string());
}

inline Raster<float> read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();
  if ((magic != "Pf" && magic != "PF") || w <= 0 || h <= 0 || scale == 0.0 || !in) {
    throw IoError("pfm: bad header in " + path.string());
  }
  const int ch = magic == "PF" ? 3 : 1;
  const bool little = scale < 0.0;
  Raster<float> img(h, w, ch);
  const std::size_t stride = static_cast<std::size_t>(w) * ch;
  std::vector<unsigned char> row(stride * 4);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw IoError("pfm: truncated data in " + path.string());
    for (std::size_t i = 0; i < stride; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        const int shift = little ? 8 * b : 8 * (3 - b);
        bits |= static_cast<std::uint32_t>(row[i * 4 + b]) << shift;
      }
      img.data()[y * stride + i] = std::bit_cast<float>(bits);
    }
  }
  return img;
}

}  // namespace fmstereo
