// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "fmstereo/geometry.hpp"
#include "fmstereo/raster.hpp"

namespace fmtest {

inline fmstereo::Camera camera(int w, int h, double fx) {
  fmstereo::Camera c;
  c.fx = c.fy = fx;
  c.cx = w / 2.0;
  c.cy = h / 2.0;
  c.width = w;
  c.height = h;
  return c;
}

inline fmstereo::Camera shifted(fmstereo::Camera c, double dx) {
  c.position[0] += dx;
  return c;
}

inline fmstereo::RgbdFrame constant_depth_frame(int w, int h, float depth) {
  fmstereo::RgbdFrame f{fmstereo::make_image(h, w), fmstereo::make_depth(h, w, depth),
                        fmstereo::make_mask(h, w, 1)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.color(y, x, 0) = static_cast<float>(x);
      f.color(y, x, 1) = static_cast<float>(y);
      f.color(y, x, 2) = 0.5f;
    }
  return f;
}

inline fmstereo::Mask random_mask(std::mt19937_64& rng, int h, int w, double density) {
  std::bernoulli_distribution on(density);
  fmstereo::Mask m = fmstereo::make_mask(h, w);
  for (auto& v : m.values()) v = on(rng) ? 1 : 0;
  return m;
}

/// PSNR over pixels where `select` is non-zero (all pixels when empty).
inline double psnr(const fmstereo::Image& a, const fmstereo::Image& b, const fmstereo::Mask& select = {}) {
  double se = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (!select.empty() && !select(y, x)) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = static_cast<double>(a(y, x, c)) - b(y, x, c);
        se += d * d;
        ++n;
      }
    }
  if (n == 0) return INFINITY;
  const double mse = se / static_cast<double>(n);
  return mse == 0.0 ? INFINITY : 10.0 * std::log10(1.0 / mse);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fmstereo_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fmtest
