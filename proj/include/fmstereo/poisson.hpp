// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fmstereo/error.hpp"
#include "fmstereo/raster.hpp"

namespace fmstereo {

struct PoissonParams {
  /// Bound on the estimated remaining max error of unknown pixels.
  double tol = 1e-5;
  int max_iters = 10000;
  /// Over-relaxation factor; 1.0 is plain Gauss-Seidel.
  double omega = 1.9;
};

struct PoissonReport {
  int iterations = 0;
  /// Largest Gauss-Seidel correction of the last sweep.
  double max_residual = 0.0;
  bool converged = true;
  /// Unknown pixels in components with no known neighbour; they keep the
  /// generated values.
  std::size_t fallback_pixels = 0;
};

/// Gradient-domain blend. Known pixels (mask = 1) are copied from `warped`;
/// unknown pixels solve the discrete Poisson equation whose guidance field is
/// the gradient of `generated` and whose Dirichlet boundary is `warped`. The
/// image border is a natural (Neumann) boundary.
inline Image poisson_blend(const Image& generated, const Image& warped, const Mask& mask,
                           const PoissonParams& params = {}, PoissonReport* report = nullptr) {
  require_same_shape(generated, warped, "poisson_blend");
  require_same_extent(generated, mask, "poisson_blend mask");
  if (params.tol <= 0.0 || params.max_iters < 0 || !(params.omega > 0.0 && params.omega < 2.0)) {
    throw ConfigError("poisson_blend: need tol > 0, max_iters >= 0, 0 < omega < 2");
  }
  const int h = generated.height();
  const int w = generated.width();
  const int ch = generated.channels();
  PoissonReport rep;

  Image out = warped;
  // Component labelling; components without a known 4-neighbour fall back.
  std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
  std::vector<std::uint8_t> anchored;
  std::vector<int> stack;
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  int components = 0;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (mask(y0, x0) || label[y0 * w + x0] >= 0) continue;
      const int id = components++;
      anchored.push_back(0);
      stack.assign(1, y0 * w + x0);
      label[y0 * w + x0] = id;
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int y = p / w, x = p % w;
        for (int d = 0; d < 4; ++d) {
          const int yy = y + kDy[d], xx = x + kDx[d];
          if (!mask.contains(yy, xx)) continue;
          if (mask(yy, xx)) {
            anchored[id] = 1;
          } else if (label[yy * w + xx] < 0) {
            label[yy * w + xx] = id;
            stack.push_back(yy * w + xx);
          }
        }
      }
    }
  }

  struct Cell {
    int y, x, degree;
    double rhs[3];
  };
  std::vector<Cell> cells;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask(y, x)) continue;
      if (!anchored[label[y * w + x]]) {
        ++rep.fallback_pixels;
        for (int c = 0; c < ch; ++c) out(y, x, c) = generated(y, x, c);
        continue;
      }
      Cell cell{y, x, 0, {0, 0, 0}};
      for (int d = 0; d < 4; ++d) {
        const int yy = y + kDy[d], xx = x + kDx[d];
        if (!mask.contains(yy, xx)) continue;
        ++cell.degree;
        for (int c = 0; c < ch && c < 3; ++c) {
          cell.rhs[c] += static_cast<double>(generated(y, x, c)) - generated(yy, xx, c);
          if (mask(yy, xx)) cell.rhs[c] += warped(yy, xx, c);
        }
      }
      for (int c = 0; c < ch; ++c) out(y, x, c) = generated(y, x, c);
      cells.push_back(cell);
    }
  }

  // Unknown values are kept in double during the sweeps.
  Raster<double> f(h, w, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) f(y, x, c) = out(y, x, c);

  // Stops when the estimated remaining error, last change * rho / (1 - rho)
  // with rho the observed per-sweep contraction, falls below tol.
  rep.converged = cells.empty();
  double prev_change = 0.0;
  for (int it = 0; it < params.max_iters && !cells.empty(); ++it) {
    double max_res = 0.0;
    for (const Cell& cell : cells) {
      for (int c = 0; c < ch; ++c) {
        double sum = cell.rhs[c];
        for (int d = 0; d < 4; ++d) {
          const int yy = cell.y + kDy[d], xx = cell.x + kDx[d];
          if (mask.contains(yy, xx) && !mask(yy, xx)) sum += f(yy, xx, c);
        }
        const double target = sum / cell.degree;
        const double delta = target - f(cell.y, cell.x, c);
        max_res = std::max(max_res, std::abs(delta));
        f(cell.y, cell.x, c) += params.omega * delta;
      }
    }
    rep.iterations = it + 1;
    rep.max_residual = max_res;
    const double change = params.omega * max_res;
    const double rho = prev_change > 0.0 ? std::min(change / prev_change, 0.999) : 0.999;
    prev_change = change;
    if (change == 0.0 || (it > 0 && change * rho / (1.0 - rho) < params.tol)) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged && cells.empty()) rep.converged = true;
  for (const Cell& cell : cells)
    for (int c = 0; c < ch; ++c) out(cell.y, cell.x, c) = static_cast<float>(f(cell.y, cell.x, c));
  if (report) *report = rep;
  return out;
}

}  // namespace fmstereo
