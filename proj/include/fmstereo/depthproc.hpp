// SPDX-License-Identifier: Apache-2.0
#pragma once

// Clip-level depth normalization and flow-aligned temporal smoothing.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fmstereo/error.hpp"
#include "fmstereo/parallel.hpp"
#include "fmstereo/raster.hpp"

namespace fmstereo {

/// Forward displacement frame i -> frame i+1 (channel 0 = dx, 1 = dy).
/// Where valid = 0 the flow value is meaningless and stored as 0.
struct FlowField {
  Raster<float> flow;
  Mask valid;
};

struct DepthClip {
  std::vector<DepthMap> depths;
  double near = 1.0;
  double far = 10.0;
};

/// One affine map from the clip-wide [min, max] onto [near, far]. A constant
/// clip maps to the range midpoint.
inline DepthClip normalize_depth(const std::vector<DepthMap>& raw, double near, double far) {
  if (raw.empty()) throw EmptyInputError("normalize_depth: empty clip");
  if (!(near > 0.0) || !(far > near)) throw ConfigError("normalize_depth: need far > near > 0");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& d : raw) {
    require_same_shape(d, raw.front(), "normalize_depth");
    for (float v : d.values()) {
      if (!(v > 0.0f) || !std::isfinite(v)) throw DomainError("normalize_depth: non-positive depth");
      lo = std::min(lo, static_cast<double>(v));
      hi = std::max(hi, static_cast<double>(v));
    }
  }
  DepthClip clip{raw, near, far};
  const double mid = 0.5 * (near + far);
  for (auto& d : clip.depths) {
    for (float& v : d.values()) {
      v = hi > lo ? static_cast<float>(near + (v - lo) / (hi - lo) * (far - near))
                  : static_cast<float>(mid);
    }
  }
  return clip;
}

namespace detail {

inline double bilinear(const Raster<float>& r, double x, double y, int c) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double ax = x - x0;
  const double ay = y - y0;
  const int x1 = std::min(x0 + 1, r.width() - 1);
  const int y1 = std::min(y0 + 1, r.height() - 1);
  return (1 - ay) * ((1 - ax) * r(y0, x0, c) + ax * r(y0, x1, c)) +
         ay * ((1 - ax) * r(y1, x0, c) + ax * r(y1, x1, c));
}

inline bool in_frame(const Raster<float>& r, double x, double y) {
  return x >= 0.0 && y >= 0.0 && x <= r.width() - 1 && y <= r.height() - 1;
}

// Advances `x, y` along one flow field; false if the link is unusable.
inline bool follow(const FlowField& f, double& x, double& y, double sign) {
  if (!in_frame(f.flow, x, y)) return false;
  const int nx = static_cast<int>(std::lround(x));
  const int ny = static_cast<int>(std::lround(y));
  if (!f.valid(ny, nx)) return false;
  const double dx = bilinear(f.flow, x, y, 0);
  const double dy = bilinear(f.flow, x, y, 1);
  x += sign * dx;
  y += sign * dy;
  return true;
}

}  // namespace detail

struct SmoothingParams {
  int radius = 2;
  double sigma = 1.0;
  int threads = 1;
};

/// For every pixel, gathers depth samples from frames s-radius..s+radius by
/// chaining flow (bilinear lookups), drops samples reached through an invalid
/// link, and returns the temporal-Gaussian weighted mean clamped to the clip
/// range. `backward[i]` maps frame i+1 -> frame i; without it, backward links
/// negate the previous frame's forward flow.
inline DepthClip temporal_smooth(const DepthClip& clip, const std::vector<FlowField>& forward,
                                 const SmoothingParams& params,
                                 const std::vector<FlowField>* backward = nullptr) {
  const int frames = static_cast<int>(clip.depths.size());
  if (frames == 0) throw EmptyInputError("temporal_smooth: empty clip");
  if (params.radius < 1) throw ConfigError("temporal_smooth: radius must be >= 1");
  if (!(params.sigma > 0.0)) throw ConfigError("temporal_smooth: sigma must be > 0");
  if (static_cast<int>(forward.size()) < frames - 1) {
    throw ConfigError("temporal_smooth: need " + std::to_string(frames - 1) + " forward flows, got " +
                      std::to_string(forward.size()));
  }
  if (backward && static_cast<int>(backward->size()) < frames - 1) {
    throw ConfigError("temporal_smooth: backward flow count does not match the clip");
  }
  const int h = clip.depths.front().height();
  const int w = clip.depths.front().width();
  for (int i = 0; i + 1 < frames; ++i) {
    if (forward[i].flow.height() != h || forward[i].flow.width() != w || forward[i].flow.channels() != 2) {
      throw ShapeError("temporal_smooth: forward flow " + std::to_string(i) + " has wrong shape");
    }
    require_same_extent(forward[i].valid, forward[i].flow, "temporal_smooth: flow validity");
  }

  std::vector<double> weight(params.radius + 1);
  for (int k = 0; k <= params.radius; ++k) {
    weight[k] = std::exp(-(k * k) / (2.0 * params.sigma * params.sigma));
  }

  DepthClip out = clip;
  parallel_for(frames, params.threads, [&](int s) {
    const DepthMap& center = clip.depths[s];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = weight[0] * center(y, x);
        double wsum = weight[0];
        double px = x, py = y;
        for (int k = 1; k <= params.radius && s + k < frames; ++k) {
          if (!detail::follow(forward[s + k - 1], px, py, +1.0)) break;
          if (!detail::in_frame(clip.depths[s + k], px, py)) break;
          acc += weight[k] * detail::bilinear(clip.depths[s + k], px, py, 0);
          wsum += weight[k];
        }
        px = x;
        py = y;
        for (int k = 1; k <= params.radius && s - k >= 0; ++k) {
          const bool ok = backward ? detail::follow((*backward)[s - k], px, py, +1.0)
                                   : detail::follow(forward[s - k], px, py, -1.0);
          if (!ok || !detail::in_frame(clip.depths[s - k], px, py)) break;
          acc += weight[k] * detail::bilinear(clip.depths[s - k], px, py, 0);
          wsum += weight[k];
        }
        out.depths[s](y, x) =
            static_cast<float>(std::clamp(acc / wsum, clip.near, clip.far));
      }
    }
  });
  return out;
}

}  // namespace fmstereo
