// SPDX-License-Identifier: Apache-2.0
#pragma once

// Pinhole cameras, depth-based forward warping onto multi-plane images,
// per-plane artifact repair and back-to-front plane blending.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fmstereo/error.hpp"
#include "fmstereo/raster.hpp"

namespace fmstereo {

using Vec3 = std::array<double, 3>;
/// Row-major 3x3.
using Mat3 = std::array<double, 9>;

inline constexpr Mat3 kIdentity3{1, 0, 0, 0, 1, 0, 0, 0, 1};

inline Vec3 mul(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

inline Vec3 mul_transposed(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[3] * v[1] + m[6] * v[2], m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
          m[2] * v[0] + m[5] * v[1] + m[8] * v[2]};
}

/// Pinhole camera. `orientation` maps camera axes to world axes
/// (camera-to-world rotation); `position` is the optical centre in meters.
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Vec3 position{0, 0, 0};
  Mat3 orientation = kIdentity3;
  int width = 8;
  int height = 8;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
      throw ConfigError("camera focal lengths must be finite and > 0");
    }
    if (width < 8 || height < 8) throw ConfigError("camera resolution must be at least 8x8");
    const Mat3& r = orientation;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += r[k * 3 + i] * r[k * 3 + j];
        if (std::abs(dot - (i == j ? 1.0 : 0.0)) > 1e-9) {
          throw ConfigError("camera orientation is not orthonormal");
        }
      }
    }
  }

  /// World-to-camera 3x4 extrinsics [R^T | -R^T C], row-major.
  std::array<double, 12> extrinsics() const {
    std::array<double, 12> e{};
    const Vec3 t = mul_transposed(orientation, position);
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) e[row * 4 + col] = orientation[col * 3 + row];
      e[row * 4 + 3] = -t[row];
    }
    return e;
  }
};

struct RgbdFrame {
  Image color;
  DepthMap depth;
  Mask mask;

  int height() const noexcept { return color.height(); }
  int width() const noexcept { return color.width(); }

  void validate() const {
    if (color.channels() != 3) throw ShapeError("rgbd frame color must have 3 channels");
    require_same_extent(color, depth, "rgbd frame depth");
    require_same_extent(color, mask, "rgbd frame mask");
    for (int y = 0; y < height(); ++y)
      for (int x = 0; x < width(); ++x)
        if (mask(y, x) && !(std::isfinite(depth(y, x)) && depth(y, x) > 0.0f)) {
          throw DomainError("rgbd frame has non-positive depth at a valid pixel (" +
                            std::to_string(x) + "," + std::to_string(y) + ")");
        }
  }
};

struct DepthRange {
  double near = 1.0;
  double far = 10.0;
};

/// One depth stratum: color and depth are zero where mask is 0.
struct PlaneLayer {
  Image color;
  DepthMap depth;
  Mask mask;
};

/// K layers, index 0 nearest. `bounds` holds K+1 strictly decreasing
/// disparity (1/depth) boundaries.
struct MultiPlaneImage {
  std::vector<PlaneLayer> planes;
  std::vector<double> bounds;
};

/// Forward-warped view. `disocclusion` is 1 where known, 0 where disoccluded,
/// and always equals frame.mask.
struct WarpResult {
  RgbdFrame frame;
  Mask disocclusion;
};

/// Continuous target coordinates (channel 0 = x, 1 = y) and target depths.
/// Invalid source pixels, or points behind the target camera, hold NaN.
struct WarpCoordinates {
  Raster<double> target;
  Raster<double> depth;
};

inline WarpCoordinates warp_coordinates(const RgbdFrame& src, const Camera& src_cam,
                                        const Camera& dst_cam) {
  src_cam.validate();
  dst_cam.validate();
  if (src_cam.width != dst_cam.width || src_cam.height != dst_cam.height) {
    throw ConfigError("warp: source and destination cameras must share resolution");
  }
  if (src.width() != src_cam.width || src.height() != src_cam.height) {
    throw ShapeError("warp: frame resolution does not match the source camera");
  }
  const int h = src.height();
  const int w = src.width();
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  WarpCoordinates out{Raster<double>(h, w, 2, kNaN), Raster<double>(h, w, 1, kNaN)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!src.mask(y, x)) continue;
      const double d = src.depth(y, x);
      const Vec3 cam{(x - src_cam.cx) / src_cam.fx * d, (y - src_cam.cy) / src_cam.fy * d, d};
      const Vec3 world = mul(src_cam.orientation, cam);
      const Vec3 rel{world[0] + src_cam.position[0] - dst_cam.position[0],
                     world[1] + src_cam.position[1] - dst_cam.position[1],
                     world[2] + src_cam.position[2] - dst_cam.position[2]};
      const Vec3 p = mul_transposed(dst_cam.orientation, rel);
      if (!(p[2] > 0.0)) continue;
      out.target(y, x, 0) = dst_cam.fx * p[0] / p[2] + dst_cam.cx;
      out.target(y, x, 1) = dst_cam.fy * p[1] / p[2] + dst_cam.cy;
      out.depth(y, x) = p[2];
    }
  }
  return out;
}

/// K+1 boundaries uniform in disparity between 1/near and 1/far.
inline std::vector<double> plane_bounds(int k, DepthRange range) {
  if (k < 1) throw ConfigError("plane count must be >= 1");
  if (!(range.near > 0.0) || !(range.far > range.near)) {
    throw ConfigError("depth range must satisfy 0 < near < far");
  }
  std::vector<double> bounds(k + 1);
  const double hi = 1.0 / range.near;
  const double lo = 1.0 / range.far;
  for (int i = 0; i <= k; ++i) bounds[i] = hi - (hi - lo) * i / k;
  bounds[k] = lo;
  return bounds;
}

/// Stratum of a depth; depths outside the range clamp to the end planes.
inline int plane_index(double depth, const std::vector<double>& bounds) {
  const int k = static_cast<int>(bounds.size()) - 1;
  const double disparity = 1.0 / depth;
  const double step = (bounds.front() - bounds.back()) / k;
  const int i = static_cast<int>(std::floor((bounds.front() - disparity) / step));
  return std::clamp(i, 0, k - 1);
}

inline MultiPlaneImage project_to_planes(const RgbdFrame& src, const Camera& src_cam,
                                         const Camera& dst_cam, int k, DepthRange range) {
  MultiPlaneImage mpi;
  mpi.bounds = plane_bounds(k, range);
  bool any_valid = false;
  for (auto m : src.mask.values()) any_valid = any_valid || m != 0;
  if (!any_valid) throw EmptyInputError("project_to_planes: source frame has no valid pixels");

  const WarpCoordinates coords = warp_coordinates(src, src_cam, dst_cam);
  const int h = src.height();
  const int w = src.width();
  mpi.planes.resize(k);
  for (auto& p : mpi.planes) {
    p.color = make_image(h, w);
    p.depth = make_depth(h, w);
    p.mask = make_mask(h, w);
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = coords.depth(y, x);
      if (std::isnan(d)) continue;
      const long tx = std::lround(coords.target(y, x, 0));
      const long ty = std::lround(coords.target(y, x, 1));
      if (tx < 0 || ty < 0 || tx >= w || ty >= h) continue;
      PlaneLayer& layer = mpi.planes[plane_index(d, mpi.bounds)];
      const int px = static_cast<int>(tx);
      const int py = static_cast<int>(ty);
      if (layer.mask(py, px) && layer.depth(py, px) <= d) continue;
      layer.mask(py, px) = 1;
      layer.depth(py, px) = static_cast<float>(d);
      for (int c = 0; c < 3; ++c) layer.color(py, px, c) = src.color(y, x, c);
    }
  }
  return mpi;
}

/// Normalized 3x3 Gaussian, row-major.
inline std::array<double, 9> gaussian_kernel3(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian sigma must be > 0");
  std::array<double, 9> k{};
  double sum = 0.0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k[(dy + 1) * 3 + dx + 1] = v;
      sum += v;
    }
  for (auto& v : k) v /= sum;
  return k;
}

struct RepairParams {
  double isolated_threshold = 0.5;
  double crack_threshold = 0.2;
  double crack_sigma = 0.495;
};

/// Clears occupied pixels whose zero-padded 3x3 box response is below
/// `threshold`, repeated until no pixel changes. Never adds pixels.
inline PlaneLayer remove_isolated(PlaneLayer layer, double threshold = 0.5) {
  const int h = layer.mask.height();
  const int w = layer.mask.width();
  std::vector<std::pair<int, int>> cleared;
  for (;;) {
    cleared.clear();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!layer.mask(y, x)) continue;
        int count = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            if (layer.mask.contains(y + dy, x + dx) && layer.mask(y + dy, x + dx)) ++count;
        if (count / 9.0 < threshold) cleared.emplace_back(y, x);
      }
    }
    if (cleared.empty()) break;
    for (auto [y, x] : cleared) {
      layer.mask(y, x) = 0;
      layer.depth(y, x) = 0.0f;
      for (int c = 0; c < 3; ++c) layer.color(y, x, c) = 0.0f;
    }
  }
  return layer;
}

/// Fills empty pixels whose zero-padded Gaussian mask response exceeds
/// `threshold` with the Gaussian-weighted mean of their occupied neighbours,
/// repeated until no pixel changes. Never removes or recolors pixels.
inline PlaneLayer fill_cracks(PlaneLayer layer, double threshold = 0.2, double sigma = 0.495) {
  const auto kernel = gaussian_kernel3(sigma);
  const int h = layer.mask.height();
  const int w = layer.mask.width();
  struct Fill {
    int y, x;
    float color[3];
    float depth;
  };
  std::vector<Fill> fills;
  for (;;) {
    fills.clear();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (layer.mask(y, x)) continue;
        double response = 0.0;
        double acc[3] = {0, 0, 0};
        double dacc = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy;
            const int xx = x + dx;
            if (!layer.mask.contains(yy, xx) || !layer.mask(yy, xx)) continue;
            const double wgt = kernel[(dy + 1) * 3 + dx + 1];
            response += wgt;
            for (int c = 0; c < 3; ++c) acc[c] += wgt * layer.color(yy, xx, c);
            dacc += wgt * layer.depth(yy, xx);
          }
        if (response > threshold) {
          Fill f{y, x, {}, static_cast<float>(dacc / response)};
          for (int c = 0; c < 3; ++c) f.color[c] = static_cast<float>(acc[c] / response);
          fills.push_back(f);
        }
      }
    }
    if (fills.empty()) break;
    for (const Fill& f : fills) {
      layer.mask(f.y, f.x) = 1;
      layer.depth(f.y, f.x) = f.depth;
      for (int c = 0; c < 3; ++c) layer.color(f.y, f.x, c) = f.color[c];
    }
  }
  return layer;
}

inline MultiPlaneImage repair_planes(MultiPlaneImage mpi, const RepairParams& params = {}) {
  for (auto& p : mpi.planes) {
    p = fill_cracks(remove_isolated(std::move(p), params.isolated_threshold),
                    params.crack_threshold, params.crack_sigma);
  }
  return mpi;
}

/// Back-to-front composite, plane K-1 first so nearer planes overwrite.
inline WarpResult blend_planes(const MultiPlaneImage& mpi) {
  if (mpi.planes.empty()) throw EmptyInputError("blend_planes: no planes");
  const int h = mpi.planes.front().mask.height();
  const int w = mpi.planes.front().mask.width();
  WarpResult out;
  out.frame.color = make_image(h, w);
  out.frame.depth = make_depth(h, w);
  out.frame.mask = make_mask(h, w);
  for (auto it = mpi.planes.rbegin(); it != mpi.planes.rend(); ++it) {
    const PlaneLayer& p = *it;
    require_same_extent(p.mask, out.frame.mask, "blend_planes");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!p.mask(y, x)) continue;
        out.frame.mask(y, x) = 1;
        out.frame.depth(y, x) = p.depth(y, x);
        for (int c = 0; c < 3; ++c) out.frame.color(y, x, c) = p.color(y, x, c);
      }
  }
  out.disocclusion = out.frame.mask;
  return out;
}

/// Project, repair and blend in one call.
inline WarpResult warp_frame(const RgbdFrame& src, const Camera& src_cam, const Camera& dst_cam,
                             int k, DepthRange range, const RepairParams& repair = {}) {
  return blend_planes(repair_planes(project_to_planes(src, src_cam, dst_cam, k, range), repair));
}

/// Outpainting band width: the maximum disparity ceil(fx * b / d_min). A
/// 1e-9 relative slack absorbs representation error in the product.
inline int outpaint_padding(double fx, double baseline, double d_min) {
  if (!(d_min > 0.0)) throw DomainError("outpaint_padding: d_min must be > 0");
  if (!(fx > 0.0) || baseline < 0.0) throw DomainError("outpaint_padding: fx > 0, baseline >= 0");
  const double p = fx * baseline / d_min;
  return static_cast<int>(std::ceil(p - 1e-9 * std::max(1.0, p)));
}

enum class RigMode { kStereo, kSpatial };

struct CameraRig {
  RigMode mode = RigMode::kStereo;
  std::vector<Camera> cameras;

  int views() const noexcept { return static_cast<int>(cameras.size()); }
};

/// Stereo: `n_views` cameras evenly spaced along the template's +x axis over
/// `extent` meters, view 0 at the reference. Spatial: `n_views` cameras on a
/// circle of radius `extent` in the template's image plane, centred on the
/// reference, with the last view closing the loop onto the first.
inline CameraRig build_rig(RigMode mode, int n_views, double extent, const Camera& reference) {
  reference.validate();
  if (mode == RigMode::kStereo && n_views < 2) throw ConfigError("stereo rig needs >= 2 views");
  if (mode == RigMode::kSpatial && n_views < 3) throw ConfigError("spatial rig needs >= 3 views");
  if (!(extent >= 0.0) || !std::isfinite(extent)) throw ConfigError("rig extent must be >= 0");
  CameraRig rig;
  rig.mode = mode;
  rig.cameras.reserve(n_views);
  for (int v = 0; v < n_views; ++v) {
    Vec3 offset{0, 0, 0};
    if (mode == RigMode::kStereo) {
      offset[0] = extent * v / (n_views - 1);
    } else {
      const int j = v % (n_views - 1);
      const double angle = 2.0 * std::numbers::pi * j / (n_views - 1);
      offset[0] = extent * std::cos(angle);
      offset[1] = extent * std::sin(angle);
    }
    const Vec3 world = mul(reference.orientation, offset);
    Camera cam = reference;
    for (int i = 0; i < 3; ++i) cam.position[i] = reference.position[i] + world[i];
    rig.cameras.push_back(cam);
  }
  return rig;
}

}  // namespace fmstereo
