// SPDX-License-Identifier: Apache-2.0
#pragma once

// Procedural test scenes: a textured background plane plus textured
// fronto-parallel rectangles with linear motion. Color, depth and flow are
// exact by construction and can be rendered from any camera.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fmstereo/config.hpp"
#include "fmstereo/depthproc.hpp"
#include "fmstereo/error.hpp"
#include "fmstereo/geometry.hpp"
#include "fmstereo/io/pfm.hpp"
#include "fmstereo/io/png.hpp"
#include "fmstereo/raster.hpp"

namespace fmstereo {

/// base + amplitude * sin(2 pi u / period_x + phase) * cos(2 pi v / period_y + phase / 2),
/// with (u, v) in reference-view pixels on the layer.
struct Texture {
  std::array<double, 3> base{0.5, 0.5, 0.5};
  double amplitude = 0.1;
  double period_x = 96.0;
  double period_y = 80.0;
  std::array<double, 3> phase{0.0, 2.0, 4.0};

  float sample(double u, double v, int c) const {
    const double two_pi = 2.0 * std::numbers::pi;
    const double s = std::sin(two_pi * u / period_x + phase[c]) * std::cos(two_pi * v / period_y + 0.5 * phase[c]);
    return static_cast<float>(std::clamp(base[c] + amplitude * s, 0.0, 1.0));
  }
};

/// A fronto-parallel layer at `depth`. Rectangles are given by their
/// reference-view pixel box at frame 0 and move `vx, vy` pixels per frame;
/// the background layer is unbounded and static.
struct SceneLayer {
  double depth = 10.0;
  double x0 = 0.0, y0 = 0.0, w = 0.0, h = 0.0;
  double vx = 0.0, vy = 0.0;
  Texture texture;
};

struct SceneSpec {
  int width = 576;
  int height = 320;
  int frames = 16;
  double fx = 2000.0 / 7.0;
  double fy = 2000.0 / 7.0;
  double cx = 288.0;
  double cy = 160.0;
  SceneLayer background;
  std::vector<SceneLayer> foreground;

  Camera reference_camera() const {
    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = cx;
    cam.cy = cy;
    cam.width = width;
    cam.height = height;
    return cam;
  }

  void validate() const {
    reference_camera().validate();
    if (frames < 1) throw ConfigError("synthetic scene needs >= 1 frame");
    if (!(background.depth > 0.0)) throw ConfigError("background depth must be > 0");
    for (const auto& l : foreground) {
      if (!(l.depth > 0.0) || !(l.depth < background.depth)) {
        throw ConfigError("foreground depth must lie in (0, background depth)");
      }
      if (!(l.w > 0.0) || !(l.h > 0.0)) throw ConfigError("foreground rectangle needs a positive size");
    }
  }
};

/// Two-layer scene: background at 10 m, one 1 m foreground slab moving
/// vertically. With fx = 2000/7 and a 0.07 m baseline the two disparities are
/// 20 px and 2 px, and the right edge of the foreground sits on a multiple of
/// 8 after warping so disoccluded latent cells contain background only.
inline SceneSpec default_scene(int width = 576, int height = 320, int frames = 16) {
  SceneSpec s;
  s.width = width;
  s.height = height;
  s.frames = frames;
  s.cx = width / 2.0;
  s.cy = height / 2.0;
  s.background.depth = 10.0;
  s.background.texture = {{0.45, 0.5, 0.55}, 0.1, 96.0, 80.0, {0.0, 2.0, 4.0}};
  SceneLayer fg;
  fg.depth = 1.0;
  const double right = 8.0 * std::round(width * 0.6 / 8.0) + 20.0;
  fg.w = std::round(width * 0.3);
  fg.x0 = right - fg.w;
  fg.h = std::round(height * 0.45);
  fg.y0 = std::round(height * 0.15);
  fg.vy = frames > 1 ? std::floor(height * 0.25 / (frames - 1)) : 0.0;
  fg.texture = {{0.55, 0.5, 0.45}, 0.1, 64.0, 72.0, {1.0, 3.0, 5.0}};
  s.foreground.push_back(fg);
  return s;
}

struct SceneRender {
  Image color;
  DepthMap depth;
  /// -1 = background, i = foreground layer i.
  Raster<std::int16_t> layer;
};

namespace detail {

// Pixel-space tolerance for rectangle membership, so that points reached
// through another camera land on the same side of an edge as in the
// reference view.
inline constexpr double kEdgeSlack = 1e-6;

struct Hit {
  int layer = -1;
  double depth = 0.0;
  double u = 0.0, v = 0.0;
};

inline bool hit_plane(const Camera& cam, const Vec3& dir, double plane_depth, const SceneSpec& spec,
                      double ox, double oy, Hit& hit) {
  if (!(dir[2] > 0.0)) return false;
  const double lambda = (plane_depth - cam.position[2]) / dir[2];
  if (!(lambda > 0.0)) return false;
  const double X = cam.position[0] + lambda * dir[0];
  const double Y = cam.position[1] + lambda * dir[1];
  hit.depth = lambda;
  hit.u = X * spec.fx / plane_depth + spec.cx - ox;
  hit.v = Y * spec.fy / plane_depth + spec.cy - oy;
  return true;
}

inline Hit cast(const SceneSpec& spec, const Camera& cam, int x, int y, int s) {
  const Vec3 local{(x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0};
  const Vec3 dir = mul(cam.orientation, local);
  Hit best;
  best.depth = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.foreground.size(); ++i) {
    const SceneLayer& l = spec.foreground[i];
    Hit h;
    if (!hit_plane(cam, dir, l.depth, spec, l.vx * s, l.vy * s, h)) continue;
    const bool inside = h.u - l.x0 > -kEdgeSlack && (l.x0 + l.w) - h.u > kEdgeSlack &&
                        h.v - l.y0 > -kEdgeSlack && (l.y0 + l.h) - h.v > kEdgeSlack;
    if (inside && h.depth < best.depth) {
      best = h;
      best.layer = static_cast<int>(i);
    }
  }
  if (best.layer < 0) {
    if (!hit_plane(cam, dir, spec.background.depth, spec, 0.0, 0.0, best)) {
      throw ConfigError("synthetic render: camera does not see the background plane");
    }
    best.layer = -1;
  }
  return best;
}

}  // namespace detail

/// Renders frame `s` as seen by `cam` (pixel centres at integer coordinates).
inline SceneRender render_scene(const SceneSpec& spec, const Camera& cam, int s) {
  SceneRender r{make_image(cam.height, cam.width), make_depth(cam.height, cam.width),
                Raster<std::int16_t>(cam.height, cam.width, 1)};
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      const detail::Hit h = detail::cast(spec, cam, x, y, s);
      const Texture& tex = h.layer < 0 ? spec.background.texture : spec.foreground[h.layer].texture;
      for (int c = 0; c < 3; ++c) r.color(y, x, c) = tex.sample(h.u, h.v, c);
      r.depth(y, x) = static_cast<float>(h.depth);
      r.layer(y, x) = static_cast<std::int16_t>(h.layer);
    }
  return r;
}

/// Reference-view flow from frame `s` to frame `s2`. A pixel is valid when
/// its surface point is still the visible surface, inside the image, at `s2`.
inline FlowField scene_flow(const SceneSpec& spec, int s, int s2) {
  const Camera cam = spec.reference_camera();
  const SceneRender a = render_scene(spec, cam, s);
  const SceneRender b = render_scene(spec, cam, s2);
  FlowField f{Raster<float>(spec.height, spec.width, 2), make_mask(spec.height, spec.width)};
  const int dt = s2 - s;
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      const int l = a.layer(y, x);
      const double dx = l < 0 ? 0.0 : spec.foreground[l].vx * dt;
      const double dy = l < 0 ? 0.0 : spec.foreground[l].vy * dt;
      const long tx = std::lround(x + dx);
      const long ty = std::lround(y + dy);
      if (tx < 0 || ty < 0 || tx >= spec.width || ty >= spec.height) continue;
      if (b.layer(static_cast<int>(ty), static_cast<int>(tx)) != l) continue;
      f.flow(y, x, 0) = static_cast<float>(dx);
      f.flow(y, x, 1) = static_cast<float>(dy);
      f.valid(y, x) = 1;
    }
  return f;
}

inline int round_up(int value, int multiple) { return (value + multiple - 1) / multiple * multiple; }

/// Outpaint band width used by the pipeline for `cfg` on a `width`-wide clip.
inline int effective_padding(const PipelineConfig& cfg, const Camera& reference) {
  if (!cfg.outpaint) return 0;
  return outpaint_padding(reference.fx, cfg.rig_extent(), cfg.depth_near);
}

/// Canvas used by single-video outpainting: width + 2P rounded up to the
/// codec factor (extra columns on the right).
inline int outpaint_canvas_width(int width, int padding, int factor) {
  return round_up(width + 2 * padding, factor);
}

// ---------------------------------------------------------------- input layout

inline std::string input_frame_path(int s) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "frames/t%03d.png", s);
  return buf;
}
inline std::string input_depth_path(int s) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "depth/t%03d.pfm", s);
  return buf;
}
/// `direction` is "fwd" (frame s -> s+1) or "bwd" (frame s -> s-1); `comp` is 'u' or 'v'.
inline std::string input_flow_path(const char* direction, int s, char comp) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "flow/%s_t%03d_%c.pfm", direction, s, comp);
  return buf;
}
inline std::string gt_path(int view, int s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "v%03d/t%03d.png", view, s);
  return buf;
}
inline std::string gt_padded_path(int s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "padded/t%03d.png", s);
  return buf;
}

/// Flow as two 1-channel PFMs; invalid pixels hold NaN.
inline void write_flow(const std::filesystem::path& dir, const char* direction, int s, const FlowField& f) {
  constexpr float kNaN = std::numeric_limits<float>::quiet_NaN();
  Raster<float> u(f.flow.height(), f.flow.width(), 1), v(f.flow.height(), f.flow.width(), 1);
  for (int y = 0; y < u.height(); ++y)
    for (int x = 0; x < u.width(); ++x) {
      u(y, x) = f.valid(y, x) ? f.flow(y, x, 0) : kNaN;
      v(y, x) = f.valid(y, x) ? f.flow(y, x, 1) : kNaN;
    }
  write_pfm(dir / input_flow_path(direction, s, 'u'), u);
  write_pfm(dir / input_flow_path(direction, s, 'v'), v);
}

inline FlowField read_flow(const std::filesystem::path& dir, const char* direction, int s) {
  const Raster<float> u = read_pfm(dir / input_flow_path(direction, s, 'u'));
  const Raster<float> v = read_pfm(dir / input_flow_path(direction, s, 'v'));
  if (!u.same_shape(v) || u.channels() != 1) {
    throw IoError("flow pair " + input_flow_path(direction, s, 'u') + " / _v: mismatched or multi-channel");
  }
  FlowField f{Raster<float>(u.height(), u.width(), 2), make_mask(u.height(), u.width())};
  for (int y = 0; y < u.height(); ++y)
    for (int x = 0; x < u.width(); ++x) {
      if (!std::isfinite(u(y, x)) || !std::isfinite(v(y, x))) continue;
      f.flow(y, x, 0) = u(y, x);
      f.flow(y, x, 1) = v(y, x);
      f.valid(y, x) = 1;
    }
  return f;
}

inline nlohmann::json camera_intrinsics_json(const Camera& cam) {
  return {{"width", cam.width}, {"height", cam.height}, {"fx", cam.fx},
          {"fy", cam.fy},       {"cx", cam.cx},         {"cy", cam.cy}};
}

struct SyntheticSummary {
  int frames = 0;
  int views = 0;
  int padding = 0;
  int padded_width = 0;
};

/// Writes the reference video, exact depth, exact forward/backward flow,
/// camera.json, ground truth for every rig camera of `cfg` under gt/vNNN/,
/// and, when outpainting is enabled, the padded reference ground truth under
/// gt/padded/.
inline SyntheticSummary write_synthetic(const SceneSpec& spec, const PipelineConfig& cfg,
                                        const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  spec.validate();
  for (const char* sub : {"frames", "depth", "flow", "gt"}) fs::create_directories(dir / sub);
  const Camera ref = spec.reference_camera();
  const CameraRig rig = build_rig(cfg.mode, cfg.views(), cfg.rig_extent(), ref);

  {
    std::ofstream out(dir / "camera.json");
    if (!out) throw IoError("cannot write " + (dir / "camera.json").string());
    out << camera_intrinsics_json(ref).dump(2) << "\n";
  }
  for (int s = 0; s < spec.frames; ++s) {
    const SceneRender r = render_scene(spec, ref, s);
    write_png(dir / input_frame_path(s), to_8bit(r.color));
    write_pfm(dir / input_depth_path(s), r.depth);
    if (s + 1 < spec.frames) write_flow(dir, "fwd", s, scene_flow(spec, s, s + 1));
    if (s > 0) write_flow(dir, "bwd", s, scene_flow(spec, s, s - 1));
  }
  for (int v = 0; v < rig.views(); ++v) {
    char sub[32];
    std::snprintf(sub, sizeof sub, "gt/v%03d", v);
    fs::create_directories(dir / sub);
    for (int s = 0; s < spec.frames; ++s) {
      write_png(dir / "gt" / gt_path(v, s), to_8bit(render_scene(spec, rig.cameras[v], s).color));
    }
  }
  SyntheticSummary summary{spec.frames, rig.views(), effective_padding(cfg, ref), spec.width};
  if (cfg.outpaint) {
    summary.padded_width = outpaint_canvas_width(spec.width, summary.padding, cfg.codec_factor);
    Camera wide = ref;
    wide.width = summary.padded_width;
    wide.cx += summary.padding;
    std::filesystem::create_directories(dir / "gt" / "padded");
    for (int s = 0; s < spec.frames; ++s) {
      write_png(dir / "gt" / gt_padded_path(s), to_8bit(render_scene(spec, wide, s).color));
    }
  }
  return summary;
}

}  // namespace fmstereo
