// SPDX-License-Identifier: Apache-2.0
#pragma once

// Frame-matrix denoising inpainting: an (S+1) x (V+1) grid of latent frames
// (rows share a timestamp, columns share a viewpoint) denoised by alternating
// temporal (column) and spatial (row) passes, with known-region compositing,
// resampling noise re-adds and disocclusion boundary re-injection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fmstereo/diffusion.hpp"
#include "fmstereo/error.hpp"
#include "fmstereo/geometry.hpp"
#include "fmstereo/oracle.hpp"
#include "fmstereo/parallel.hpp"
#include "fmstereo/raster.hpp"
#include "fmstereo/rng.hpp"

namespace fmstereo {

/// Per-element {0, 1} latent mask (h x w x 1, shared across channels).
using LatentMask = Raster<double>;

struct FrameMatrix {
  int rows = 0;  // S + 1 timestamps
  int cols = 0;  // V + 1 viewpoints
  std::vector<LatentFrame> latents;
  std::vector<LatentFrame> known_latents;
  std::vector<LatentMask> latent_masks;
  std::vector<Image> image_known;
  std::vector<Mask> image_masks;
  CameraRig rig;
  std::uint32_t condition = 0;
  std::uint64_t seed = 0;

  std::size_t cell(int s, int v) const { return static_cast<std::size_t>(s) * cols + v; }
};

/// Conservative mask pooling: a latent cell is known only if every image
/// pixel it covers is known.
inline LatentMask pool_mask(const Mask& mask, int factor) {
  if (mask.height() % factor != 0 || mask.width() % factor != 0) {
    throw ShapeError("mask " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                     " is not divisible by the codec factor " + std::to_string(factor));
  }
  LatentMask m(mask.height() / factor, mask.width() / factor, 1, 1.0);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (!mask(y, x)) m(y / factor, x / factor) = 0.0;
  return m;
}

inline LatentFrame initial_noise(std::uint64_t seed, int s, int v, int h, int w, int c) {
  LatentFrame z(h, w, c);
  fill_standard_normal({seed, NoiseStream::kInit, 0, 0, s, v}, z.span());
  return z;
}

/// `warps` is row-major (rows x cols). With `require_reference_known`, every
/// column-0 mask must be fully known.
inline FrameMatrix build_frame_matrix(const std::vector<WarpResult>& warps, int rows, int cols,
                                      const LatentCodec& codec, std::uint32_t condition,
                                      std::uint64_t seed, CameraRig rig = {},
                                      bool require_reference_known = true) {
  if (rows < 1 || cols < 1 || static_cast<int>(warps.size()) != rows * cols) {
    throw ShapeError("frame matrix: " + std::to_string(warps.size()) + " warps do not form a " +
                     std::to_string(rows) + "x" + std::to_string(cols) + " grid");
  }
  FrameMatrix fm;
  fm.rows = rows;
  fm.cols = cols;
  fm.rig = std::move(rig);
  fm.condition = condition;
  fm.seed = seed;
  const Image& first = warps.front().frame.color;
  for (int s = 0; s < rows; ++s) {
    for (int v = 0; v < cols; ++v) {
      const WarpResult& w = warps[s * cols + v];
      const std::string where = "frame matrix cell (" + std::to_string(s) + "," + std::to_string(v) + ")";
      require_same_shape(w.frame.color, first, where);
      require_same_extent(w.disocclusion, w.frame.color, where + " mask");
      if (v == 0 && require_reference_known) {
        for (auto m : w.disocclusion.values())
          if (!m) throw ShapeError(where + ": reference column must be fully known");
      }
      Image known = w.frame.color;
      for (int y = 0; y < known.height(); ++y)
        for (int x = 0; x < known.width(); ++x)
          if (!w.disocclusion(y, x))
            for (int c = 0; c < known.channels(); ++c) known(y, x, c) = 0.0f;
      LatentFrame z0 = codec.encode(known);
      fm.latents.push_back(initial_noise(seed, s, v, z0.height(), z0.width(), z0.channels()));
      fm.known_latents.push_back(std::move(z0));
      fm.latent_masks.push_back(pool_mask(w.disocclusion, codec.factor()));
      fm.image_known.push_back(std::move(known));
      fm.image_masks.push_back(w.disocclusion);
    }
  }
  return fm;
}

/// Supplies the deterministic draw for frame `k` of the current sequence.
using NoiseFill = std::function<void(NoiseStream stream, int k, std::span<double> out)>;

struct SequenceInfo {
  Direction direction = Direction::kTemporal;
  int line = 0;
  std::uint32_t condition = 0;
};

/// One denoising-inpainting step t -> t-1 over a sequence:
///   z_known   = forward_noise(known, t - 1)
///   z_unknown = posterior_step(z_t, oracle(z_t), t)
///   z_{t-1}   = m * z_known + (1 - m) * z_unknown
/// Frames whose `live` flag is 0 keep their current unknown-region values and
/// only receive the known composite.
inline std::vector<LatentFrame> denoise_sequence(std::span<const LatentFrame> seq,
                                                 std::span<const LatentFrame> known,
                                                 std::span<const LatentMask> masks, int t,
                                                 DenoiserOracle& oracle, const NoiseSchedule& sched,
                                                 const SequenceInfo& info, const NoiseFill& noise,
                                                 std::span<const std::uint8_t> live = {}) {
  if (t < 1) throw DomainError("denoise_sequence requires t >= 1");
  if (known.size() != seq.size() || masks.size() != seq.size() ||
      (!live.empty() && live.size() != seq.size())) {
    throw ShapeError("denoise_sequence: sequence, known and mask lengths differ");
  }
  const bool any_live = live.empty() || std::any_of(live.begin(), live.end(), [](auto f) { return f != 0; });
  std::vector<DenoiserOutput> outputs;
  if (any_live) {
    DenoiseRequest req{seq, t, info.direction, info.condition, info.line};
    outputs = oracle.denoise(req);
    check_oracle_output(req, outputs);
  }

  std::vector<LatentFrame> result;
  result.reserve(seq.size());
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const LatentFrame& zt = seq[k];
    const LatentMask& m = masks[k];
    require_same_shape(zt, known[k], "denoise_sequence known");
    if (m.height() != zt.height() || m.width() != zt.width()) {
      throw ShapeError("denoise_sequence: latent mask extent mismatch");
    }
    const bool is_live = live.empty() || live[k];
    bool any_known = false;
    bool all_known = true;
    for (double v : m.values()) {
      any_known = any_known || v != 0.0;
      all_known = all_known && v != 0.0;
    }

    LatentFrame z_known;
    if (any_known) {
      LatentFrame eps(zt.height(), zt.width(), zt.channels());
      noise(NoiseStream::kKnown, static_cast<int>(k), eps.span());
      z_known = forward_noise(known[k], t - 1, eps, sched);
    }
    LatentFrame z_unknown;
    if (all_known) {
      result.push_back(std::move(z_known));
      continue;
    }
    if (is_live) {
      LatentFrame xi;
      const auto& var = outputs[k].variance.values();
      if (t > 1 && std::any_of(var.begin(), var.end(), [](double v) { return v != 0.0; })) {
        xi = LatentFrame(zt.height(), zt.width(), zt.channels());
        noise(NoiseStream::kPosterior, static_cast<int>(k), xi.span());
      }
      z_unknown = posterior_step(zt, outputs[k], t, sched, xi);
    } else {
      z_unknown = zt;
    }
    if (any_known) {
      const int ch = zt.channels();
      for (int y = 0; y < zt.height(); ++y)
        for (int x = 0; x < zt.width(); ++x)
          if (m(y, x) != 0.0)
            for (int c = 0; c < ch; ++c) z_unknown(y, x, c) = z_known(y, x, c);
    }
    result.push_back(std::move(z_unknown));
  }
  return result;
}

/// Statistics handed to the instrumentation hook after every pass.
struct StepEvent {
  int outer = 0;  // outer step index, 0 = noisiest
  int t = 0;      // timestep denoised from
  int n = 0;      // 1-based resample pass within the step
  Direction direction = Direction::kTemporal;
  bool refining = false;
  double max_abs_latent = 0.0;
  double mean_abs_latent = 0.0;
};

using StepHook = std::function<void(const StepEvent&, const FrameMatrix&)>;

struct DenoiseOptions {
  bool reinject = true;
  /// Re-inject before every pass instead of once per outer step.
  bool reinject_every_resample = false;
  int threads = 1;
  StepHook hook;
};

inline NoiseFill cell_noise(std::uint64_t seed, int t, int n, Direction dir, int line) {
  return [=](NoiseStream stream, int k, std::span<double> out) {
    const int s = dir == Direction::kTemporal ? k : line;
    const int v = dir == Direction::kTemporal ? line : k;
    fill_standard_normal({seed, stream, t, n, s, v}, out);
  };
}

/// Refreshes known_latents of the given columns from the current prediction:
/// z0~ = predict_z0(z_t), X0~ = decode(z0~), known = encode(M * X_warp +
/// (1 - M) * X0~). Fully known cells are left untouched (the composite is
/// X_warp itself). image_known and image_masks are never modified.
inline void boundary_reinjection(FrameMatrix& fm, int t, DenoiserOracle& oracle,
                                 const LatentCodec& codec, const NoiseSchedule& sched,
                                 std::span<const std::uint8_t> live_columns = {}, int threads = 1) {
  if (t < 1) throw DomainError("boundary_reinjection requires t >= 1");
  parallel_for(fm.cols, threads, [&](int v) {
    if (!live_columns.empty() && !live_columns[v]) return;
    bool needed = false;
    for (int s = 0; s < fm.rows && !needed; ++s) {
      for (auto m : fm.image_masks[fm.cell(s, v)].values())
        if (!m) {
          needed = true;
          break;
        }
    }
    if (!needed) return;
    std::vector<LatentFrame> column;
    column.reserve(fm.rows);
    for (int s = 0; s < fm.rows; ++s) column.push_back(fm.latents[fm.cell(s, v)]);
    DenoiseRequest req{column, t, Direction::kTemporal, fm.condition, v};
    auto outputs = oracle.denoise(req);
    check_oracle_output(req, outputs);
    for (int s = 0; s < fm.rows; ++s) {
      const std::size_t i = fm.cell(s, v);
      const Mask& mask = fm.image_masks[i];
      if (std::all_of(mask.values().begin(), mask.values().end(), [](auto m) { return m != 0; })) continue;
      const Image predicted = codec.decode(predict_z0(column[s], outputs[s], t, sched));
      require_same_shape(predicted, fm.image_known[i], "boundary_reinjection decode");
      Image composite = fm.image_known[i];
      for (int y = 0; y < composite.height(); ++y)
        for (int x = 0; x < composite.width(); ++x)
          if (!mask(y, x))
            for (int c = 0; c < composite.channels(); ++c) composite(y, x, c) = predicted(y, x, c);
      fm.known_latents[i] = codec.encode(composite);
    }
  });
}

namespace detail {

inline void report_step(const DenoiseOptions& opt, const FrameMatrix& fm, int outer, int t, int n,
                        Direction dir, bool refining) {
  if (!opt.hook) return;
  StepEvent ev{outer, t, n, dir, refining, 0.0, 0.0};
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& z : fm.latents)
    for (double v : z.values()) {
      ev.max_abs_latent = std::max(ev.max_abs_latent, std::abs(v));
      sum += std::abs(v);
      ++count;
    }
  ev.mean_abs_latent = count ? sum / count : 0.0;
  opt.hook(ev, fm);
}

}  // namespace detail

/// Runs the full alternating schedule on `fm` in place and returns the
/// decoded (rows x cols, row-major) image grid.
///
/// For each outer step t (descending) and pass n = 1..N: odd n denoises every
/// column, even n every row; after every pass n < N one step of noise is
/// re-added to return to level t. Re-injection (when enabled) runs right
/// before the step's last pass. In the refinement phase only the plan's
/// refine_views columns are denoised; the others keep their unknown-region
/// latents and only track the known composite.
inline std::vector<Image> denoise_frame_matrix(FrameMatrix& fm, const SamplingPlan& plan,
                                               DenoiserOracle& oracle, const LatentCodec& codec,
                                               const NoiseSchedule& sched,
                                               const DenoiseOptions& opt = {}) {
  plan.validate(sched);
  for (int v : plan.refine_views) {
    if (v < 0 || v >= fm.cols) throw ConfigError("refine view " + std::to_string(v) + " is outside the matrix");
  }
  std::vector<std::uint8_t> all_live(fm.cols, 1);
  std::vector<std::uint8_t> refine_live(fm.cols, plan.refine_views.empty() ? 1 : 0);
  for (int v : plan.refine_views) refine_live[v] = 1;

  for (int k = 0; k < plan.outer_steps; ++k) {
    const int t = plan.timestep(k);
    const int passes = plan.resamples(k);
    const bool refining = plan.refining(k);
    const auto& live = refining ? refine_live : all_live;

    for (int n = 1; n <= passes; ++n) {
      if (opt.reinject && (n == passes || opt.reinject_every_resample)) {
        boundary_reinjection(fm, t, oracle, codec, sched, live, opt.threads);
      }
      const Direction dir = (n % 2 == 1) ? Direction::kTemporal : Direction::kSpatial;
      const int lines = dir == Direction::kTemporal ? fm.cols : fm.rows;
      const int length = dir == Direction::kTemporal ? fm.rows : fm.cols;
      parallel_for(lines, opt.threads, [&](int line) {
        std::vector<LatentFrame> seq, known;
        std::vector<LatentMask> masks;
        std::vector<std::uint8_t> flags;
        seq.reserve(length);
        for (int j = 0; j < length; ++j) {
          const int s = dir == Direction::kTemporal ? j : line;
          const int v = dir == Direction::kTemporal ? line : j;
          const std::size_t i = fm.cell(s, v);
          seq.push_back(fm.latents[i]);
          known.push_back(fm.known_latents[i]);
          masks.push_back(fm.latent_masks[i]);
          flags.push_back(live[v]);
        }
        auto out = denoise_sequence(seq, known, masks, t, oracle, sched,
                                    {dir, line, fm.condition},
                                    cell_noise(fm.seed, t, n, dir, line), flags);
        for (int j = 0; j < length; ++j) {
          const int s = dir == Direction::kTemporal ? j : line;
          const int v = dir == Direction::kTemporal ? line : j;
          fm.latents[fm.cell(s, v)] = std::move(out[j]);
        }
      });
      detail::report_step(opt, fm, k, t, n, dir, refining);

      if (n < passes) {
        parallel_for(fm.rows * fm.cols, opt.threads, [&](int i) {
          const int s = i / fm.cols;
          const int v = i % fm.cols;
          if (!live[v]) return;
          LatentFrame& z = fm.latents[i];
          LatentFrame xi(z.height(), z.width(), z.channels());
          fill_standard_normal({fm.seed, NoiseStream::kResample, t, n, s, v}, xi.span());
          z = resample_noise(z, t, sched, xi);
        });
      }
    }
  }

  std::vector<Image> decoded(fm.latents.size());
  parallel_for(static_cast<int>(fm.latents.size()), opt.threads,
               [&](int i) { decoded[i] = codec.decode(fm.latents[i]); });
  return decoded;
}

/// Single-video denoising inpainting: the same step equations applied to one
/// temporal sequence N times per outer step, with the same noise keys a
/// one-column frame matrix would use.
inline std::vector<Image> inpaint_video(const std::vector<Image>& frames, const std::vector<Mask>& masks,
                                        const LatentCodec& codec, DenoiserOracle& oracle,
                                        const NoiseSchedule& sched, const SamplingPlan& plan,
                                        std::uint64_t seed, std::uint32_t condition = 0,
                                        const DenoiseOptions& opt = {}) {
  if (frames.empty() || frames.size() != masks.size()) {
    throw ShapeError("inpaint_video: frames and masks must be non-empty and aligned");
  }
  plan.validate(sched);
  const int rows = static_cast<int>(frames.size());
  FrameMatrix fm;
  fm.rows = rows;
  fm.cols = 1;
  fm.condition = condition;
  fm.seed = seed;
  for (int s = 0; s < rows; ++s) {
    require_same_extent(frames[s], masks[s], "inpaint_video frame " + std::to_string(s));
    Image known = frames[s];
    for (int y = 0; y < known.height(); ++y)
      for (int x = 0; x < known.width(); ++x)
        if (!masks[s](y, x))
          for (int c = 0; c < known.channels(); ++c) known(y, x, c) = 0.0f;
    LatentFrame z0 = codec.encode(known);
    fm.latents.push_back(initial_noise(seed, s, 0, z0.height(), z0.width(), z0.channels()));
    fm.known_latents.push_back(std::move(z0));
    fm.latent_masks.push_back(pool_mask(masks[s], codec.factor()));
    fm.image_known.push_back(std::move(known));
    fm.image_masks.push_back(masks[s]);
  }

  for (int k = 0; k < plan.outer_steps; ++k) {
    const int t = plan.timestep(k);
    const int passes = plan.resamples(k);
    for (int n = 1; n <= passes; ++n) {
      if (opt.reinject && (n == passes || opt.reinject_every_resample)) {
        boundary_reinjection(fm, t, oracle, codec, sched, {}, 1);
      }
      fm.latents = denoise_sequence(fm.latents, fm.known_latents, fm.latent_masks, t, oracle, sched,
                                    {Direction::kTemporal, 0, condition},
                                    cell_noise(seed, t, n, Direction::kTemporal, 0));
      detail::report_step(opt, fm, k, t, n, Direction::kTemporal, plan.refining(k));
      if (n < passes) {
        for (int s = 0; s < rows; ++s) {
          LatentFrame& z = fm.latents[s];
          LatentFrame xi(z.height(), z.width(), z.channels());
          fill_standard_normal({seed, NoiseStream::kResample, t, n, s, 0}, xi.span());
          z = resample_noise(z, t, sched, xi);
        }
      }
    }
  }
  std::vector<Image> decoded;
  decoded.reserve(rows);
  for (const auto& z : fm.latents) decoded.push_back(codec.decode(z));
  return decoded;
}

/// Leftmost and rightmost columns of a decoded (rows x cols) grid.
inline std::pair<std::vector<Image>, std::vector<Image>> extract_stereo(const std::vector<Image>& grid,
                                                                        int rows, int cols) {
  if (cols < 2) throw ConfigError("extract_stereo needs at least two views (V >= 1)");
  if (static_cast<int>(grid.size()) != rows * cols) throw ShapeError("extract_stereo: grid size mismatch");
  std::vector<Image> left, right;
  for (int s = 0; s < rows; ++s) {
    left.push_back(grid[s * cols]);
    right.push_back(grid[s * cols + cols - 1]);
  }
  return {std::move(left), std::move(right)};
}

}  // namespace fmstereo
