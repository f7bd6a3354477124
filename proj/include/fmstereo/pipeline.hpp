// SPDX-License-Identifier: Apache-2.0
#pragma once

// End-to-end orchestration: ingestion, depth processing, optional
// outpainting, rig warps, frame-matrix denoising, Poisson blending and
// export, plus the invariant checks behind the `verify` verb.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fmstereo/blend_export.hpp"
#include "fmstereo/bridge.hpp"
#include "fmstereo/config.hpp"
#include "fmstereo/depthproc.hpp"
#include "fmstereo/diffusion.hpp"
#include "fmstereo/error.hpp"
#include "fmstereo/geometry.hpp"
#include "fmstereo/io/checksum.hpp"
#include "fmstereo/io/pfm.hpp"
#include "fmstereo/io/png.hpp"
#include "fmstereo/matrix.hpp"
#include "fmstereo/oracle.hpp"
#include "fmstereo/parallel.hpp"
#include "fmstereo/poisson.hpp"
#include "fmstereo/synthetic.hpp"

namespace fmstereo {

// ---------------------------------------------------------------- ingestion

struct InputClip {
  Camera camera;
  std::vector<Image> frames;
  std::vector<DepthMap> depths;
  std::vector<FlowField> forward;
  /// Empty unless every backward flow file is present.
  std::vector<FlowField> backward;

  int count() const noexcept { return static_cast<int>(frames.size()); }
};

inline Camera read_camera_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing input file: " + path.string());
  Camera cam;
  try {
    const auto j = nlohmann::json::parse(in);
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  cam.validate();
  return cam;
}

/// Reads frames/tNNN.png (contiguous from t000), depth/tNNN.pfm and, when
/// `need_flow`, flow/fwd_tNNN_{u,v}.pfm. Every required path is checked
/// before any is read; the first missing one is named in the error.
inline InputClip load_input(const std::filesystem::path& dir, bool need_flow) {
  namespace fs = std::filesystem;
  int frames = 0;
  while (fs::exists(dir / input_frame_path(frames))) ++frames;
  std::vector<std::string> required{"camera.json"};
  if (frames == 0) required.push_back(input_frame_path(0));
  for (int s = 0; s < frames; ++s) required.push_back(input_depth_path(s));
  if (need_flow) {
    for (int s = 0; s + 1 < frames; ++s) {
      required.push_back(input_flow_path("fwd", s, 'u'));
      required.push_back(input_flow_path("fwd", s, 'v'));
    }
  }
  for (const auto& rel : required) {
    if (!fs::exists(dir / rel)) throw IoError("missing input file: " + (dir / rel).string());
  }

  InputClip clip;
  clip.camera = read_camera_json(dir / "camera.json");
  for (int s = 0; s < frames; ++s) {
    clip.frames.push_back(from_8bit(read_png(dir / input_frame_path(s), 3)));
    DepthMap d = read_pfm(dir / input_depth_path(s));
    if (d.channels() != 1) throw IoError(input_depth_path(s) + ": depth must be single-channel");
    const std::string where = "frame " + std::to_string(s);
    if (clip.frames.back().width() != clip.camera.width || clip.frames.back().height() != clip.camera.height) {
      throw ShapeError(where + ": image size does not match camera.json");
    }
    require_same_extent(d, clip.frames.back(), where + " depth");
    clip.depths.push_back(std::move(d));
  }
  if (need_flow) {
    for (int s = 0; s + 1 < frames; ++s) {
      clip.forward.push_back(read_flow(dir, "fwd", s));
      require_same_extent(clip.forward.back().flow, clip.frames[s], "forward flow " + std::to_string(s));
    }
    bool have_backward = frames > 1;
    for (int s = 1; s < frames && have_backward; ++s) {
      have_backward = fs::exists(dir / input_flow_path("bwd", s, 'u')) &&
                      fs::exists(dir / input_flow_path("bwd", s, 'v'));
    }
    if (have_backward) {
      for (int s = 1; s < frames; ++s) {
        clip.backward.push_back(read_flow(dir, "bwd", s));
        require_same_extent(clip.backward.back().flow, clip.frames[s], "backward flow " + std::to_string(s));
      }
    }
  }
  return clip;
}

inline std::vector<Image> load_image_grid(const std::filesystem::path& dir, int rows, int cols) {
  std::vector<std::string> paths;
  for (int s = 0; s < rows; ++s)
    for (int v = 0; v < cols; ++v) paths.push_back(gt_path(v, s));
  for (const auto& p : paths)
    if (!std::filesystem::exists(dir / p)) throw IoError("missing ground-truth file: " + (dir / p).string());
  std::vector<Image> grid;
  grid.reserve(paths.size());
  for (const auto& p : paths) grid.push_back(from_8bit(read_png(dir / p, 3)));
  return grid;
}

// ---------------------------------------------------------------- outpainting

struct OutpaintResult {
  std::vector<Image> frames;
  std::vector<DepthMap> depths;
  /// 1 = original pixel, 0 = outpainted band.
  std::vector<Mask> masks;
  int padding = 0;
};

/// Places each frame in a canvas widened by `padding` on both sides, marks
/// the bands unknown and fills them by single-video denoising inpainting.
/// Internally the canvas is extended on the right to a multiple of the codec
/// factor and cropped back. Band depth is mirrored from the nearest known
/// columns, or set to `constant_depth`.
inline OutpaintResult outpaint_then_inpaint(const std::vector<Image>& frames, const std::vector<DepthMap>& depths,
                                            int padding, const LatentCodec& codec, DenoiserOracle& oracle,
                                            const NoiseSchedule& sched, const SamplingPlan& plan, std::uint64_t seed,
                                            std::uint32_t condition, const DenoiseOptions& opt,
                                            OutpaintDepth depth_mode = OutpaintDepth::kMirror,
                                            double constant_depth = 10.0) {
  if (padding < 0) throw DomainError("outpaint padding must be >= 0");
  if (frames.empty() || frames.size() != depths.size()) throw ShapeError("outpaint: frames and depths must align");
  OutpaintResult r;
  r.padding = padding;
  if (padding == 0) {
    r.frames = frames;
    r.depths = depths;
    for (const auto& f : frames) r.masks.push_back(make_mask(f.height(), f.width(), 1));
    return r;
  }
  const int h = frames.front().height();
  const int w = frames.front().width();
  const int wide = w + 2 * padding;
  const int canvas_w = outpaint_canvas_width(w, padding, codec.factor());
  const int canvas_h = round_up(h, codec.factor());

  std::vector<Image> canvases;
  std::vector<Mask> canvas_masks;
  for (std::size_t s = 0; s < frames.size(); ++s) {
    require_same_shape(frames[s], frames.front(), "outpaint frame " + std::to_string(s));
    Image c = make_image(canvas_h, canvas_w);
    Mask m = make_mask(canvas_h, canvas_w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        m(y, x + padding) = 1;
        for (int ch = 0; ch < 3; ++ch) c(y, x + padding, ch) = frames[s](y, x, ch);
      }
    canvases.push_back(std::move(c));
    canvas_masks.push_back(std::move(m));
  }
  const std::vector<Image> filled =
      inpaint_video(canvases, canvas_masks, codec, oracle, sched, plan, seed, condition, opt);

  for (std::size_t s = 0; s < frames.size(); ++s) {
    Image f = crop(filled[s], h, wide);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < 3; ++ch) f(y, x + padding, ch) = frames[s](y, x, ch);
    DepthMap d = make_depth(h, wide);
    Mask m = make_mask(h, wide);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < wide; ++x) {
        const int local = x - padding;
        if (local >= 0 && local < w) {
          d(y, x) = depths[s](y, local);
          m(y, x) = 1;
        } else if (depth_mode == OutpaintDepth::kConstant) {
          d(y, x) = static_cast<float>(constant_depth);
        } else {
          const int mirrored = local < 0 ? -1 - local : 2 * w - 1 - local;
          d(y, x) = depths[s](y, std::clamp(mirrored, 0, w - 1));
        }
      }
    r.frames.push_back(std::move(f));
    r.depths.push_back(std::move(d));
    r.masks.push_back(std::move(m));
  }
  return r;
}

// ---------------------------------------------------------------- run

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunOptions {
  StepHook hook;
};

struct RunReport {
  std::uint64_t seed = 0;
  std::string config_hash;
  int frames = 0;
  int views = 0;
  int padding = 0;
  std::vector<StageTiming> timings;
  int known_fidelity_max_abs = 0;
  bool reference_column_exact = true;
  std::size_t poisson_fallback_pixels = 0;
  int poisson_unconverged = 0;
  std::vector<double> disoccluded_fraction;

  nlohmann::json to_json(const PipelineConfig& cfg) const {
    nlohmann::json j;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    j["config"] = cfg.canonical();
    j["frames"] = frames;
    j["views"] = views;
    j["outpaint_padding"] = padding;
    nlohmann::json t = nlohmann::json::object();
    for (const auto& s : timings) t[s.stage] = s.seconds;
    j["timings_s"] = t;
    j["invariants"] = {{"known_fidelity_max_abs_8bit", known_fidelity_max_abs},
                       {"known_fidelity_ok", known_fidelity_max_abs == 0},
                       {"reference_column_exact", reference_column_exact},
                       {"poisson_fallback_pixels", poisson_fallback_pixels},
                       {"poisson_unconverged", poisson_unconverged},
                       {"disoccluded_fraction", disoccluded_fraction}};
    return j;
  }
};

inline std::string sequence_path(const std::string& dir, int s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/t%03d.png", dir.c_str(), s);
  return buf;
}

inline std::string view_dir(const std::string& dir, int v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/v%03d", dir.c_str(), v);
  return buf;
}

namespace detail {

template <typename Fn>
auto run_stage(const char* stage, RunReport& report, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    report.timings.push_back({stage, dt.count()});
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto result = fn();
      finish();
      return result;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

inline std::unique_ptr<DenoiserOracle> make_oracle(const PipelineConfig& cfg, const NoiseSchedule& sched,
                                                   std::vector<LatentFrame> exact_cells, int rows, int cols) {
  switch (cfg.oracle) {
    case OracleKind::kExact:
      return std::make_unique<ExactOracle>(std::move(exact_cells), rows, cols, sched);
    case OracleKind::kSmoothing:
      return std::make_unique<SmoothingOracle>(sched);
    case OracleKind::kNull:
      return std::make_unique<NullOracle>();
    case OracleKind::kBridge:
      return std::make_unique<bridge::BridgeOracle>(cfg.bridge_address, cfg.bridge_timeout_ms);
  }
  throw ConfigError("unknown oracle");
}

inline std::filesystem::path ground_truth_dir(const PipelineConfig& cfg, const std::filesystem::path& input) {
  const std::filesystem::path p(cfg.ground_truth);
  return p.is_absolute() ? p : input / p;
}

/// Tracks written files for the output manifest.
class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path root) : root_(std::move(root)) {}

  void png(const std::string& rel, const Image8& img) {
    prepare(rel);
    write_png(root_ / rel, img);
    record(rel);
  }
  void mask(const std::string& rel, const Mask& m) {
    prepare(rel);
    write_mask_png(root_ / rel, m);
    record(rel);
  }
  void record(const std::string& rel) { files_.push_back({rel, file_checksum(root_ / rel)}); }

  void manifest(int times, int views) const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["times"] = times;
    j["views"] = views;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& e : files_) files.push_back({{"path", e.path}, {"fnv1a64", e.checksum}});
    j["files"] = files;
    write_text(root_ / "manifest.json", j.dump(2));
  }

 private:
  void prepare(const std::string& rel) const { std::filesystem::create_directories((root_ / rel).parent_path()); }

  std::filesystem::path root_;
  std::vector<ManifestEntry> files_;
};

}  // namespace detail

/// Runs the whole pipeline on `input` and writes deliverables to `output`.
///
/// Stereo output: left/, right/, side_by_side/, anaglyph/ sequences plus the
/// warped right view and its mask. Spatial output: spatial/ dataset plus
/// warped views and masks. Both get manifest.json and run_report.json.
inline RunReport run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& input,
                              const std::filesystem::path& output, const RunOptions& options = {}) {
  cfg.validate();
  RunReport report;
  report.seed = cfg.seed;
  report.config_hash = cfg.hash();
  const NoiseSchedule sched = cfg.schedule();
  const SamplingPlan plan = cfg.plan();
  const BoxCodec codec(cfg.codec_factor);
  const DenoiseOptions denoise_opt{cfg.reinject, cfg.reinject_every_resample, cfg.threads, options.hook};

  InputClip clip = detail::run_stage("ingest", report, [&] { return load_input(input, cfg.smooth_depth); });
  const int rows = clip.count();
  const int cols = cfg.views();
  const int width = clip.camera.width;
  const int height = clip.camera.height;
  report.frames = rows;
  report.views = cols;

  DepthClip depth = detail::run_stage("depthproc", report, [&] {
    DepthClip d;
    if (cfg.normalize_depth) {
      d = normalize_depth(clip.depths, cfg.depth_near, cfg.depth_far);
    } else {
      d.depths = clip.depths;
      d.near = cfg.depth_near;
      d.far = cfg.depth_far;
    }
    if (cfg.smooth_depth && rows > 1) {
      d = temporal_smooth(d, clip.forward, {cfg.smooth_radius, cfg.smooth_sigma, cfg.threads},
                          clip.backward.empty() ? nullptr : &clip.backward);
    }
    return d;
  });

  // Working canvas: the original frames, or the outpainted clip.
  const int padding = effective_padding(cfg, clip.camera);
  report.padding = padding;
  std::vector<Image> work_frames = clip.frames;
  std::vector<DepthMap> work_depths = depth.depths;
  if (cfg.outpaint && padding > 0) {
    detail::run_stage("outpaint", report, [&] {
      std::vector<LatentFrame> targets;
      if (cfg.oracle == OracleKind::kExact) {
        const auto gt_dir = detail::ground_truth_dir(cfg, input);
        for (int s = 0; s < rows; ++s) {
          const auto p = gt_dir / gt_padded_path(s);
          if (!std::filesystem::exists(p)) throw IoError("missing ground-truth file: " + p.string());
          targets.push_back(codec.encode(from_8bit(read_png(p, 3))));
        }
      }
      auto oracle = detail::make_oracle(cfg, sched, std::move(targets), rows, 1);
      OutpaintResult r = outpaint_then_inpaint(clip.frames, depth.depths, padding, codec, *oracle, sched, plan,
                                               cfg.seed ^ 0x9e3779b97f4a7c15ULL, cfg.condition, denoise_opt,
                                               cfg.outpaint_depth, cfg.depth_far);
      work_frames = std::move(r.frames);
      work_depths = std::move(r.depths);
    });
  }

  Camera work_camera = clip.camera;
  work_camera.width = work_frames.front().width();
  work_camera.cx += padding;
  const CameraRig rig = build_rig(cfg.mode, cols, cfg.rig_extent(), clip.camera);
  const CameraRig work_rig = build_rig(cfg.mode, cols, cfg.rig_extent(), work_camera);

  std::vector<WarpResult> warps(static_cast<std::size_t>(rows) * cols);
  detail::run_stage("warp", report, [&] {
    parallel_for(rows * cols, cfg.threads, [&](int i) {
      const int s = i / cols;
      const int v = i % cols;
      try {
        if (cfg.mode == RigMode::kStereo && v == 0) {
          WarpResult w;
          w.frame = {clip.frames[s], depth.depths[s], make_mask(height, width, 1)};
          w.disocclusion = w.frame.mask;
          warps[i] = std::move(w);
          return;
        }
        RgbdFrame src{work_frames[s], work_depths[s], make_mask(work_camera.height, work_camera.width, 1)};
        src.validate();
        WarpResult w = warp_frame(src, work_camera, work_rig.cameras[v], cfg.planes, cfg.depth_range(), cfg.repair());
        if (padding > 0) {
          w.frame.color = crop_columns(w.frame.color, padding, width);
          w.frame.depth = crop_columns(w.frame.depth, padding, width);
          w.frame.mask = crop_columns(w.frame.mask, padding, width);
          w.disocclusion = w.frame.mask;
        }
        warps[i] = std::move(w);
      } catch (const std::exception& e) {
        throw StageError("warp", "frame " + std::to_string(s) + ", view " + std::to_string(v) + ": " + e.what());
      }
    });
  });
  for (int v = 0; v < cols; ++v) {
    std::size_t unknown = 0;
    for (int s = 0; s < rows; ++s)
      for (auto m : warps[static_cast<std::size_t>(s) * cols + v].disocclusion.values()) unknown += m ? 0 : 1;
    report.disoccluded_fraction.push_back(static_cast<double>(unknown) / (static_cast<double>(rows) * width * height));
  }

  FrameMatrix fm = detail::run_stage("matrix", report, [&] {
    return build_frame_matrix(warps, rows, cols, codec, cfg.condition, cfg.seed, rig,
                              cfg.mode == RigMode::kStereo);
  });
  warps.clear();
  warps.shrink_to_fit();

  std::vector<Image> generated = detail::run_stage("denoise", report, [&] {
    std::vector<LatentFrame> targets;
    if (cfg.oracle == OracleKind::kExact) {
      std::vector<Image> gt = load_image_grid(detail::ground_truth_dir(cfg, input), rows, cols);
      for (auto& img : gt) {
        if (img.width() != width || img.height() != height) throw ShapeError("ground-truth size mismatch");
        targets.push_back(codec.encode(img));
        img = Image();
      }
    }
    auto oracle = detail::make_oracle(cfg, sched, std::move(targets), rows, cols);
    return denoise_frame_matrix(fm, plan, *oracle, codec, sched, denoise_opt);
  });

  std::vector<int> exported;
  if (cfg.mode == RigMode::kStereo) {
    exported = {0, cols - 1};
  } else {
    for (int v = 0; v < cols; ++v) exported.push_back(v);
  }
  std::vector<Image> final_frames(static_cast<std::size_t>(rows) * cols);
  detail::run_stage("poisson", report, [&] {
    std::vector<PoissonReport> reports(static_cast<std::size_t>(rows) * exported.size());
    parallel_for(static_cast<int>(reports.size()), cfg.threads, [&](int j) {
      const int s = j / static_cast<int>(exported.size());
      const int v = exported[j % exported.size()];
      const std::size_t i = fm.cell(s, v);
      try {
        if (cfg.poisson) {
          final_frames[i] = poisson_blend(generated[i], fm.image_known[i], fm.image_masks[i], cfg.poisson_params(),
                                          &reports[j]);
        } else {
          Image out = generated[i];
          const Mask& m = fm.image_masks[i];
          for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x)
              if (m(y, x))
                for (int c = 0; c < 3; ++c) out(y, x, c) = fm.image_known[i](y, x, c);
          final_frames[i] = std::move(out);
        }
      } catch (const std::exception& e) {
        throw StageError("poisson", "frame " + std::to_string(s) + ", view " + std::to_string(v) + ": " + e.what());
      }
    });
    for (const auto& r : reports) {
      report.poisson_fallback_pixels += r.fallback_pixels;
      report.poisson_unconverged += r.converged ? 0 : 1;
    }
  });
  generated.clear();

  detail::run_stage("export", report, [&] {
    std::filesystem::create_directories(output);
    detail::OutputWriter out(output);
    std::vector<Image8> final8(final_frames.size());
    for (int s = 0; s < rows; ++s)
      for (int v : exported) {
        const std::size_t i = fm.cell(s, v);
        final8[i] = to_8bit(final_frames[i]);
        const Image8 warped8 = to_8bit(fm.image_known[i]);
        const Mask& m = fm.image_masks[i];
        for (int y = 0; y < height; ++y)
          for (int x = 0; x < width; ++x)
            if (m(y, x))
              for (int c = 0; c < 3; ++c)
                report.known_fidelity_max_abs = std::max(
                    report.known_fidelity_max_abs, std::abs(int(final8[i](y, x, c)) - int(warped8(y, x, c))));
      }

    if (cfg.mode == RigMode::kStereo) {
      std::vector<Image> left, right;
      for (int s = 0; s < rows; ++s) {
        left.push_back(final_frames[fm.cell(s, 0)]);
        right.push_back(final_frames[fm.cell(s, cols - 1)]);
        report.reference_column_exact =
            report.reference_column_exact && final8[fm.cell(s, 0)] == to_8bit(clip.frames[s]);
      }
      const auto sbs = compose_side_by_side(left, right);
      const auto ana = compose_anaglyph(left, right);
      for (int s = 0; s < rows; ++s) {
        out.png(sequence_path("left", s), final8[fm.cell(s, 0)]);
        out.png(sequence_path("right", s), final8[fm.cell(s, cols - 1)]);
        out.png(sequence_path("side_by_side", s), to_8bit(sbs[s]));
        out.png(sequence_path("anaglyph", s), to_8bit(ana[s]));
        out.png(sequence_path("warped/right", s), to_8bit(fm.image_known[fm.cell(s, cols - 1)]));
        out.mask(sequence_path("masks/right", s), fm.image_masks[fm.cell(s, cols - 1)]);
      }
    } else {
      SpatialDataset ds;
      ds.times = rows;
      ds.views = cols;
      for (int s = 0; s < rows; ++s)
        for (int v = 0; v < cols; ++v) ds.frames.push_back(final8[fm.cell(s, v)]);
      ds.depth0 = depth.depths.front();
      if (cfg.export_all_depths) ds.reference_depths = depth.depths;
      ds.cameras = rig.cameras;
      ds.timestamps = normalized_timestamps(rows);
      const Manifest m = export_spatial(ds, output / "spatial");
      for (const auto& e : m.files) out.record("spatial/" + e.path);
      out.record("spatial/manifest.json");
      for (int v = 0; v < cols; ++v)
        for (int s = 0; s < rows; ++s) {
          out.png(sequence_path(view_dir("warped", v), s), to_8bit(fm.image_known[fm.cell(s, v)]));
          out.mask(sequence_path(view_dir("masks", v), s), fm.image_masks[fm.cell(s, v)]);
        }
    }
    out.manifest(rows, cols);
  });

  detail::write_text(output / "run_report.json", report.to_json(cfg).dump(2));
  return report;
}

// ---------------------------------------------------------------- verify

struct InvariantCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Re-checks an output directory: manifest checksums, known-region
/// fidelity against the saved warps, and the lossless packaging of
/// side-by-side / anaglyph frames or the spatial dataset round trip.
inline std::vector<InvariantCheck> verify_output(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::vector<InvariantCheck> checks;
  auto add = [&](std::string name, bool ok, std::string detail) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  };
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      add(name, false, e.what());
    }
  };

  guarded("manifest", [&] {
    const VerifyReport r = verify_manifest(dir);
    std::string detail = r.ok ? "all checksums match" : "";
    for (const auto& p : r.mismatched) detail += "checksum mismatch: " + p + "; ";
    for (const auto& p : r.missing) detail += "missing: " + p + "; ";
    add("manifest", r.ok, detail);
  });

  auto fidelity = [&](const std::string& name, const std::string& final_dir, const std::string& warped_dir,
                      const std::string& mask_dir, int times) {
    guarded(name, [&] {
      int worst = 0;
      for (int s = 0; s < times; ++s) {
        const Image8 f = read_png(dir / sequence_path(final_dir, s), 3);
        const Image8 w = read_png(dir / sequence_path(warped_dir, s), 3);
        const Mask m = read_mask_png(dir / sequence_path(mask_dir, s));
        require_same_shape(f, w, name);
        for (int y = 0; y < f.height(); ++y)
          for (int x = 0; x < f.width(); ++x)
            if (m(y, x))
              for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(int(f(y, x, c)) - int(w(y, x, c))));
      }
      add(name, worst == 0, "max |final - warped| on known pixels = " + std::to_string(worst));
    });
  };

  const Manifest manifest = [&] {
    try {
      return read_manifest(dir);
    } catch (const std::exception&) {
      return Manifest{};
    }
  }();
  const int times = manifest.times;

  if (fs::exists(dir / "spatial")) {
    guarded("spatial-dataset", [&] {
      const SpatialDataset ds = import_spatial(dir / "spatial");
      const VerifyReport r = verify_manifest(dir / "spatial");
      add("spatial-dataset", r.ok && ds.views == manifest.views && ds.times == times,
          std::to_string(ds.times) + " times x " + std::to_string(ds.views) + " views, " +
              std::to_string(ds.cameras.size()) + " cameras");
    });
    for (int v = 0; v < manifest.views; ++v) {
      const std::string vd = view_dir("", v).substr(1);
      guarded("known-fidelity " + vd, [&] {
        int worst = 0;
        for (int s = 0; s < times; ++s) {
          const Image8 f = read_png(dir / "spatial" / frame_path(v, s), 3);
          const Image8 w = read_png(dir / sequence_path(view_dir("warped", v), s), 3);
          const Mask m = read_mask_png(dir / sequence_path(view_dir("masks", v), s));
          for (int y = 0; y < f.height(); ++y)
            for (int x = 0; x < f.width(); ++x)
              if (m(y, x))
                for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(int(f(y, x, c)) - int(w(y, x, c))));
        }
        add("known-fidelity " + vd, worst == 0, "max |final - warped| on known pixels = " + std::to_string(worst));
      });
    }
  } else {
    fidelity("known-fidelity right", "right", "warped/right", "masks/right", times);
    guarded("packaging", [&] {
      bool ok = true;
      for (int s = 0; s < times && ok; ++s) {
        const Image8 l = read_png(dir / sequence_path("left", s), 3);
        const Image8 r = read_png(dir / sequence_path("right", s), 3);
        const Image8 sbs = read_png(dir / sequence_path("side_by_side", s), 3);
        const Image8 ana = read_png(dir / sequence_path("anaglyph", s), 3);
        ok = sbs.width() == 2 * l.width() && sbs.height() == l.height() && ana.same_shape(l);
        for (int y = 0; ok && y < l.height(); ++y)
          for (int x = 0; ok && x < l.width(); ++x)
            for (int c = 0; c < 3; ++c) {
              ok = ok && sbs(y, x, c) == l(y, x, c) && sbs(y, x + l.width(), c) == r(y, x, c);
              ok = ok && ana(y, x, c) == (c == 0 ? l(y, x, c) : r(y, x, c));
            }
      }
      add("packaging", ok, ok ? "side-by-side and anaglyph are lossless rearrangements" : "packaging mismatch");
    });
  }
  if (times == 0) add("frame-count", false, "manifest lists no frames");
  return checks;
}

}  // namespace fmstereo
