// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "fmstereo/bridge.hpp"
#include "fmstereo/config.hpp"
#include "fmstereo/pipeline.hpp"
#include "fmstereo/synthetic.hpp"
#include "test_util.hpp"

using namespace fmstereo;
namespace fs = std::filesystem;

namespace {

// Reduced plan for pipeline runs that only exercise plumbing.
PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.stereo_views = 3;
  cfg.steps = 4;
  cfg.coarse_resamples = 2;
  cfg.refine_resamples = 1;
  cfg.phase_boundary = 2;
  cfg.seed = 5;
  return cfg;
}

fs::path synth_input(const std::string& name, const PipelineConfig& cfg, int w = 64, int h = 48, int frames = 3) {
  const auto dir = fmtest::scratch_dir(name);
  write_synthetic(default_scene(w, h, frames), cfg, dir);
  return dir;
}

std::vector<ManifestEntry> files_of(const fs::path& dir) { return read_manifest(dir).files; }

bool same_files(const fs::path& a, const fs::path& b) {
  const auto fa = files_of(a), fb = files_of(b);
  if (fa.size() != fb.size()) return false;
  for (std::size_t i = 0; i < fa.size(); ++i)
    if (fa[i].path != fb[i].path || fa[i].checksum != fb[i].checksum) return false;
  return true;
}

bridge::WireFrame random_wire(std::mt19937& rng, int h, int w, int c) {
  bridge::WireFrame f{static_cast<std::uint16_t>(h), static_cast<std::uint16_t>(w), static_cast<std::uint16_t>(c), {}};
  f.data.resize(f.elements());
  for (auto& v : f.data) {
    // Any finite bit pattern.
    std::uint32_t bits;
    do {
      bits = rng();
    } while (!std::isfinite(std::bit_cast<float>(bits)));
    v = std::bit_cast<float>(bits);
  }
  return f;
}

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST(Config, DefaultsMatchReferenceSettings) {
  const PipelineConfig c;
  EXPECT_EQ(c.mode, RigMode::kStereo);
  EXPECT_EQ(c.baseline, 0.07);
  EXPECT_EQ(c.depth_near, 1.0);
  EXPECT_EQ(c.depth_far, 10.0);
  EXPECT_EQ(c.stereo_views, 6);
  EXPECT_EQ(c.spatial_views, 16);
  EXPECT_EQ(c.planes, 4);
  EXPECT_EQ(c.timesteps, 1000);
  EXPECT_EQ(c.steps, 50);
  EXPECT_EQ(c.jump, 20);
  EXPECT_EQ(c.coarse_resamples, 8);
  EXPECT_EQ(c.refine_resamples, 4);
  EXPECT_EQ(c.phase_boundary, 25);
  EXPECT_EQ(c.isolated_threshold, 0.5);
  EXPECT_EQ(c.crack_threshold, 0.2);
  EXPECT_EQ(c.beta_start, 1e-4);
  EXPECT_EQ(c.beta_end, 0.02);
  EXPECT_TRUE(c.reinject);
  EXPECT_NO_THROW(c.validate());
  const SamplingPlan p = c.plan();
  EXPECT_EQ(p.timestep(0), 981);
  EXPECT_EQ(p.timestep(49), 1);
  EXPECT_EQ(p.resamples(24), 8);
  EXPECT_EQ(p.resamples(25), 4);
  EXPECT_EQ(c.resolved_refine_views(), std::vector<int>{5});
}

TEST(Config, HashChangesIffAFieldChanges) {
  const std::map<std::string, std::string> alternates = {
      {"mode", "spatial"},
      {"stereo.views", "4"},
      {"stereo.baseline", "0.065"},
      {"spatial.views", "8"},
      {"spatial.radius", "0.1"},
      {"depth.near", "0.5"},
      {"depth.far", "20"},
      {"depth.normalize", "false"},
      {"depth.smooth", "false"},
      {"depth.smooth_radius", "3"},
      {"depth.smooth_sigma", "1.5"},
      {"warp.planes", "8"},
      {"warp.isolated_threshold", "0.4"},
      {"warp.crack_threshold", "0.3"},
      {"warp.crack_sigma", "0.6"},
      {"schedule.timesteps", "2000"},
      {"schedule.beta_start", "2e-4"},
      {"schedule.beta_end", "0.03"},
      {"plan.steps", "40"},
      {"plan.jump", "10"},
      {"plan.coarse_resamples", "6"},
      {"plan.refine_resamples", "2"},
      {"plan.phase_boundary", "20"},
      {"plan.refine_views", "all"},
      {"seed", "42"},
      {"condition", "3"},
      {"codec", "other"},
      {"codec.factor", "4"},
      {"oracle", "smoothing"},
      {"oracle.ground_truth", "truth"},
      {"oracle.bridge_address", "127.0.0.1:9000"},
      {"oracle.bridge_timeout_ms", "1000"},
      {"outpaint", "true"},
      {"outpaint.depth", "constant"},
      {"reinject", "false"},
      {"reinject.every_resample", "true"},
      {"poisson", "false"},
      {"poisson.tol", "1e-4"},
      {"poisson.max_iters", "500"},
      {"poisson.omega", "1.5"},
      {"export.all_depths", "true"},
      {"threads", "4"},
  };
  const PipelineConfig base;
  const std::string h0 = base.hash();
  for (const auto& [key, field] : detail::fields()) {
    ASSERT_TRUE(alternates.count(key)) << "no alternate for " << key;
    PipelineConfig same = base;
    same.set(key, field.get(base));
    EXPECT_EQ(same.hash(), h0) << key;
    PipelineConfig changed = base;
    changed.set(key, alternates.at(key));
    EXPECT_NE(changed.hash(), h0) << key;
  }
  EXPECT_EQ(alternates.size(), detail::fields().size());
}

TEST(Config, FileOverridesAndSeedEnvironment) {
  const auto dir = fmtest::scratch_dir("config");
  {
    std::ofstream f(dir / "run.cfg");
    f << "# comment\nmode = spatial\nplan.steps = 20   # trailing\nplan.phase_boundary = 10\nseed = 7\n\n";
  }
  const PipelineConfig a = load_config(dir / "run.cfg", {"warp.planes=6"}, nullptr);
  EXPECT_EQ(a.mode, RigMode::kSpatial);
  EXPECT_EQ(a.steps, 20);
  EXPECT_EQ(a.planes, 6);
  EXPECT_EQ(a.seed, 7u);
  const PipelineConfig b = load_config(dir / "run.cfg", {"seed=9"}, "123");
  EXPECT_EQ(b.seed, 123u);
  EXPECT_EQ(load_config({}, {}, nullptr).hash(), PipelineConfig().hash());
}

TEST(Config, ParseErrorsAreReported) {
  PipelineConfig c;
  EXPECT_THROW(c.set("no.such.key", "1"), ConfigError);
  EXPECT_THROW(c.set("warp.planes", "four"), ConfigError);
  EXPECT_THROW(c.set("mode", "mono"), ConfigError);
  EXPECT_THROW(c.set("reinject", "maybe"), ConfigError);
  try {
    apply_config_text(c, "seed = 1\nbroken line\n", "x.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_config({}, {"seed=abc"}, nullptr), ConfigError);
  EXPECT_THROW(load_config({}, {}, "-1x"), ConfigError);
  EXPECT_THROW(load_config({}, {"plan.steps=60"}, nullptr), ConfigError);
  EXPECT_THROW(load_config({}, {"poisson.omega=2"}, nullptr), ConfigError);
  EXPECT_THROW(load_config({}, {"plan.refine_views=9"}, nullptr), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/run.cfg", {}, nullptr), ConfigError);
}

TEST(Synthetic, StaticSceneHasZeroFlow) {
  SceneSpec spec = default_scene(48, 40, 3);
  for (auto& l : spec.foreground) l.vx = l.vy = 0;
  const FlowField f = scene_flow(spec, 0, 1);
  for (float v : f.flow.values()) EXPECT_EQ(v, 0.0f);
  for (auto v : f.valid.values()) EXPECT_EQ(v, 1);
}

TEST(Synthetic, MovingLayerFlowMatchesVelocity) {
  const SceneSpec spec = default_scene(64, 48, 4);
  const FlowField f = scene_flow(spec, 0, 1);
  const SceneLayer& fg = spec.foreground[0];
  const int x = static_cast<int>(fg.x0 + fg.w / 2), y = static_cast<int>(fg.y0 + 1);
  EXPECT_EQ(f.valid(y, x), 1);
  EXPECT_EQ(f.flow(y, x, 1), static_cast<float>(fg.vy));
}

TEST(Synthetic, DisparitiesFollowDepth) {
  SceneSpec spec = default_scene(96, 64, 1);
  spec.fx = spec.fy = 100;
  spec.background.depth = 8;
  spec.foreground[0].depth = 2;
  spec.foreground[0].x0 = 20;
  spec.foreground[0].w = 40;
  const Camera ref = spec.reference_camera();
  const Camera right = build_rig(RigMode::kStereo, 6, 0.07, ref).cameras[5];
  const SceneRender r = render_scene(spec, right, 0);
  const int y = static_cast<int>(spec.foreground[0].y0 + 2);
  bool saw_fg = false, saw_bg = false;
  for (int x = 0; x < 96; ++x) {
    const auto hit = detail::cast(spec, right, x, y, 0);
    const double disparity = hit.u - x;
    if (hit.layer == 0) {
      EXPECT_NEAR(disparity, 3.5, 1e-9);
      EXPECT_NEAR(r.depth(y, x), 2.0, 1e-6);
      saw_fg = true;
    } else {
      EXPECT_NEAR(disparity, 0.875, 1e-9);
      saw_bg = true;
    }
  }
  EXPECT_TRUE(saw_fg && saw_bg);
}

TEST(Synthetic, WritesInputLayout) {
  PipelineConfig cfg = small_config();
  const auto dir = synth_input("synth_layout", cfg, 48, 32, 3);
  for (const auto& rel : {input_frame_path(2), input_depth_path(2), input_flow_path("fwd", 1, 'u'),
                          input_flow_path("bwd", 2, 'v'), std::string("camera.json")})
    EXPECT_TRUE(fs::exists(dir / rel)) << rel;
  for (int v = 0; v < 3; ++v) EXPECT_TRUE(fs::exists(dir / "gt" / gt_path(v, 2)));
  const InputClip clip = load_input(dir, true);
  EXPECT_EQ(clip.count(), 3);
  EXPECT_EQ(clip.backward.size(), 2u);
  const SceneRender r = render_scene(default_scene(48, 32, 3), clip.camera, 1);
  EXPECT_EQ(clip.depths[1], r.depth);
}

TEST(Bridge, LargeBatchRoundTripsBitExactly) {
  std::mt19937 rng(11);
  bridge::Request req;
  req.direction = Direction::kSpatial;
  req.timestep = 981;
  req.condition = 77;
  for (int i = 0; i < 16; ++i) req.frames.push_back(random_wire(rng, 40, 72, 4));
  req.frames[0].data[0] = -0.0f;
  req.frames[0].data[1] = std::numeric_limits<float>::denorm_min();
  req.frames[0].data[2] = std::numeric_limits<float>::max();
  const bridge::Request back = bridge::decode_request(bridge::encode_request(req));
  EXPECT_EQ(back.direction, req.direction);
  EXPECT_EQ(back.timestep, 981u);
  EXPECT_EQ(back.condition, 77u);
  ASSERT_EQ(back.frames.size(), 16u);
  for (int i = 0; i < 16; ++i) {
    EXPECT_EQ(back.frames[i].h, 40);
    EXPECT_EQ(back.frames[i].w, 72);
    EXPECT_EQ(back.frames[i].c, 4);
    EXPECT_TRUE(bit_equal(back.frames[i].data, req.frames[i].data)) << i;
  }

  bridge::Response resp;
  resp.epsilon = req.frames;
  resp.variance = req.frames;
  const bridge::Response rb = bridge::decode_response(bridge::encode_response(resp));
  ASSERT_EQ(rb.epsilon.size(), 16u);
  for (int i = 0; i < 16; ++i) EXPECT_TRUE(bit_equal(rb.variance[i].data, resp.variance[i].data));
}

TEST(Bridge, MalformedBuffersAreRejected) {
  bridge::Request req;
  req.frames.push_back({2, 2, 1, {1, 2, 3, 4}});
  auto bytes = bridge::encode_request(req);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(bridge::decode_request(bad_magic), bridge::ProtocolError);
  auto bad_version = bytes;
  bad_version[4] ^= 0x7f;
  EXPECT_THROW(bridge::decode_request(bad_version), bridge::ProtocolError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(bridge::decode_request(truncated), bridge::ProtocolError);
}

TEST(Bridge, ZeroEndpointActsAsNullOracle) {
  bridge::EchoServer server(bridge::EchoMode::kZero);
  bridge::BridgeOracle oracle(server.address(), 5000);
  std::vector<LatentFrame> frames(3, LatentFrame(2, 3, 4, 0.25));
  const auto out = oracle.denoise({frames, 500, Direction::kTemporal, 0, 0});
  ASSERT_EQ(out.size(), 3u);
  for (const auto& o : out) {
    EXPECT_EQ(o.epsilon, LatentFrame(2, 3, 4, 0.0));
    EXPECT_EQ(o.variance, LatentFrame(2, 3, 4, 0.0));
  }
}

TEST(Bridge, WrongCountNamesExpectedAndGot) {
  bridge::EchoServer server(bridge::EchoMode::kWrongCount);
  bridge::BridgeOracle oracle(server.address(), 5000);
  std::vector<LatentFrame> frames(3, LatentFrame(1, 1, 4));
  try {
    oracle.denoise({frames, 1, Direction::kTemporal, 0, 0});
    FAIL() << "no error";
  } catch (const bridge::ProtocolError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("expected 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("got"), std::string::npos) << msg;
  }
}

TEST(Bridge, DistinctErrorKinds) {
  std::vector<LatentFrame> frames(2, LatentFrame(2, 2, 4));
  const DenoiseRequest req{frames, 10, Direction::kTemporal, 0, 0};
  {
    bridge::EchoServer server(bridge::EchoMode::kBadMagic);
    bridge::BridgeOracle oracle(server.address(), 5000);
    EXPECT_THROW(oracle.denoise(req), bridge::ProtocolError);
  }
  {
    bridge::EchoServer server(bridge::EchoMode::kWrongDims);
    bridge::BridgeOracle oracle(server.address(), 5000);
    EXPECT_THROW(oracle.denoise(req), bridge::ProtocolError);
  }
  {
    bridge::EchoServer server(bridge::EchoMode::kStall);
    bridge::BridgeOracle oracle(server.address(), 200);
    EXPECT_THROW(oracle.denoise(req), bridge::TimeoutError);
  }
  std::string closed;
  {
    bridge::EchoServer server(bridge::EchoMode::kZero);
    closed = server.address();
  }
  bridge::BridgeOracle refused(closed, 1000);
  EXPECT_THROW(refused.denoise(req), bridge::ConnectionError);
  EXPECT_THROW(bridge::BridgeOracle("no-port", 1000), ConfigError);
}

TEST(Bridge, SelfTestPassesAgainstReferenceEndpoint) {
  for (auto mode : {bridge::EchoMode::kZero, bridge::EchoMode::kEcho}) {
    bridge::EchoServer server(mode);
    const auto results = bridge::self_test(server.address(), 5000);
    ASSERT_FALSE(results.empty());
    for (const auto& r : results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
  }
  bridge::EchoServer broken(bridge::EchoMode::kWrongDims);
  bool any_failed = false;
  for (const auto& r : bridge::self_test(broken.address(), 2000)) any_failed = any_failed || !r.passed;
  EXPECT_TRUE(any_failed);
}

TEST(Outpaint, ZeroPaddingIsIdentity) {
  std::vector<Image> frames{Image(8, 8, 3, 0.3f)};
  std::vector<DepthMap> depths{make_depth(8, 8, 2.0f)};
  NullOracle oracle;
  const NoiseSchedule sched = make_schedule(1000, 1e-4, 0.02);
  const auto r = outpaint_then_inpaint(frames, depths, 0, BoxCodec(8), oracle, sched, PipelineConfig().plan(), 1, 0,
                                       {});
  EXPECT_EQ(r.frames, frames);
  EXPECT_EQ(r.depths, depths);
  EXPECT_THROW(outpaint_then_inpaint(frames, depths, -1, BoxCodec(8), oracle, sched, PipelineConfig().plan(), 1, 0,
                                     {}),
               DomainError);
}

TEST(Outpaint, ExactOracleFillsBand) {
  const int w = 576, h = 24, frames = 2, pad = 35;
  EXPECT_EQ(outpaint_padding(500, 0.07, 1.0), pad);
  SceneSpec spec = default_scene(w, h, frames);
  const Camera ref = spec.reference_camera();
  const int canvas = outpaint_canvas_width(w, pad, 8);
  EXPECT_EQ(canvas, 648);
  Camera wide = ref;
  wide.width = canvas;
  wide.cx += pad;
  std::vector<Image> clip;
  std::vector<DepthMap> depths;
  std::vector<LatentFrame> targets;
  std::vector<Image> truth;
  const BoxCodec codec(8);
  for (int s = 0; s < frames; ++s) {
    const SceneRender r = render_scene(spec, ref, s);
    clip.push_back(r.color);
    depths.push_back(r.depth);
    Image gt = render_scene(spec, wide, s).color;
    Image gt_h = make_image(8 * ((h + 7) / 8), canvas);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < canvas; ++x)
        for (int c = 0; c < 3; ++c) gt_h(y, x, c) = gt(y, x, c);
    targets.push_back(codec.encode(gt_h));
    truth.push_back(crop(gt, h, w + 2 * pad));
  }
  const NoiseSchedule sched = make_schedule(1000, 1e-4, 0.02);
  ExactOracle oracle(targets, frames, 1, sched);
  const auto r = outpaint_then_inpaint(clip, depths, pad, codec, oracle, sched, PipelineConfig().plan(), 3, 0, {});
  ASSERT_EQ(r.frames.size(), 2u);
  EXPECT_EQ(r.frames[0].width(), 646);
  EXPECT_EQ(r.depths[0].width(), 646);
  for (int s = 0; s < frames; ++s) {
    Mask band = make_mask(h, 646);
    int unknown = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < 646; ++x) {
        band(y, x) = r.masks[s](y, x) ? 0 : 1;
        unknown += band(y, x);
        if (r.masks[s](y, x)) {
          for (int c = 0; c < 3; ++c) ASSERT_EQ(r.frames[s](y, x, c), clip[s](y, x - pad, c));
        }
      }
    EXPECT_EQ(unknown, 2 * pad * h);
    EXPECT_GE(fmtest::psnr(r.frames[s], truth[s], band), 30.0);
    EXPECT_EQ(r.depths[s](3, 0), depths[s](3, pad - 1));
    EXPECT_EQ(r.depths[s](3, 645), depths[s](3, w - pad));
  }
}

TEST(Pipeline, RunIsDeterministicAndVerifies) {
  PipelineConfig cfg = small_config();
  const auto input = synth_input("pipe_det_in", cfg);
  const auto a = fmtest::scratch_dir("pipe_det_a");
  const auto b = fmtest::scratch_dir("pipe_det_b");
  const RunReport ra = run_pipeline(cfg, input, a);
  cfg.threads = 3;
  run_pipeline(cfg, input, b);
  EXPECT_TRUE(same_files(a, b));
  EXPECT_EQ(ra.known_fidelity_max_abs, 0);
  EXPECT_TRUE(ra.reference_column_exact);
  EXPECT_EQ(ra.frames, 3);
  EXPECT_EQ(ra.views, 3);
  for (const auto& c : verify_output(a)) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  EXPECT_TRUE(fs::exists(a / "run_report.json"));
  EXPECT_TRUE(fs::exists(a / "side_by_side/t002.png"));

  cfg.seed = 6;
  cfg.oracle = OracleKind::kSmoothing;
  const auto c = fmtest::scratch_dir("pipe_det_c");
  run_pipeline(cfg, input, c);
  EXPECT_FALSE(same_files(a, c));
}

TEST(Pipeline, SpatialModeExportsDataset) {
  PipelineConfig cfg = small_config();
  cfg.mode = RigMode::kSpatial;
  cfg.spatial_views = 4;
  const auto input = synth_input("pipe_spatial_in", cfg, 48, 32, 2);
  const auto out = fmtest::scratch_dir("pipe_spatial_out");
  run_pipeline(cfg, input, out);
  const SpatialDataset ds = import_spatial(out / "spatial");
  EXPECT_EQ(ds.views, 4);
  EXPECT_EQ(ds.times, 2);
  for (const auto& c : verify_output(out)) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}

TEST(Pipeline, EchoEndpointMatchesNullOracle) {
  PipelineConfig cfg = small_config();
  const auto input = synth_input("pipe_echo_in", cfg, 48, 32, 2);
  bridge::EchoServer server(bridge::EchoMode::kZero);
  cfg.oracle = OracleKind::kBridge;
  cfg.bridge_address = server.address();
  const auto via_bridge = fmtest::scratch_dir("pipe_echo_bridge");
  run_pipeline(cfg, input, via_bridge);
  cfg.oracle = OracleKind::kNull;
  const auto local = fmtest::scratch_dir("pipe_echo_null");
  run_pipeline(cfg, input, local);
  EXPECT_TRUE(same_files(via_bridge, local));
}

TEST(Pipeline, MissingFlowNamesThePath) {
  PipelineConfig cfg = small_config();
  const auto input = synth_input("pipe_noflow", cfg, 48, 32, 3);
  fs::remove(input / input_flow_path("fwd", 1, 'u'));
  try {
    run_pipeline(cfg, input, fmtest::scratch_dir("pipe_noflow_out"));
    FAIL() << "no error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "ingest");
    EXPECT_NE(std::string(e.what()).find("fwd_t001_u.pfm"), std::string::npos) << e.what();
  }
  cfg.smooth_depth = false;
  EXPECT_NO_THROW(run_pipeline(cfg, input, fmtest::scratch_dir("pipe_noflow_out2")));
}

TEST(Pipeline, StageErrorsNameTheStage) {
  PipelineConfig cfg = small_config();
  const auto input = synth_input("pipe_stage", cfg, 48, 32, 2);
  fs::remove_all(input / "gt");
  try {
    run_pipeline(cfg, input, fmtest::scratch_dir("pipe_stage_out"));
    FAIL() << "no error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "denoise");
    EXPECT_NE(std::string(e.what()).find("gt"), std::string::npos) << e.what();
  }
  cfg.oracle = OracleKind::kBridge;
  std::string closed;
  {
    bridge::EchoServer server;
    closed = server.address();
  }
  cfg.bridge_address = closed;
  cfg.bridge_timeout_ms = 500;
  try {
    run_pipeline(cfg, input, fmtest::scratch_dir("pipe_stage_out2"));
    FAIL() << "no error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "denoise");
  }
}

TEST(Pipeline, OutpaintRunWidensWorkingCanvas) {
  PipelineConfig cfg = small_config();
  cfg.outpaint = true;
  const auto input = synth_input("pipe_outpaint", cfg, 64, 32, 2);
  const auto out = fmtest::scratch_dir("pipe_outpaint_out");
  const RunReport r = run_pipeline(cfg, input, out);
  EXPECT_EQ(r.padding, outpaint_padding(2000.0 / 7.0, 0.07, 1.0));
  EXPECT_TRUE(fs::exists(input / "gt" / gt_padded_path(1)));
  for (const auto& c : verify_output(out)) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}
