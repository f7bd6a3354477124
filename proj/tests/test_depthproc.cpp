// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fmstereo/depthproc.hpp"

using namespace fmstereo;

namespace {

FlowField uniform_flow(int h, int w, float u, float v, std::uint8_t valid = 1) {
  FlowField f{Raster<float>(h, w, 2), make_mask(h, w, valid)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.flow(y, x, 0) = u;
      f.flow(y, x, 1) = v;
    }
  return f;
}

DepthClip constant_clip(int frames, int h, int w, float d) {
  DepthClip c;
  c.depths.assign(frames, make_depth(h, w, d));
  return c;
}

// Centre weight of a truncated temporal Gaussian window over offsets
// [lo, hi], sigma 1.
double centre_weight(int lo, int hi) {
  double sum = 0;
  for (int k = lo; k <= hi; ++k) sum += std::exp(-0.5 * k * k);
  return 1.0 / sum;
}

}  // namespace

TEST(NormalizeDepth, AffineOverWholeClip) {
  DepthMap a = make_depth(2, 2, 2.0f), b = make_depth(2, 2, 20.0f);
  a(0, 1) = 11.0f;
  const DepthClip c = normalize_depth({a, b}, 1, 10);
  EXPECT_NEAR(c.depths[0](0, 0), 1.0, 1e-6);
  EXPECT_NEAR(c.depths[0](0, 1), 5.5, 1e-6);
  EXPECT_NEAR(c.depths[1](1, 1), 10.0, 1e-6);
  EXPECT_EQ(c.near, 1.0);
  EXPECT_EQ(c.far, 10.0);
}

TEST(NormalizeDepth, IdentityOnTargetRange) {
  DepthMap a = make_depth(3, 3, 4.25f);
  a(0, 0) = 1.0f;
  a(2, 2) = 10.0f;
  const DepthClip c = normalize_depth({a}, 1, 10);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(c.depths[0].values()[i], a.values()[i], 1e-6);
}

TEST(NormalizeDepth, ConstantMapsToMidpoint) {
  const DepthClip c = normalize_depth({make_depth(2, 3, 5.0f), make_depth(2, 3, 5.0f)}, 1, 10);
  for (const auto& d : c.depths)
    for (float v : d.values()) EXPECT_FLOAT_EQ(v, 5.5f);
}

TEST(NormalizeDepth, Errors) {
  EXPECT_THROW(normalize_depth({}, 1, 10), EmptyInputError);
  EXPECT_ANY_THROW(normalize_depth({make_depth(2, 2, 1.0f)}, 10, 1));
}

TEST(TemporalSmooth, PerturbationShrinksByCentreWeight) {
  const int frames = 7, h = 4, w = 5;
  DepthClip c = constant_clip(frames, h, w, 5.0f);
  c.depths[3](2, 2) += 1.0f;
  const std::vector<FlowField> flows(frames - 1, uniform_flow(h, w, 0, 0));
  const DepthClip out = temporal_smooth(c, flows, {});
  const double w0 = centre_weight(-2, 2);
  EXPECT_NEAR(w0, 0.4026, 5e-5);
  EXPECT_NEAR(out.depths[3](2, 2), 5.0 + w0, 1e-5);
  EXPECT_NEAR(out.depths[3](1, 1), 5.0, 1e-6);
}

TEST(TemporalSmooth, WindowTruncatesAtClipEnds) {
  const int frames = 6, h = 3, w = 3;
  DepthClip c = constant_clip(frames, h, w, 4.0f);
  c.depths[0](1, 1) += 1.0f;
  c.depths[5](1, 1) += 1.0f;
  const std::vector<FlowField> flows(frames - 1, uniform_flow(h, w, 0, 0));
  const DepthClip out = temporal_smooth(c, flows, {});
  EXPECT_NEAR(out.depths[0](1, 1), 4.0 + centre_weight(0, 2), 1e-5);
  EXPECT_NEAR(out.depths[5](1, 1), 4.0 + centre_weight(-2, 0), 1e-5);
  // Frame 1 sees the frame-0 bump at offset -1 and nothing else.
  EXPECT_NEAR(out.depths[1](1, 1), 4.0 + std::exp(-0.5) * centre_weight(-1, 2), 1e-5);
}

TEST(TemporalSmooth, IdenticalFramesUnchangedUnderAnyFlow) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> f(-3, 3);
  const int frames = 5, h = 8, w = 9;
  std::vector<FlowField> flows;
  for (int i = 0; i + 1 < frames; ++i) {
    FlowField fl = uniform_flow(h, w, 0, 0);
    for (auto& v : fl.flow.values()) v = f(rng);
    flows.push_back(fl);
  }
  const DepthClip constant = constant_clip(frames, h, w, 6.5f);
  const DepthClip out = temporal_smooth(constant, flows, {});
  for (const auto& d : out.depths)
    for (float v : d.values()) EXPECT_FLOAT_EQ(v, 6.5f);
}

TEST(TemporalSmooth, FollowsMotionAlongFlow) {
  // A depth ramp translating one pixel right per frame is constant along
  // its trajectories, so chained flow leaves it unchanged.
  const int frames = 5, h = 3, w = 24;
  DepthClip c = constant_clip(frames, h, w, 0);
  for (int s = 0; s < frames; ++s)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) c.depths[s](y, x) = static_cast<float>(2.0 + 0.25 * (x - s));
  c.near = 0.0;
  c.far = 20.0;
  const std::vector<FlowField> flows(frames - 1, uniform_flow(h, w, 1, 0));
  const DepthClip out = temporal_smooth(c, flows, {});
  for (int s = 0; s < frames; ++s)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) EXPECT_NEAR(out.depths[s](y, x), c.depths[s](y, x), 1e-5) << s << "," << x;
}

TEST(TemporalSmooth, InvalidFlowDropsSamples) {
  const int frames = 5, h = 3, w = 3;
  DepthClip c = constant_clip(frames, h, w, 4.0f);
  c.depths[2](1, 1) = 6.0f;
  const std::vector<FlowField> invalid(frames - 1, uniform_flow(h, w, 0, 0, 0));
  const DepthClip out = temporal_smooth(c, invalid, {});
  EXPECT_EQ(out.depths, c.depths);
}

TEST(TemporalSmooth, UsesSuppliedBackwardFlow) {
  const int frames = 5, h = 3, w = 3;
  DepthClip c = constant_clip(frames, h, w, 4.0f);
  c.depths[2](1, 1) = 5.0f;
  const std::vector<FlowField> fwd(frames - 1, uniform_flow(h, w, 0, 0));
  const std::vector<FlowField> bwd_ok(frames - 1, uniform_flow(h, w, 0, 0));
  const std::vector<FlowField> bwd_bad(frames - 1, uniform_flow(h, w, 0, 0, 0));
  EXPECT_EQ(temporal_smooth(c, fwd, {}, &bwd_ok).depths, temporal_smooth(c, fwd, {}).depths);
  const DepthClip one_sided = temporal_smooth(c, fwd, {}, &bwd_bad);
  EXPECT_NEAR(one_sided.depths[2](1, 1), 4.0 + centre_weight(0, 2), 1e-5);
}

TEST(TemporalSmooth, OutputWithinWindowRange) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> d(1, 10), f(-1.5, 1.5);
  const int frames = 6, h = 6, w = 6;
  DepthClip c = constant_clip(frames, h, w, 1);
  for (auto& m : c.depths)
    for (auto& v : m.values()) v = d(rng);
  std::vector<FlowField> flows;
  for (int i = 0; i + 1 < frames; ++i) {
    FlowField fl = uniform_flow(h, w, 0, 0);
    for (auto& v : fl.flow.values()) v = f(rng);
    flows.push_back(fl);
  }
  float lo = 10, hi = 1;
  for (const auto& m : c.depths)
    for (float v : m.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const DepthClip out = temporal_smooth(c, flows, {});
  for (const auto& m : out.depths)
    for (float v : m.values()) {
      EXPECT_GE(v, lo - 1e-5f);
      EXPECT_LE(v, hi + 1e-5f);
    }
}

TEST(TemporalSmooth, ReducesTemporalVariance) {
  std::mt19937_64 rng(8);
  std::normal_distribution<float> noise(0, 0.3f);
  const int frames = 9, h = 40, w = 40;
  DepthClip c = constant_clip(frames, h, w, 5.0f);
  for (auto& m : c.depths)
    for (auto& v : m.values()) v += noise(rng);
  const std::vector<FlowField> flows(frames - 1, uniform_flow(h, w, 0, 0));
  const DepthClip out = temporal_smooth(c, flows, {});
  auto variance = [&](const DepthClip& clip) {
    double total = 0;
    for (int i = 0; i < h * w; ++i) {
      double m = 0, m2 = 0;
      for (const auto& f : clip.depths) {
        m += f.values()[i];
        m2 += f.values()[i] * f.values()[i];
      }
      m /= frames;
      total += m2 / frames - m * m;
    }
    return total / (h * w);
  };
  EXPECT_LT(variance(out), 0.6 * variance(c));
}

TEST(TemporalSmooth, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> d(1, 10);
  DepthClip c = constant_clip(6, 10, 12, 1);
  for (auto& m : c.depths)
    for (auto& v : m.values()) v = d(rng);
  const std::vector<FlowField> flows(5, uniform_flow(10, 12, 0.5f, -0.25f));
  EXPECT_EQ(temporal_smooth(c, flows, {2, 1.0, 1}).depths, temporal_smooth(c, flows, {2, 1.0, 4}).depths);
}

TEST(TemporalSmooth, RejectsBadParameters) {
  const DepthClip c = constant_clip(3, 4, 4, 2);
  const std::vector<FlowField> flows(2, uniform_flow(4, 4, 0, 0));
  EXPECT_THROW(temporal_smooth(c, flows, {0, 1.0, 1}), ConfigError);
  EXPECT_THROW(temporal_smooth(c, flows, {2, 0.0, 1}), ConfigError);
  EXPECT_THROW(temporal_smooth(c, {flows[0]}, {}), ConfigError);
  EXPECT_THROW(temporal_smooth(DepthClip{}, flows, {}), EmptyInputError);
}
