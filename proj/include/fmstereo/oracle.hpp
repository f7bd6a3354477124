// SPDX-License-Identifier: Apache-2.0
#pragma once

// Plug-in interfaces standing in for the neural components: the latent
// denoiser and the image <-> latent codec, plus the built-in implementations
// used for verification.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fmstereo/diffusion.hpp"
#include "fmstereo/error.hpp"
#include "fmstereo/raster.hpp"

namespace fmstereo {

enum class Direction : std::uint8_t { kTemporal = 0, kSpatial = 1 };

inline const char* to_string(Direction d) { return d == Direction::kTemporal ? "temporal" : "spatial"; }

/// One sequence handed to a denoiser. `line` is the column index for temporal
/// sequences and the row index for spatial ones; frame k of a temporal
/// sequence is row k, frame k of a spatial sequence is column k.
struct DenoiseRequest {
  std::span<const LatentFrame> frames;
  int t = 1;
  Direction direction = Direction::kTemporal;
  std::uint32_t condition = 0;
  int line = 0;
};

/// Must return one output per input frame with matching shapes, be
/// deterministic, and tolerate concurrent calls on distinct sequences.
class DenoiserOracle {
 public:
  virtual ~DenoiserOracle() = default;
  virtual std::vector<DenoiserOutput> denoise(const DenoiseRequest& request) = 0;
};

/// Checks the shape half of the oracle contract.
inline void check_oracle_output(const DenoiseRequest& req, const std::vector<DenoiserOutput>& out) {
  if (out.size() != req.frames.size()) {
    throw OracleContractError("denoiser returned " + std::to_string(out.size()) +
                              " frames, expected " + std::to_string(req.frames.size()));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i].epsilon.same_shape(req.frames[i]) || !out[i].variance.same_shape(req.frames[i])) {
      throw OracleContractError("denoiser output shape mismatch at frame " + std::to_string(i));
    }
  }
}

/// Knows the clean latent grid and returns the algebraically exact noise
/// eps = (z_t - sqrt(abar_t) z0*) / sqrt(1 - abar_t) with zero variance.
class ExactOracle final : public DenoiserOracle {
 public:
  /// `cells` is row-major over (rows x cols).
  ExactOracle(std::vector<LatentFrame> cells, int rows, int cols, NoiseSchedule sched)
      : cells_(std::move(cells)), rows_(rows), cols_(cols), sched_(std::move(sched)) {
    if (rows < 1 || cols < 1 || static_cast<int>(cells_.size()) != rows * cols) {
      throw ShapeError("exact oracle: cell count does not match the grid layout");
    }
  }

  const LatentFrame& target(int s, int v) const { return cells_[s * cols_ + v]; }

  std::vector<DenoiserOutput> denoise(const DenoiseRequest& req) override {
    const double ab = sched_.alpha_bar(req.t);
    const double a = std::sqrt(ab);
    const double inv_b = 1.0 / std::sqrt(1.0 - ab);
    std::vector<DenoiserOutput> out;
    out.reserve(req.frames.size());
    for (std::size_t k = 0; k < req.frames.size(); ++k) {
      const int s = req.direction == Direction::kTemporal ? static_cast<int>(k) : req.line;
      const int v = req.direction == Direction::kTemporal ? req.line : static_cast<int>(k);
      if (s < 0 || s >= rows_ || v < 0 || v >= cols_) {
        throw ShapeError("exact oracle: request addresses cell (" + std::to_string(s) + "," +
                         std::to_string(v) + ") outside the grid");
      }
      const LatentFrame& z0 = target(s, v);
      const LatentFrame& zt = req.frames[k];
      require_same_shape(zt, z0, "exact oracle");
      DenoiserOutput o{LatentFrame(zt.height(), zt.width(), zt.channels()),
                       LatentFrame(zt.height(), zt.width(), zt.channels())};
      auto e = o.epsilon.span();
      auto zs = zt.span();
      auto gs = z0.span();
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = (zs[i] - a * gs[i]) * inv_b;
      out.push_back(std::move(o));
    }
    return out;
  }

 private:
  std::vector<LatentFrame> cells_;
  int rows_;
  int cols_;
  NoiseSchedule sched_;
};

/// Treats the 3x3 local spatial mean of z_t as the (scaled) clean latent:
/// eps = (z_t - mean3x3(z_t)) / sqrt(1 - abar_t), zero variance. Carries no
/// ground truth; it only exercises non-exact code paths. Per-frame, so its
/// output does not depend on how frames are grouped into sequences.
class SmoothingOracle final : public DenoiserOracle {
 public:
  explicit SmoothingOracle(NoiseSchedule sched) : sched_(std::move(sched)) {}

  std::vector<DenoiserOutput> denoise(const DenoiseRequest& req) override {
    const double inv_b = 1.0 / std::sqrt(1.0 - sched_.alpha_bar(req.t));
    std::vector<DenoiserOutput> out;
    out.reserve(req.frames.size());
    for (const LatentFrame& z : req.frames) {
      DenoiserOutput o{LatentFrame(z.height(), z.width(), z.channels()),
                       LatentFrame(z.height(), z.width(), z.channels())};
      for (int y = 0; y < z.height(); ++y)
        for (int x = 0; x < z.width(); ++x)
          for (int c = 0; c < z.channels(); ++c) {
            double sum = 0.0;
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx)
                if (z.contains(y + dy, x + dx)) {
                  sum += z(y + dy, x + dx, c);
                  ++n;
                }
            o.epsilon(y, x, c) = (z(y, x, c) - sum / n) * inv_b;
          }
      out.push_back(std::move(o));
    }
    return out;
  }

 private:
  NoiseSchedule sched_;
};

/// eps = 0, variance = 0.
class NullOracle final : public DenoiserOracle {
 public:
  std::vector<DenoiserOutput> denoise(const DenoiseRequest& req) override {
    std::vector<DenoiserOutput> out;
    for (const auto& z : req.frames) {
      out.push_back({LatentFrame(z.height(), z.width(), z.channels()),
                     LatentFrame(z.height(), z.width(), z.channels())});
    }
    return out;
  }
};

/// Image <-> latent mapping with a fixed downsample factor.
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;
  virtual int factor() const = 0;
  virtual int latent_channels() const = 0;
  /// Published bound on |decode(encode(x)) - x| for inputs the codec
  /// represents exactly (block-constant images for the box codec).
  virtual double reconstruction_error() const = 0;
  virtual LatentFrame encode(const Image& image) const = 0;
  virtual Image decode(const LatentFrame& latent) const = 0;
};

/// f x f per-channel block mean; decode is nearest-neighbour upsampling. A
/// latent cell straddling a disocclusion boundary averages in the zeros of
/// the hole.
class BoxCodec final : public LatentCodec {
 public:
  explicit BoxCodec(int factor = 8) : factor_(factor) {
    if (factor < 1) throw ConfigError("box codec factor must be >= 1");
  }

  int factor() const override { return factor_; }
  int latent_channels() const override { return 3; }
  double reconstruction_error() const override { return 1e-6; }

  LatentFrame encode(const Image& image) const override {
    if (image.height() % factor_ != 0 || image.width() % factor_ != 0) {
      throw ShapeError("box codec: " + std::to_string(image.height()) + "x" +
                       std::to_string(image.width()) + " is not divisible by " +
                       std::to_string(factor_));
    }
    const int h = image.height() / factor_;
    const int w = image.width() / factor_;
    const int ch = image.channels();
    LatentFrame z(h, w, ch);
    const double inv = 1.0 / (factor_ * factor_);
    for (int y = 0; y < image.height(); ++y)
      for (int x = 0; x < image.width(); ++x)
        for (int c = 0; c < ch; ++c) z(y / factor_, x / factor_, c) += image(y, x, c);
    for (double& v : z.values()) v *= inv;
    return z;
  }

  Image decode(const LatentFrame& latent) const override {
    Image img(latent.height() * factor_, latent.width() * factor_, latent.channels());
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        for (int c = 0; c < img.channels(); ++c)
          img(y, x, c) = static_cast<float>(latent(y / factor_, x / factor_, c));
    return img;
  }

 private:
  int factor_;
};

}  // namespace fmstereo
