// SPDX-License-Identifier: Apache-2.0
#pragma once

// DDPM schedule and the per-step equations used by denoising inpainting:
// forward noising of known latents, the posterior step for unknown latents,
// the clean-latent prediction, and the one-step noise re-add for resampling.

#include <cmath>
#include <string>
#include <vector>

#include "fmstereo/error.hpp"
#include "fmstereo/raster.hpp"

namespace fmstereo {

/// h x w x C latent.
using LatentFrame = Raster<double>;

/// Linear-beta DDPM schedule. Timesteps are 1-indexed: beta(1) is the
/// variance of the first forward transition and alpha_bar(0) = 1.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  explicit NoiseSchedule(std::vector<double> betas) : beta_(std::move(betas)) {
    if (beta_.empty()) throw ConfigError("noise schedule needs T >= 1");
    alpha_bar_.resize(beta_.size());
    double prod = 1.0;
    for (std::size_t i = 0; i < beta_.size(); ++i) {
      if (!(beta_[i] > 0.0 && beta_[i] < 1.0)) throw ConfigError("beta values must lie in (0, 1)");
      prod *= 1.0 - beta_[i];
      alpha_bar_[i] = prod;
    }
  }

  int steps() const noexcept { return static_cast<int>(beta_.size()); }

  double beta(int t) const {
    check(t, 1);
    return beta_[t - 1];
  }
  double alpha_bar(int t) const {
    check(t, 0);
    return t == 0 ? 1.0 : alpha_bar_[t - 1];
  }
  const std::vector<double>& betas() const noexcept { return beta_; }
  const std::vector<double>& alpha_bars() const noexcept { return alpha_bar_; }

 private:
  void check(int t, int lowest) const {
    if (t < lowest || t > steps()) {
      throw DomainError("timestep " + std::to_string(t) + " outside [" + std::to_string(lowest) +
                        ", " + std::to_string(steps()) + "]");
    }
  }

  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

inline NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw ConfigError("schedule needs T >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw ConfigError("schedule needs 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(steps);
  for (int i = 0; i < steps; ++i) {
    betas[i] = steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * i / (steps - 1);
  }
  return NoiseSchedule(std::move(betas));
}

/// Noise prediction and per-element posterior variance for one frame.
struct DenoiserOutput {
  LatentFrame epsilon;
  LatentFrame variance;
};

/// sqrt(abar_t) * z0 + sqrt(1 - abar_t) * eps.
inline LatentFrame forward_noise(const LatentFrame& z0, int t, const LatentFrame& eps,
                                 const NoiseSchedule& sched) {
  require_same_shape(z0, eps, "forward_noise");
  const double ab = sched.alpha_bar(t);
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  LatentFrame out = z0;
  auto o = out.span();
  auto e = eps.span();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * o[i] + b * e[i];
  return out;
}

/// Posterior sample z_{t-1} = mean + sqrt(variance) * xi with
/// mean = (z_t - beta_t / sqrt(1 - abar_t) * eps) / sqrt(1 - beta_t).
/// The noise term is dropped at t = 1; `xi` may be empty when every variance
/// is zero.
inline LatentFrame posterior_step(const LatentFrame& zt, const DenoiserOutput& out, int t,
                                  const NoiseSchedule& sched, const LatentFrame& xi) {
  if (t < 1) throw DomainError("posterior_step requires t >= 1");
  require_same_shape(zt, out.epsilon, "posterior_step epsilon");
  require_same_shape(zt, out.variance, "posterior_step variance");
  const double beta = sched.beta(t);
  const double ab = sched.alpha_bar(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
  const double eps_coef = beta / std::sqrt(1.0 - ab);
  auto vs = out.variance.span();
  bool any_variance = false;
  for (double v : vs) {
    if (v < 0.0 || std::isnan(v)) throw OracleContractError("denoiser returned a negative variance");
    any_variance = any_variance || v > 0.0;
  }
  const bool noisy = t > 1 && any_variance;
  if (noisy) require_same_shape(zt, xi, "posterior_step xi");
  LatentFrame z = zt;
  auto zs = z.span();
  auto es = out.epsilon.span();
  for (std::size_t i = 0; i < zs.size(); ++i) {
    zs[i] = inv_sqrt_alpha * (zs[i] - eps_coef * es[i]);
    if (noisy && vs[i] > 0.0) zs[i] += std::sqrt(vs[i]) * xi.span()[i];
  }
  return z;
}

/// Clean-latent estimate (z_t - sqrt(1 - abar_t) * eps) / sqrt(abar_t).
inline LatentFrame predict_z0(const LatentFrame& zt, const DenoiserOutput& out, int t,
                              const NoiseSchedule& sched) {
  if (t < 1) throw DomainError("predict_z0 requires t >= 1");
  require_same_shape(zt, out.epsilon, "predict_z0");
  const double ab = sched.alpha_bar(t);
  const double a = 1.0 / std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  LatentFrame z = zt;
  auto zs = z.span();
  auto es = out.epsilon.span();
  for (std::size_t i = 0; i < zs.size(); ++i) zs[i] = a * (zs[i] - b * es[i]);
  return z;
}

/// Re-adds one forward step of noise, returning a latent at level t:
/// sqrt(1 - beta_t) * z_{t-1} + sqrt(beta_t) * xi.
inline LatentFrame resample_noise(const LatentFrame& z_prev, int t, const NoiseSchedule& sched,
                                  const LatentFrame& xi) {
  if (t < 1) throw DomainError("resample_noise requires t >= 1");
  require_same_shape(z_prev, xi, "resample_noise");
  const double beta = sched.beta(t);
  const double a = std::sqrt(1.0 - beta);
  const double b = std::sqrt(beta);
  LatentFrame z = z_prev;
  auto zs = z.span();
  auto xs = xi.span();
  for (std::size_t i = 0; i < zs.size(); ++i) zs[i] = a * zs[i] + b * xs[i];
  return z;
}

/// Outer-step layout: `outer_steps` visits of timesteps 1 + k * jump in
/// descending order, `coarse_resamples` passes per step while the step number
/// (counted down from outer_steps) is above `phase_boundary`, then
/// `refine_resamples`. During refinement only `refine_views` columns are
/// denoised; an empty list means every column.
struct SamplingPlan {
  int outer_steps = 50;
  int jump = 20;
  int coarse_resamples = 8;
  int refine_resamples = 4;
  int phase_boundary = 25;
  std::vector<int> refine_views;

  void validate(const NoiseSchedule& sched) const {
    if (outer_steps < 1 || jump < 1) throw ConfigError("plan needs outer_steps >= 1 and jump >= 1");
    if (static_cast<long>(outer_steps) * jump > sched.steps()) {
      throw ConfigError("plan covers " + std::to_string(outer_steps * jump) +
                        " timesteps but the schedule has " + std::to_string(sched.steps()));
    }
    if (coarse_resamples < 1 || refine_resamples < 1) throw ConfigError("resample counts must be >= 1");
    if (phase_boundary < 0 || phase_boundary > outer_steps) {
      throw ConfigError("phase boundary must lie in [0, outer_steps]");
    }
  }

  /// Timestep visited by outer step k (k = 0 is the noisiest).
  int timestep(int k) const { return 1 + (outer_steps - 1 - k) * jump; }
  int step_number(int k) const { return outer_steps - k; }
  bool refining(int k) const { return step_number(k) <= phase_boundary; }
  int resamples(int k) const { return refining(k) ? refine_resamples : coarse_resamples; }
};

}  // namespace fmstereo
