// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace fmstereo {

/// Which random stream a draw belongs to. Streams never share keys.
enum class NoiseStream : std::uint32_t {
  kInit = 1,       // z_T ~ N(0, I)
  kKnown = 2,      // eps for re-noising the known latents
  kPosterior = 3,  // xi for the posterior variance term
  kResample = 4,   // xi for re-adding one noise step
  kAux = 5,        // anything else (tests, synthetic scenes)
};

/// Identifies one latent cell's draw. Keys are built from the cell position
/// and step counters only, so results do not depend on how the work is
/// scheduled across threads or on which direction a pass runs in.
struct NoiseKey {
  std::uint64_t seed = 0;
  NoiseStream stream = NoiseStream::kAux;
  std::int32_t t = 0;
  std::int32_t n = 0;
  std::int32_t s = 0;
  std::int32_t v = 0;
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix(std::uint64_t h, std::uint64_t v) noexcept {
  return splitmix64(h ^ splitmix64(v + 0x632be59bd9b4e019ULL));
}

// (0, 1], never zero so log() is finite.
inline double to_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 1.0) * (1.0 / 9007199254740992.0);
}

}  // namespace detail

constexpr std::uint64_t key_hash(const NoiseKey& k) noexcept {
  std::uint64_t h = detail::splitmix64(k.seed);
  h = detail::mix(h, static_cast<std::uint64_t>(k.stream));
  h = detail::mix(h, static_cast<std::uint32_t>(k.t));
  h = detail::mix(h, static_cast<std::uint32_t>(k.n));
  h = detail::mix(h, static_cast<std::uint32_t>(k.s));
  h = detail::mix(h, static_cast<std::uint32_t>(k.v));
  return h;
}

/// Counter-based standard normal draws: element i of the stream is a pure
/// function of (key, i). Box-Muller over consecutive counter pairs.
inline void fill_standard_normal(const NoiseKey& key, std::span<double> out) {
  const std::uint64_t h = key_hash(key);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; i += 2) {
    const std::uint64_t pair = i / 2;
    const double u1 = detail::to_unit(detail::splitmix64(h ^ (2 * pair)));
    const double u2 = detail::to_unit(detail::splitmix64(h ^ (2 * pair + 1)));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    out[i] = r * std::cos(a);
    if (i + 1 < n) out[i + 1] = r * std::sin(a);
  }
}

/// Uniform [0, 1) draws from the same counter scheme.
inline void fill_uniform(const NoiseKey& key, std::span<double> out) {
  const std::uint64_t h = key_hash(key);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<double>(detail::splitmix64(h ^ i) >> 11) * (1.0 / 9007199254740992.0);
  }
}

}  // namespace fmstereo
