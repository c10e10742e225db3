// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>

namespace spikeforge {

// Keyed SplitMix64 streams. The derivation below is part of the trace format:
// a port that follows it reproduces every Bernoulli draw bit for bit.
//
//   mix64(z)        = SplitMix64 output finalizer
//   derive(h, c)    = mix64((h ^ c) + GAMMA)
//   stream(key)     = derive(derive(derive(run_seed, sample), layer), step)
//   draw(key, n)    = mix64(stream(key) + (n + 1) * GAMMA)
//   unit(d)         = (d >> 11) * 2^-53          in [0, 1)
//   bernoulli(p, d) = unit(d) < p
//
// draw(key, n) equals the (n+1)-th output of SplitMix64 seeded with stream(key).

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive(std::uint64_t h, std::uint64_t component) noexcept {
  return mix64((h ^ component) + kGoldenGamma);
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr result_type operator()() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

 private:
  std::uint64_t state_;
};

/// Identifies one independent random stream. Step 0 is reserved for
/// per-layer operations that are not tied to a time step (shuffling).
struct RngKey {
  std::uint64_t run_seed = 0;
  std::uint64_t sample = 0;
  std::uint64_t layer = 0;
  std::uint64_t step = 0;

  constexpr RngKey with_layer(std::uint64_t l) const noexcept { return {run_seed, sample, l, step}; }
  constexpr RngKey with_step(std::uint64_t t) const noexcept { return {run_seed, sample, layer, t}; }
};

constexpr std::uint64_t stream_seed(const RngKey& key) noexcept {
  return derive(derive(derive(key.run_seed, key.sample), key.layer), key.step);
}

constexpr std::uint64_t keyed_draw(std::uint64_t stream, std::uint64_t neuron) noexcept {
  return mix64(stream + (neuron + 1) * kGoldenGamma);
}

constexpr double unit_interval(std::uint64_t draw) noexcept {
  return static_cast<double>(draw >> 11) * 0x1.0p-53;
}

constexpr bool bernoulli(double p, std::uint64_t draw) noexcept { return unit_interval(draw) < p; }

/// Multiply-high reduction into [0, n); n must be nonzero.
constexpr std::uint64_t uniform_below(std::uint64_t n, std::uint64_t draw) noexcept {
  // High 64 bits of the 128-bit product draw * n.
  const std::uint64_t a_lo = draw & 0xFFFFFFFFu, a_hi = draw >> 32;
  const std::uint64_t b_lo = n & 0xFFFFFFFFu, b_hi = n >> 32;
  const std::uint64_t lo_lo = a_lo * b_lo, hi_lo = a_hi * b_lo, lo_hi = a_lo * b_hi, hi_hi = a_hi * b_hi;
  const std::uint64_t cross = (lo_lo >> 32) + (hi_lo & 0xFFFFFFFFu) + lo_hi;
  return hi_hi + (hi_lo >> 32) + (cross >> 32);
}

/// Standard normal via Box-Muller on two consecutive outputs of `gen`.
double standard_normal(SplitMix64& gen);

}  // namespace spikeforge
