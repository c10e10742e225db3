// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spikeforge/rng.hpp"

#include <cmath>
#include <numbers>

namespace spikeforge {

double standard_normal(SplitMix64& gen) {
  const double u1 = 1.0 - unit_interval(gen());  // (0, 1]
  const double u2 = unit_interval(gen());
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace spikeforge
