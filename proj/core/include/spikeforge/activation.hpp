// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "spikeforge/tensor.hpp"

namespace spikeforge {

enum class ActivationFamily { relu, clipped_relu, quantized_relu };

std::string_view to_string(ActivationFamily family);
ActivationFamily parse_activation_family(std::string_view name);

/// ANN activation. theta is the clip level (clipped and quantized families),
/// levels and shift only apply to the quantized clip-floor-shift family:
///   q(x) = theta * clip(floor(x * levels / theta + shift) / levels, 0, 1)
struct ActivationSpec {
  ActivationFamily family = ActivationFamily::relu;
  double theta = 1.0;
  int levels = 1;
  double shift = 0.5;

  static ActivationSpec relu() { return {}; }
  static ActivationSpec clipped(double theta) { return {ActivationFamily::clipped_relu, theta, 1, 0.5}; }
  static ActivationSpec quantized(double theta, int levels, double shift = 0.5) {
    return {ActivationFamily::quantized_relu, theta, levels, shift};
  }

  /// Throws std::invalid_argument on theta <= 0, levels < 1 or shift outside [0, 1].
  void validate() const;

  bool operator==(const ActivationSpec&) const = default;
};

double apply_activation(const ActivationSpec& spec, double x);
Tensor eval_activation(const ActivationSpec& spec, const Tensor& x);

}  // namespace spikeforge
