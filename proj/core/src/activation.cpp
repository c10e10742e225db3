// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spikeforge/activation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spikeforge/error.hpp"

namespace spikeforge {

std::string_view to_string(ActivationFamily family) {
  switch (family) {
    case ActivationFamily::relu: return "relu";
    case ActivationFamily::clipped_relu: return "clipped-relu";
    case ActivationFamily::quantized_relu: return "quantized-relu";
  }
  return "unknown";
}

ActivationFamily parse_activation_family(std::string_view name) {
  if (name == "relu") return ActivationFamily::relu;
  if (name == "clipped-relu") return ActivationFamily::clipped_relu;
  if (name == "quantized-relu") return ActivationFamily::quantized_relu;
  throw std::invalid_argument("unknown activation family '" + std::string(name) + "'");
}

void ActivationSpec::validate() const {
  if (family == ActivationFamily::relu) return;
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw std::invalid_argument(std::string(to_string(family)) + " needs a finite theta > 0");
  if (family == ActivationFamily::quantized_relu) {
    if (levels < 1) throw std::invalid_argument("quantized-relu needs levels >= 1");
    if (!(shift >= 0.0 && shift <= 1.0)) throw std::invalid_argument("quantized-relu shift must lie in [0, 1]");
  }
}

double apply_activation(const ActivationSpec& spec, double x) {
  switch (spec.family) {
    case ActivationFamily::relu:
      return x > 0.0 ? x : 0.0;
    case ActivationFamily::clipped_relu:
      return std::clamp(x, 0.0, spec.theta);
    case ActivationFamily::quantized_relu: {
      const double levels = static_cast<double>(spec.levels);
      const double q = std::floor(x * levels / spec.theta + spec.shift) / levels;
      return spec.theta * std::clamp(q, 0.0, 1.0);
    }
  }
  return x;
}

Tensor eval_activation(const ActivationSpec& spec, const Tensor& x) {
  spec.validate();
  require_finite(x, "activation input");
  Tensor out = x;
  for (auto& v : out.data()) v = apply_activation(spec, v);
  return out;
}

}  // namespace spikeforge
