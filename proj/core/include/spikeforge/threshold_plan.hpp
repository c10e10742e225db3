// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spikeforge {

enum class Granularity { layer, channel };

std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view text);

struct ThresholdSource {
  enum class Kind { max, percentile };
  Kind kind = Kind::max;
  double percentile = 100.0;

  static ThresholdSource max() { return {}; }
  static ThresholdSource pct(double p) { return {Kind::percentile, p}; }

  /// "max" or "pct:P".
  std::string to_string() const;
  static ThresholdSource parse(std::string_view text);

  bool operator==(const ThresholdSource&) const = default;
};

/// Thresholds of one spiking layer, keyed by the index of the activation
/// layer in the model. theta has one entry (layer) or one per channel.
struct LayerThreshold {
  std::size_t layer = 0;
  std::vector<double> theta;
  bool operator==(const LayerThreshold&) const = default;
};

struct ThresholdPlan {
  ThresholdSource source;
  Granularity granularity = Granularity::layer;
  std::vector<LayerThreshold> layers;
  /// Threshold for an optional spiking classifier head.
  std::optional<double> head_theta;

  const LayerThreshold* find(std::size_t layer) const;

  /// Throws CalibrationError if any theta is not a finite positive number.
  void validate() const;

  bool operator==(const ThresholdPlan&) const = default;
};

}  // namespace spikeforge
