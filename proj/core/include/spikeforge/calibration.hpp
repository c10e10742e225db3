// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "spikeforge/dataset.hpp"
#include "spikeforge/model.hpp"
#include "spikeforge/rng.hpp"
#include "spikeforge/threshold_plan.hpp"

namespace spikeforge {

struct StatsOptions {
  std::size_t cap = 1'000'000;      // exact samples kept per channel
  std::size_t reservoir = 100'000;  // reservoir size once the cap is exceeded
  std::uint64_t seed = 0;           // reservoir sampling stream
  unsigned threads = 1;
};

// Positive activation values of one channel. Exact up to the cap, then an
// exact max plus a uniform reservoir; percentiles past the cap are estimates.
class ValueStore {
 public:
  ValueStore() = default;
  ValueStore(std::size_t cap, std::size_t reservoir, std::uint64_t seed);

  void add(double value);

  bool empty() const { return positive_seen_ == 0; }
  bool exact() const { return exact_; }
  std::size_t positive_seen() const { return positive_seen_; }
  std::size_t zero_or_negative_seen() const { return nonpositive_seen_; }
  double max() const { return max_; }
  const std::vector<double>& kept() const { return values_; }

  /// Nearest-rank percentile over the kept positive values, p in (0, 100].
  double percentile(double p) const;

 private:
  std::size_t cap_ = 1'000'000;
  std::size_t reservoir_ = 100'000;
  SplitMix64 gen_{0};
  std::vector<double> values_;
  std::size_t positive_seen_ = 0;
  std::size_t nonpositive_seen_ = 0;
  double max_ = 0.0;
  bool exact_ = true;
};

/// Nearest-rank percentile of `values` (unsorted): sorted ascending, element
/// ceil(p/100 * n) in 1-based indexing. Throws CalibrationError on empty
/// input or p outside (0, 100].
double nearest_rank_percentile(std::vector<double> values, double p);

struct LayerActivationStats {
  std::size_t layer = 0;  // activation layer index in the model
  Shape shape;
  std::vector<ValueStore> channels;

  double max() const;
  double percentile(double p) const;
  bool empty() const;
};

struct ActivationStats {
  std::size_t samples = 0;
  std::vector<LayerActivationStats> layers;
  ValueStore head;  // positive logits, used for a spiking classifier head
};

/// Number of channels of a spiking layer: axis 0 of its output.
std::size_t channel_count(const Shape& shape);

/// Runs the ANN over the first n_samples of data and records post-activation
/// values of every activation layer. Throws CalibrationError if n_samples is 0
/// or the dataset is empty.
ActivationStats collect_activation_stats(const ModelGraph& model, const Dataset& data, std::size_t n_samples,
                                         const StatsOptions& options = {});

/// Throws CalibrationError for p outside (0, 100] or a layer with no positive
/// activation. Channels without positive activations inherit the layer theta.
ThresholdPlan fit_thresholds(const ActivationStats& stats, const ThresholdSource& source, Granularity granularity);

enum class AbsorbMode {
  absorbed,   // thresholds folded into downstream weights; spikes are {0,1}
  reference,  // weights untouched; spikes carry theta
};

struct ConvertedModel {
  ModelGraph base;
  ThresholdPlan plan;
  bool absorbed = false;
};

/// Scales the input slice of the first linear/conv layer after each
/// activation by that activation's theta (per channel for channelwise plans).
/// Throws CalibrationError if the plan misses an activation layer and
/// StructureError if batchnorm is still present or no weight layer follows.
ConvertedModel absorb_thresholds(const ModelGraph& model, const ThresholdPlan& plan,
                                 AbsorbMode mode = AbsorbMode::absorbed);

}  // namespace spikeforge
