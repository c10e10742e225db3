// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "spikeforge/calibration.hpp"
#include "spikeforge/dataset.hpp"
#include "spikeforge/snn.hpp"

namespace spikeforge {

struct SweepConfig {
  std::vector<NeuronVariant> modes{NeuronVariant::baseline_if};
  std::vector<int> T_values{8};
  std::vector<std::uint64_t> seeds{1};
  std::size_t limit = 0;  // evaluate the first `limit` samples; 0 = all
  unsigned threads = 1;
  double initial_potential = 0.0;
  ShuffleScope shuffle_scope = ShuffleScope::shared_permutation;
  InputEncoding encoding = InputEncoding::constant;
  HeadMode head = HeadMode::accumulate;

  /// Throws std::invalid_argument on empty lists or T < 1.
  void validate() const;
};

struct LayerSpikeCounts {
  std::size_t layer = 0;        // activation layer index in the model
  std::size_t neurons = 0;
  std::vector<double> per_step; // mean spikes per sample at each step
  double total = 0.0;           // mean spikes per sample over all steps
};

struct SpikeReport {
  int T = 0;
  std::size_t samples = 0;
  std::vector<LayerSpikeCounts> layers;
  double total() const;
};

/// Averages per-step spike counts over traces of equal T and layer layout.
SpikeReport count_spikes(const std::vector<SimTrace>& traces);

/// (ours - baseline) / baseline * 100. Empty when baseline is 0 and ours is not.
std::optional<double> percentage_difference(double ours, double baseline);

struct SpikeDifference {
  std::optional<std::size_t> layer;  // empty: whole network
  double ours = 0.0;
  double baseline = 0.0;
  std::optional<double> percent;
};

/// Per-layer totals plus a whole-network row. Reports must share the layer layout.
std::vector<SpikeDifference> compare_spikes(const SpikeReport& ours, const SpikeReport& baseline);

/// One (mode, T, seed) evaluation.
struct SweepCell {
  NeuronVariant mode = NeuronVariant::baseline_if;
  int T = 0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t correct = 0;
  std::vector<std::size_t> anytime_correct;  // correct after t = 1..T readout steps
  SpikeReport spikes;

  double accuracy() const;
};

/// Cells in (mode, T, seed) order. Deterministic and independent of threads.
/// A baseline run with constant input draws no random numbers, so it is
/// evaluated once per T and shared by all seeds.
std::vector<SweepCell> run_sweep(const SweepConfig& config, const ConvertedModel& model, const Dataset& data);

struct AccuracyRow {
  NeuronVariant mode = NeuronVariant::baseline_if;
  int T = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double mean = 0.0;  // over seeds of the same (mode, T)
  double std = 0.0;   // sample standard deviation; 0 for a single seed
};

struct AnytimeRow {
  NeuronVariant mode = NeuronVariant::baseline_if;
  int T = 0;
  int t = 0;
  std::size_t seeds = 0;
  double mean = 0.0;
  double std = 0.0;
};

std::vector<AccuracyRow> accuracy_rows(const std::vector<SweepCell>& cells);
std::vector<AnytimeRow> anytime_rows(const std::vector<SweepCell>& cells);

std::vector<AccuracyRow> sweep_accuracy(const SweepConfig& config, const ConvertedModel& model, const Dataset& data);
std::vector<AnytimeRow> sweep_anytime_accuracy(const SweepConfig& config, const ConvertedModel& model,
                                               const Dataset& data);

/// Sample mean and standard deviation (n - 1 denominator, 0 when n < 2).
std::pair<double, double> mean_std(const std::vector<double>& values);

void write_accuracy_csv(std::ostream& out, const std::vector<AccuracyRow>& rows);
void write_anytime_csv(std::ostream& out, const std::vector<AnytimeRow>& rows);

struct Histogram {
  std::size_t layer = 0;  // activation layer index in the model
  int t = 0;
  std::optional<std::size_t> channel;
  double theta = 0.0;
  std::vector<double> edges;  // bins + 1 fixed-width edges over [min, max]
  std::vector<std::uint64_t> counts;
  double mean = 0.0;
  double variance = 0.0;  // population variance of the binned values
  std::uint64_t total() const;
};

/// Bins the pre-fire potentials of trace layer `layer_index` at step t over
/// all traces (TraceLevel::full). A degenerate range becomes [v - 0.5, v + 0.5];
/// the last bin is closed.
Histogram histogram_membrane(const std::vector<SimTrace>& traces, std::size_t layer_index, int t, std::size_t bins,
                             std::optional<std::size_t> channel = std::nullopt);

void write_histogram_csv(std::ostream& out, const Histogram& h);

}  // namespace spikeforge
