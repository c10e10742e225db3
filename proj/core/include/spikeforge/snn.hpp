// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "spikeforge/calibration.hpp"
#include "spikeforge/rng.hpp"
#include "spikeforge/tensor.hpp"

namespace spikeforge {

enum class NeuronVariant { baseline_if, shuffle, tpp };
enum class ShuffleScope { shared_permutation, per_neuron };
enum class InputEncoding { constant, rate };
enum class HeadMode { accumulate, spiking };
enum class TraceLevel { counts, full };

std::string_view to_string(NeuronVariant v);
NeuronVariant parse_neuron_variant(std::string_view text);
std::string_view to_string(ShuffleScope s);
ShuffleScope parse_shuffle_scope(std::string_view text);
std::string_view to_string(InputEncoding e);
InputEncoding parse_input_encoding(std::string_view text);
std::string_view to_string(HeadMode h);
HeadMode parse_head_mode(std::string_view text);

struct NeuronMode {
  NeuronVariant variant = NeuronVariant::baseline_if;
  ShuffleScope shuffle_scope = ShuffleScope::shared_permutation;
  /// v[0] as a fraction of theta (baseline and shuffle only; TPP starts from
  /// its accumulated potential).
  double initial_potential = 0.0;

  static NeuronMode baseline(double initial = 0.0) { return {NeuronVariant::baseline_if, ShuffleScope::shared_permutation, initial}; }
  static NeuronMode shuffled(ShuffleScope scope = ShuffleScope::shared_permutation, double initial = 0.0) {
    return {NeuronVariant::shuffle, scope, initial};
  }
  static NeuronMode tpp() { return {NeuronVariant::tpp, ShuffleScope::shared_permutation, 0.0}; }
};

struct SimConfig {
  NeuronMode mode;
  int T = 8;
  InputEncoding encoding = InputEncoding::constant;
  HeadMode head = HeadMode::accumulate;
  TraceLevel trace = TraceLevel::counts;
};

/// Record of one spiking layer over a run. Potentials and spike tensors are
/// only filled at TraceLevel::full.
struct LayerTrace {
  std::size_t model_layer = 0;       // activation layer index in the model
  Shape shape;
  std::vector<double> theta;         // per neuron
  std::vector<double> initial;       // v[0] before any input
  std::vector<double> accumulated;   // TPP phase-1 total, empty otherwise
  std::vector<double> residue;       // v[T]
  std::vector<std::uint32_t> spike_counts;  // per neuron, over all T
  std::vector<std::uint32_t> step_counts;   // per step, over all neurons (as emitted)
  std::vector<Tensor> spikes;  // emitted values per step: {0,1} absorbed, {0,theta} reference
  std::vector<Tensor> v_pre;   // potential seen by the fire decision at step t
  std::vector<Tensor> v_post;  // potential after the reset at step t
};

struct SimTrace {
  int T = 0;
  NeuronMode mode;
  bool absorbed = false;
  InputEncoding encoding = InputEncoding::constant;
  Tensor input;                               // the analog sample
  std::vector<std::uint32_t> input_counts;    // rate encoding: per-pixel spike counts
  std::vector<LayerTrace> layers;
  std::vector<Tensor> readout;                // classifier output after the first t steps, t = 1..T
};

struct SimResult {
  Tensor logits;
  SimTrace trace;
};

// --- neuron primitives -----------------------------------------------------

struct IfStep {
  Tensor spikes;  // {0,1}
  Tensor v;
};

/// One integrate-and-fire step: v += input; fire iff v >= theta; soft reset.
IfStep if_layer_step(const Tensor& v, const Tensor& input, std::span<const double> theta);
IfStep if_layer_step(const Tensor& v, const Tensor& input, double theta);

/// Permutes the time axis of trains [T x N]. Shared scope applies one uniform
/// permutation to every neuron; per-neuron scope draws one per column. The
/// stream is key with step 0.
Tensor shuffle_spikes(const Tensor& trains, ShuffleScope scope, const RngKey& key);

struct TppOutput {
  Tensor spikes;               // [T x N], {0,1}
  std::vector<double> residue; // v[T]
  std::vector<Tensor> v_pre;   // v[t-1] per step (only when requested)
};

/// Phase 2 of a two-phase probabilistic layer. accumulated holds the phase-1
/// sum of inputs; step t draws s ~ Bernoulli(clamp(v / (theta (T - t + 1)), 0, 1))
/// from stream key.with_step(t), neuron n, and subtracts theta * s.
TppOutput tpp_layer(std::span<const double> accumulated, std::span<const double> theta, int T, const RngKey& key,
                    bool record_potentials = false);
TppOutput tpp_layer(std::span<const double> accumulated, double theta, int T, const RngKey& key);

// --- network simulation ----------------------------------------------------

/// Executes a converted model layer-sequentially: each spiking layer receives
/// the full T-step input series of its predecessor. For baseline IF this is
/// equivalent to synchronous stepping; shuffle and TPP require it.
class Simulator {
 public:
  explicit Simulator(const ConvertedModel& model);

  /// key.run_seed and key.sample select the random streams; layer/step are
  /// filled in by the simulator (input encoding uses layer 0, spiking layer k
  /// uses layer k starting at 1).
  SimResult run(const Tensor& x, const SimConfig& config, const RngKey& key) const;

  std::size_t spiking_layers() const { return stages_.size() - 1; }
  const ConvertedModel& model() const { return *model_; }

 private:
  struct Stage {
    std::size_t begin = 0;  // affine block [begin, end) feeding this stage
    std::size_t end = 0;
    std::size_t activation = 0;  // activation layer index (spiking stages)
    Shape shape;
    std::vector<double> theta;   // per neuron
  };
  const ConvertedModel* model_;
  std::vector<Stage> stages_;  // spiking stages followed by the classifier head
};

SimResult snn_forward_baseline(const ConvertedModel& model, const Tensor& x, int T, const NeuronMode& mode,
                               const RngKey& key, TraceLevel trace = TraceLevel::full);
SimResult snn_forward_shuffle(const ConvertedModel& model, const Tensor& x, int T, const RngKey& key,
                              ShuffleScope scope = ShuffleScope::shared_permutation,
                              TraceLevel trace = TraceLevel::full);
SimResult snn_forward_tpp(const ConvertedModel& model, const Tensor& x, int T, const RngKey& key,
                          TraceLevel trace = TraceLevel::full);

/// Classifier output recomputed from the first t steps (1 <= t <= T).
Tensor anytime_logits(const SimTrace& trace, int t);

}  // namespace spikeforge
