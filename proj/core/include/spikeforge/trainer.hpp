// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "spikeforge/dataset.hpp"
#include "spikeforge/model.hpp"

namespace spikeforge {

struct TrainConfig {
  std::vector<std::size_t> hidden{128, 64};
  std::size_t epochs = 30;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  double momentum = 0.0;
  std::uint64_t seed = 1;
};

/// Trains a flatten -> (linear -> relu)* -> linear classifier with mini-batch
/// SGD on softmax cross-entropy. Deterministic for a given seed. Throws
/// TrainingError if the loss becomes non-finite.
ModelGraph train_toy_mlp(const Dataset& data, const TrainConfig& config);

/// Untrained relu MLP with He-normal weights and N(0, bias_scale^2) biases.
/// widths = {inputs, hidden..., outputs}.
ModelGraph random_mlp(const std::vector<std::size_t>& widths, std::uint64_t seed, double bias_scale = 0.1);

/// Fraction of samples whose argmax logit equals the label.
double ann_accuracy(const ModelGraph& model, const Dataset& data, unsigned threads = 1);

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace spikeforge
