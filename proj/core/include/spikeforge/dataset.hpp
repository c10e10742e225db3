// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spikeforge/tensor.hpp"

namespace spikeforge {

/// Immutable in-memory classification dataset. Features are stored flat,
/// sample-major; sample(i) materializes one [feature_shape] tensor with the
/// per-channel normalization applied.
struct Dataset {
  std::string name;
  std::string split;
  Shape feature_shape;
  std::size_t num_classes = 0;
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<double> mean;  // per channel, defaults to 0
  std::vector<double> std;   // per channel, defaults to 1

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return element_count(feature_shape); }
  Tensor sample(std::size_t i) const;
  int label(std::size_t i) const { return labels.at(i); }

  /// Throws ConsistencyError unless sizes agree, count > 0 and labels are
  /// in [0, num_classes).
  void validate() const;

  /// First n samples (or all, when n == 0 or n >= size()).
  Dataset head(std::size_t n) const;
};

/// Standard big-endian IDX3 images (magic 0x00000803) and IDX1 labels
/// (0x00000801). Pixels are scaled to [0, 1]; feature shape is 1 x rows x cols.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// CIFAR-10 binary batches: 3073-byte records (label byte + 3x32x32 pixels).
Dataset load_cifar10(const std::vector<std::filesystem::path>& batches);

enum class SynthKind { gaussian_blobs, xor_corners };

struct SynthOptions {
  std::size_t classes = 2;
  std::size_t dims = 2;
  double separation = 6.0;  // distance between adjacent class means, in sigmas
};

/// Deterministic synthetic data. xor_corners cycles through (0,0),(0,1),(1,0),(1,1)
/// with labels a xor b; gaussian_blobs places unit-variance class means on a
/// circle in the first two dimensions.
Dataset synth_dataset(SynthKind kind, std::size_t n, std::uint64_t seed, const SynthOptions& options = {});

/// n unlabeled samples (label 0, one class) drawn uniformly from [0, 1).
Dataset uniform_inputs(const Shape& shape, std::size_t n, std::uint64_t seed);

}  // namespace spikeforge
