// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>
#include <variant>
#include <vector>

#include "spikeforge/activation.hpp"
#include "spikeforge/tensor.hpp"

namespace spikeforge {

/// weight [out x in], bias [out]. Input must be rank 1.
struct LinearLayer {
  Tensor weight;
  Tensor bias;
  bool operator==(const LinearLayer&) const = default;
};

/// weight [C_out x C_in x kh x kw], bias [C_out].
struct Conv2dLayer {
  Tensor weight;
  Tensor bias;
  std::size_t stride = 1;
  std::size_t pad = 0;
  bool operator==(const Conv2dLayer&) const = default;
};

/// Inference-time batch normalization over channel axis 0 (features for
/// rank-1 inputs, channels for [C x H x W]).
struct BatchNormLayer {
  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;
  double epsilon = 1e-5;
  bool operator==(const BatchNormLayer&) const = default;
};

struct AvgPoolLayer {
  std::size_t kernel = 2;
  std::size_t stride = 2;
  bool operator==(const AvgPoolLayer&) const = default;
};

struct FlattenLayer {
  bool operator==(const FlattenLayer&) const = default;
};

struct ActivationLayer {
  ActivationSpec spec;
  bool operator==(const ActivationLayer&) const = default;
};

using Layer = std::variant<LinearLayer, Conv2dLayer, BatchNormLayer, AvgPoolLayer, FlattenLayer, ActivationLayer>;

enum class LayerKind { linear, conv2d, batchnorm, avgpool, flatten, activation };

LayerKind kind_of(const Layer& layer);
std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

/// True for layers whose inference map is affine (everything except activations).
bool is_affine(const Layer& layer);

/// Output shape of `layer` applied to `in`; throws DimensionError.
Shape output_shape(const Layer& layer, const Shape& in);

Tensor forward(const Layer& layer, const Tensor& x);

struct ModelGraph {
  Shape input_shape;
  std::vector<Layer> layers;

  /// Checks layer-local invariants and that consecutive shapes compose.
  /// Throws StructureError or DimensionError.
  void validate() const;

  /// Output shape after each layer, same length as layers.
  std::vector<Shape> layer_shapes() const;
  std::vector<std::size_t> activation_indices() const;
  Shape output_shape() const;

  bool operator==(const ModelGraph&) const = default;
};

struct AnnOutput {
  Tensor logits;
  /// Post-activation tensors, one per activation layer, when recorded.
  std::vector<Tensor> activations;
};

AnnOutput ann_forward(const ModelGraph& model, const Tensor& x, bool record = false);

/// Applies layers [begin, end) of the model to x.
Tensor forward_range(const ModelGraph& model, std::size_t begin, std::size_t end, Tensor x);

/// Folds every batchnorm into the linear/conv layer directly before it.
ModelGraph fold_batchnorm(const ModelGraph& model);

}  // namespace spikeforge
