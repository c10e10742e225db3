// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spikeforge/model.hpp"

#include <cmath>
#include <string>
#include <type_traits>

#include "spikeforge/error.hpp"

namespace spikeforge {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::size_t channels_of(const Shape& s) { return s.empty() ? 0 : s[0]; }

void check_bn_params(const BatchNormLayer& bn, std::size_t channels) {
  for (const Tensor* t : {&bn.gamma, &bn.beta, &bn.running_mean, &bn.running_var})
    if (t->rank() != 1 || t->size() != channels)
      throw DimensionError("batchnorm parameters must have " + std::to_string(channels) + " entries");
  for (double v : bn.running_var.data())
    if (v < 0.0) throw StructureError("batchnorm running variance must be >= 0");
  if (bn.epsilon < 0.0) throw StructureError("batchnorm epsilon must be >= 0");
}

}  // namespace

LayerKind kind_of(const Layer& layer) {
  return std::visit(overloaded{
                        [](const LinearLayer&) { return LayerKind::linear; },
                        [](const Conv2dLayer&) { return LayerKind::conv2d; },
                        [](const BatchNormLayer&) { return LayerKind::batchnorm; },
                        [](const AvgPoolLayer&) { return LayerKind::avgpool; },
                        [](const FlattenLayer&) { return LayerKind::flatten; },
                        [](const ActivationLayer&) { return LayerKind::activation; },
                    },
                    layer);
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::linear: return "linear";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::activation: return "activation";
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (auto k : {LayerKind::linear, LayerKind::conv2d, LayerKind::batchnorm, LayerKind::avgpool, LayerKind::flatten,
                 LayerKind::activation})
    if (to_string(k) == name) return k;
  throw FormatError("unknown layer kind '" + std::string(name) + "'");
}

bool is_affine(const Layer& layer) { return kind_of(layer) != LayerKind::activation; }

Shape output_shape(const Layer& layer, const Shape& in) {
  return std::visit(
      overloaded{
          [&](const LinearLayer& l) -> Shape {
            if (l.weight.rank() != 2) throw DimensionError("linear weight must be [out x in]");
            if (l.bias.rank() != 1 || l.bias.size() != l.weight.dim(0))
              throw DimensionError("linear bias must have " + std::to_string(l.weight.dim(0)) + " entries");
            if (in.size() != 1 || in[0] != l.weight.dim(1))
              throw DimensionError("linear layer expects [" + std::to_string(l.weight.dim(1)) + "], got " +
                                   to_string(in));
            return {l.weight.dim(0)};
          },
          [&](const Conv2dLayer& c) -> Shape {
            if (c.weight.rank() != 4) throw DimensionError("conv2d weight must be [Co x Ci x kh x kw]");
            if (c.bias.rank() != 1 || c.bias.size() != c.weight.dim(0))
              throw DimensionError("conv2d bias must have " + std::to_string(c.weight.dim(0)) + " entries");
            if (c.stride == 0) throw DimensionError("conv2d stride must be positive");
            if (in.size() != 3 || in[0] != c.weight.dim(1))
              throw DimensionError("conv2d expects [" + std::to_string(c.weight.dim(1)) + " x H x W], got " +
                                   to_string(in));
            const std::size_t ph = in[1] + 2 * c.pad, pw = in[2] + 2 * c.pad;
            const std::size_t kh = c.weight.dim(2), kw = c.weight.dim(3);
            if (ph < kh || pw < kw || (ph - kh) % c.stride || (pw - kw) % c.stride)
              throw DimensionError("conv2d output size is not a positive integer for input " + to_string(in));
            return {c.weight.dim(0), (ph - kh) / c.stride + 1, (pw - kw) / c.stride + 1};
          },
          [&](const BatchNormLayer& bn) -> Shape {
            if (in.size() != 1 && in.size() != 3) throw DimensionError("batchnorm expects rank 1 or 3 input");
            check_bn_params(bn, channels_of(in));
            return in;
          },
          [&](const AvgPoolLayer& p) -> Shape {
            if (in.size() != 3) throw DimensionError("avgpool expects [C x H x W]");
            if (p.kernel == 0 || p.stride == 0) throw DimensionError("avgpool kernel and stride must be positive");
            if (p.kernel > in[1] || p.kernel > in[2])
              throw DimensionError("avgpool window exceeds input " + to_string(in));
            return {in[0], (in[1] - p.kernel) / p.stride + 1, (in[2] - p.kernel) / p.stride + 1};
          },
          [&](const FlattenLayer&) -> Shape { return {element_count(in)}; },
          [&](const ActivationLayer& a) -> Shape {
            a.spec.validate();
            return in;
          },
      },
      layer);
}

Tensor forward(const Layer& layer, const Tensor& x) {
  return std::visit(
      overloaded{
          [&](const LinearLayer& l) {
            if (x.rank() != 1) throw DimensionError("linear layer expects a rank-1 input, got " + to_string(x.shape()));
            return matvec(l.weight, x.data(), &l.bias);
          },
          [&](const Conv2dLayer& c) {
            Tensor y = conv2d(x, c.weight, c.stride, c.pad);
            const std::size_t plane = y.dim(1) * y.dim(2);
            for (std::size_t o = 0; o < y.dim(0); ++o)
              for (std::size_t i = 0; i < plane; ++i) y[o * plane + i] += c.bias[o];
            return y;
          },
          [&](const BatchNormLayer& bn) {
            const std::size_t channels = channels_of(x.shape());
            check_bn_params(bn, channels);
            const std::size_t plane = x.size() / channels;
            Tensor y = x;
            for (std::size_t c = 0; c < channels; ++c) {
              const double inv = 1.0 / std::sqrt(bn.running_var[c] + bn.epsilon);
              for (std::size_t i = 0; i < plane; ++i) {
                double& v = y[c * plane + i];
                v = bn.gamma[c] * (v - bn.running_mean[c]) * inv + bn.beta[c];
              }
            }
            require_finite(y, "batchnorm");
            return y;
          },
          [&](const AvgPoolLayer& p) { return avgpool2d(x, p.kernel, p.stride); },
          [&](const FlattenLayer&) { return x.reshaped({x.size()}); },
          [&](const ActivationLayer& a) { return eval_activation(a.spec, x); },
      },
      layer);
}

std::vector<Shape> ModelGraph::layer_shapes() const {
  std::vector<Shape> shapes;
  shapes.reserve(layers.size());
  Shape s = input_shape;
  for (const auto& layer : layers) {
    s = spikeforge::output_shape(layer, s);
    shapes.push_back(s);
  }
  return shapes;
}

void ModelGraph::validate() const {
  if (layers.empty()) throw StructureError("model has no layers");
  if (input_shape.empty() || element_count(input_shape) == 0) throw StructureError("model input shape is empty");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Tensor* tensors[4] = {};
    if (auto* l = std::get_if<LinearLayer>(&layers[i])) {
      tensors[0] = &l->weight;
      tensors[1] = &l->bias;
    } else if (auto* c = std::get_if<Conv2dLayer>(&layers[i])) {
      tensors[0] = &c->weight;
      tensors[1] = &c->bias;
    }
    for (const Tensor* t : tensors)
      if (t && !all_finite(t->data()))
        throw StructureError("layer " + std::to_string(i) + " holds non-finite parameters");
  }
  (void)layer_shapes();
}

std::vector<std::size_t> ModelGraph::activation_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (kind_of(layers[i]) == LayerKind::activation) out.push_back(i);
  return out;
}

Shape ModelGraph::output_shape() const {
  auto shapes = layer_shapes();
  return shapes.empty() ? input_shape : shapes.back();
}

Tensor forward_range(const ModelGraph& model, std::size_t begin, std::size_t end, Tensor x) {
  for (std::size_t i = begin; i < end; ++i) {
    x = forward(model.layers[i], x);
    if (!all_finite(x.data()))
      throw NumericError("non-finite intermediate after layer " + std::to_string(i) + " (" +
                         std::string(to_string(kind_of(model.layers[i]))) + ")");
  }
  return x;
}

AnnOutput ann_forward(const ModelGraph& model, const Tensor& x, bool record) {
  if (x.shape() != model.input_shape)
    throw DimensionError("model expects input " + to_string(model.input_shape) + ", got " + to_string(x.shape()));
  require_finite(x, "model input");
  AnnOutput out;
  Tensor h = x;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    h = forward_range(model, i, i + 1, std::move(h));
    if (record && kind_of(model.layers[i]) == LayerKind::activation) out.activations.push_back(h);
  }
  out.logits = std::move(h);
  return out;
}

ModelGraph fold_batchnorm(const ModelGraph& model) {
  ModelGraph folded;
  folded.input_shape = model.input_shape;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto* bn = std::get_if<BatchNormLayer>(&model.layers[i]);
    if (!bn) {
      folded.layers.push_back(model.layers[i]);
      continue;
    }
    if (folded.layers.empty())
      throw StructureError("batchnorm at layer " + std::to_string(i) + " is not preceded by a linear/conv layer");
    Layer& prev = folded.layers.back();
    Tensor* weight = nullptr;
    Tensor* bias = nullptr;
    if (auto* l = std::get_if<LinearLayer>(&prev)) {
      weight = &l->weight;
      bias = &l->bias;
    } else if (auto* c = std::get_if<Conv2dLayer>(&prev)) {
      weight = &c->weight;
      bias = &c->bias;
    } else {
      throw StructureError("batchnorm at layer " + std::to_string(i) + " follows a " +
                           std::string(to_string(kind_of(prev))) + " layer; only linear/conv can absorb it");
    }
    const std::size_t channels = weight->dim(0);
    check_bn_params(*bn, channels);
    const std::size_t row = weight->size() / channels;
    for (std::size_t c = 0; c < channels; ++c) {
      const double s = bn->gamma[c] / std::sqrt(bn->running_var[c] + bn->epsilon);
      for (std::size_t j = 0; j < row; ++j) (*weight)[c * row + j] *= s;
      (*bias)[c] = s * ((*bias)[c] - bn->running_mean[c]) + bn->beta[c];
    }
    require_finite(*weight, "folded weights");
    require_finite(*bias, "folded bias");
  }
  return folded;
}

}  // namespace spikeforge
