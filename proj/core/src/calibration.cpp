// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spikeforge/calibration.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "spikeforge/error.hpp"
#include "spikeforge/parallel.hpp"

namespace spikeforge {

std::string_view to_string(Granularity g) { return g == Granularity::layer ? "layer" : "channel"; }

Granularity parse_granularity(std::string_view text) {
  if (text == "layer") return Granularity::layer;
  if (text == "channel") return Granularity::channel;
  throw std::invalid_argument("granularity must be 'layer' or 'channel', got '" + std::string(text) + "'");
}

std::string ThresholdSource::to_string() const {
  if (kind == Kind::max) return "max";
  std::string out = "pct:";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, percentile);
  out.append(buf, end);
  return out;
}

ThresholdSource ThresholdSource::parse(std::string_view text) {
  if (text == "max") return max();
  if (text.starts_with("pct:")) {
    auto digits = text.substr(4);
    double p = 0.0;
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), p);
    if (ec == std::errc{} && end == digits.data() + digits.size()) {
      if (!(p > 0.0 && p <= 100.0)) throw CalibrationError("percentile must lie in (0, 100], got " + std::string(digits));
      return pct(p);
    }
  }
  throw std::invalid_argument("threshold source must be 'max' or 'pct:P', got '" + std::string(text) + "'");
}

const LayerThreshold* ThresholdPlan::find(std::size_t layer) const {
  for (const auto& l : layers)
    if (l.layer == layer) return &l;
  return nullptr;
}

void ThresholdPlan::validate() const {
  if (source.kind == ThresholdSource::Kind::percentile && !(source.percentile > 0.0 && source.percentile <= 100.0))
    throw CalibrationError("percentile must lie in (0, 100]");
  for (const auto& l : layers) {
    if (l.theta.empty()) throw CalibrationError("layer " + std::to_string(l.layer) + " has no threshold");
    for (double t : l.theta)
      if (!(t > 0.0) || !std::isfinite(t))
        throw CalibrationError("layer " + std::to_string(l.layer) + " has a non-positive or non-finite threshold");
  }
  if (head_theta && (!(*head_theta > 0.0) || !std::isfinite(*head_theta)))
    throw CalibrationError("head threshold must be a finite positive number");
}

ValueStore::ValueStore(std::size_t cap, std::size_t reservoir, std::uint64_t seed)
    : cap_(cap), reservoir_(std::min(reservoir, cap)), gen_(seed) {
  if (cap_ == 0 || reservoir_ == 0) throw CalibrationError("value store cap and reservoir must be positive");
}

void ValueStore::add(double value) {
  if (!(value > 0.0)) {
    ++nonpositive_seen_;
    return;
  }
  ++positive_seen_;
  max_ = std::max(max_, value);
  if (exact_) {
    if (values_.size() < cap_) {
      values_.push_back(value);
      return;
    }
    // Cap reached: shrink to a uniform subsample and continue as a reservoir.
    for (std::size_t i = 0; i < reservoir_; ++i) {
      auto j = i + uniform_below(values_.size() - i, gen_());
      std::swap(values_[i], values_[j]);
    }
    values_.resize(reservoir_);
    exact_ = false;
  }
  auto j = uniform_below(positive_seen_, gen_());
  if (j < reservoir_) values_[j] = value;
}

double ValueStore::percentile(double p) const {
  if (empty()) throw CalibrationError("no positive activations recorded");
  if (p == 100.0) return max_;
  return nearest_rank_percentile(values_, p);
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw CalibrationError("percentile of an empty set");
  if (!(p > 0.0 && p <= 100.0)) throw CalibrationError("percentile must lie in (0, 100]");
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

double LayerActivationStats::max() const {
  double m = 0.0;
  for (const auto& c : channels) m = std::max(m, c.max());
  return m;
}

double LayerActivationStats::percentile(double p) const {
  if (empty()) throw CalibrationError("layer " + std::to_string(layer) + " has no positive activations");
  if (p == 100.0) return max();
  std::vector<double> all;
  for (const auto& c : channels) all.insert(all.end(), c.kept().begin(), c.kept().end());
  return nearest_rank_percentile(std::move(all), p);
}

bool LayerActivationStats::empty() const {
  return std::all_of(channels.begin(), channels.end(), [](const ValueStore& c) { return c.empty(); });
}

std::size_t channel_count(const Shape& shape) {
  if (shape.empty()) throw DimensionError("scalar activation has no channel axis");
  return shape[0];
}

ActivationStats collect_activation_stats(const ModelGraph& model, const Dataset& data, std::size_t n_samples,
                                         const StatsOptions& options) {
  if (n_samples == 0) throw CalibrationError("calibration needs at least one sample");
  if (data.size() == 0) throw CalibrationError("calibration dataset is empty");
  model.validate();
  n_samples = std::min(n_samples, data.size());

  const auto shapes = model.layer_shapes();
  ActivationStats stats;
  stats.samples = n_samples;
  std::uint64_t stream = 0;
  for (auto idx : model.activation_indices()) {
    LayerActivationStats layer{idx, shapes[idx], {}};
    const auto c = channel_count(layer.shape);
    for (std::size_t k = 0; k < c; ++k)
      layer.channels.emplace_back(options.cap, options.reservoir, derive(options.seed, ++stream));
    stats.layers.push_back(std::move(layer));
  }
  stats.head = ValueStore(options.cap, options.reservoir, derive(options.seed, 0));

  // Forward passes run in parallel per chunk; values are added in sample order
  // so the result does not depend on the thread count.
  constexpr std::size_t kChunk = 256;
  std::vector<AnnOutput> outputs;
  for (std::size_t begin = 0; begin < n_samples; begin += kChunk) {
    const auto count = std::min(kChunk, n_samples - begin);
    outputs.assign(count, {});
    parallel_for(count, options.threads, [&](std::size_t i) { outputs[i] = ann_forward(model, data.sample(begin + i), true); });
    for (const auto& out : outputs) {
      for (std::size_t l = 0; l < stats.layers.size(); ++l) {
        auto& layer = stats.layers[l];
        const auto values = out.activations[l].data();
        const auto per_channel = values.size() / layer.channels.size();
        for (std::size_t i = 0; i < values.size(); ++i) layer.channels[i / per_channel].add(values[i]);
      }
      for (double v : out.logits.data()) stats.head.add(v);
    }
  }
  return stats;
}

ThresholdPlan fit_thresholds(const ActivationStats& stats, const ThresholdSource& source, Granularity granularity) {
  const bool use_max = source.kind == ThresholdSource::Kind::max;
  if (!use_max && !(source.percentile > 0.0 && source.percentile <= 100.0))
    throw CalibrationError("percentile must lie in (0, 100]");
  ThresholdPlan plan;
  plan.source = source;
  plan.granularity = granularity;
  for (const auto& layer : stats.layers) {
    if (layer.empty())
      throw CalibrationError("activation layer " + std::to_string(layer.layer) +
                             " produced no positive value on the calibration set");
    const double layer_theta = use_max ? layer.max() : layer.percentile(source.percentile);
    LayerThreshold entry{layer.layer, {}};
    if (granularity == Granularity::layer) {
      entry.theta = {layer_theta};
    } else {
      for (const auto& c : layer.channels)
        entry.theta.push_back(c.empty() ? layer_theta : (use_max ? c.max() : c.percentile(source.percentile)));
    }
    plan.layers.push_back(std::move(entry));
  }
  if (!stats.head.empty()) plan.head_theta = use_max ? stats.head.max() : stats.head.percentile(source.percentile);
  plan.validate();
  return plan;
}

ConvertedModel absorb_thresholds(const ModelGraph& model, const ThresholdPlan& plan, AbsorbMode mode) {
  model.validate();
  plan.validate();
  for (const auto& layer : model.layers)
    if (kind_of(layer) == LayerKind::batchnorm)
      throw StructureError("fold batchnorm layers before threshold absorption");

  const auto shapes = model.layer_shapes();
  ConvertedModel out{model, plan, mode == AbsorbMode::absorbed};
  for (auto idx : model.activation_indices()) {
    const auto* entry = plan.find(idx);
    if (!entry) throw CalibrationError("threshold plan has no entry for activation layer " + std::to_string(idx));
    const auto channels = channel_count(shapes[idx]);
    if (entry->theta.size() != 1 && entry->theta.size() != channels)
      throw CalibrationError("activation layer " + std::to_string(idx) + " needs 1 or " + std::to_string(channels) +
                             " thresholds, plan has " + std::to_string(entry->theta.size()));

    std::size_t next = idx + 1;
    while (next < model.layers.size()) {
      const auto k = kind_of(model.layers[next]);
      if (k == LayerKind::linear || k == LayerKind::conv2d) break;
      if (k == LayerKind::activation)
        throw StructureError("activation layer " + std::to_string(idx) + " is followed by another activation");
      ++next;
    }
    if (next == model.layers.size())
      throw StructureError("no linear or conv layer follows activation layer " + std::to_string(idx));
    if (mode == AbsorbMode::reference) continue;

    // Carry the per-channel thetas through the pooling/flatten layers in
    // between so each input element of the weight layer gets its scale.
    Tensor theta_map(shapes[idx]);
    const auto per_channel = theta_map.size() / channels;
    for (std::size_t i = 0; i < theta_map.size(); ++i)
      theta_map[i] = entry->theta.size() == 1 ? entry->theta[0] : entry->theta[i / per_channel];
    const Tensor scale_in = forward_range(model, idx + 1, next, theta_map);

    if (auto* lin = std::get_if<LinearLayer>(&out.base.layers[next])) {
      const auto rows = lin->weight.dim(0), cols = lin->weight.dim(1);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) lin->weight.at(r, c) = lin->weight.at(r, c) * scale_in[c];
    } else {
      auto& conv = std::get<Conv2dLayer>(out.base.layers[next]);
      const auto& ws = conv.weight.shape();
      const auto plane = ws[2] * ws[3];
      const auto in_plane = scale_in.size() / ws[1];
      auto w = conv.weight.data();
      for (std::size_t o = 0; o < ws[0]; ++o)
        for (std::size_t c = 0; c < ws[1]; ++c)
          for (std::size_t k = 0; k < plane; ++k) {
            auto& x = w[(o * ws[1] + c) * plane + k];
            x = x * scale_in[c * in_plane];
          }
    }
  }
  return out;
}

}  // namespace spikeforge
