// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spikeforge/snn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "spikeforge/error.hpp"

namespace spikeforge {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view text, const E (&all)[N], const char* what) {
  for (E e : all)
    if (to_string(e) == text) return e;
  throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(text) + "'");
}

void require_T(int T) {
  if (T < 1) throw std::invalid_argument("latency T must be >= 1, got " + std::to_string(T));
}

}  // namespace

std::string_view to_string(NeuronVariant v) {
  switch (v) {
    case NeuronVariant::baseline_if: return "baseline";
    case NeuronVariant::shuffle: return "shuffle";
    case NeuronVariant::tpp: return "tpp";
  }
  return "unknown";
}
NeuronVariant parse_neuron_variant(std::string_view text) {
  static constexpr NeuronVariant all[] = {NeuronVariant::baseline_if, NeuronVariant::shuffle, NeuronVariant::tpp};
  return parse_enum(text, all, "mode");
}

std::string_view to_string(ShuffleScope s) { return s == ShuffleScope::shared_permutation ? "shared" : "per-neuron"; }
ShuffleScope parse_shuffle_scope(std::string_view text) {
  static constexpr ShuffleScope all[] = {ShuffleScope::shared_permutation, ShuffleScope::per_neuron};
  return parse_enum(text, all, "shuffle scope");
}

std::string_view to_string(InputEncoding e) { return e == InputEncoding::constant ? "constant" : "rate"; }
InputEncoding parse_input_encoding(std::string_view text) {
  static constexpr InputEncoding all[] = {InputEncoding::constant, InputEncoding::rate};
  return parse_enum(text, all, "input encoding");
}

std::string_view to_string(HeadMode h) { return h == HeadMode::accumulate ? "accumulate" : "spiking"; }
HeadMode parse_head_mode(std::string_view text) {
  static constexpr HeadMode all[] = {HeadMode::accumulate, HeadMode::spiking};
  return parse_enum(text, all, "head mode");
}

// --- primitives ------------------------------------------------------------

IfStep if_layer_step(const Tensor& v, const Tensor& input, std::span<const double> theta) {
  if (v.shape() != input.shape())
    throw DimensionError("if_layer_step: potential " + to_string(v.shape()) + " vs input " + to_string(input.shape()));
  if (theta.size() != 1 && theta.size() != v.size()) throw DimensionError("if_layer_step: theta length mismatch");
  require_finite(input, "if_layer_step input");
  IfStep out{Tensor(v.shape()), v};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double th = theta.size() == 1 ? theta[0] : theta[i];
    if (!(th > 0.0)) throw std::invalid_argument("if_layer_step: theta must be > 0");
    double& u = out.v[i];
    u += input[i];
    if (u >= th) {
      out.spikes[i] = 1.0;
      u -= th;
    }
  }
  require_finite(out.v, "if_layer_step potential");
  return out;
}

IfStep if_layer_step(const Tensor& v, const Tensor& input, double theta) {
  return if_layer_step(v, input, std::span<const double>(&theta, 1));
}

Tensor shuffle_spikes(const Tensor& trains, ShuffleScope scope, const RngKey& key) {
  if (trains.rank() != 2) throw DimensionError("shuffle_spikes expects trains [T x N]");
  const std::size_t T = trains.dim(0), N = trains.dim(1);
  if (T == 0) throw std::invalid_argument("shuffle_spikes: T must be >= 1");
  const std::uint64_t stream = stream_seed(key.with_step(0));

  // Fisher-Yates over time; draw c of the stream picks the swap for slot T-1-c.
  auto permutation = [T](std::uint64_t s) {
    std::vector<std::size_t> perm(T);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::uint64_t c = 0;
    for (std::size_t i = T - 1; i > 0; --i) std::swap(perm[i], perm[uniform_below(i + 1, keyed_draw(s, c++))]);
    return perm;
  };

  Tensor out(trains.shape());
  if (scope == ShuffleScope::shared_permutation) {
    const auto perm = permutation(stream);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t n = 0; n < N; ++n) out[t * N + n] = trains[perm[t] * N + n];
  } else {
    for (std::size_t n = 0; n < N; ++n) {
      const auto perm = permutation(derive(stream, n));
      for (std::size_t t = 0; t < T; ++t) out[t * N + n] = trains[perm[t] * N + n];
    }
  }
  return out;
}

TppOutput tpp_layer(std::span<const double> accumulated, std::span<const double> theta, int T, const RngKey& key,
                    bool record_potentials) {
  require_T(T);
  const std::size_t N = accumulated.size();
  if (theta.size() != 1 && theta.size() != N) throw DimensionError("tpp_layer: theta length mismatch");
  if (!all_finite(accumulated)) throw NumericError("tpp_layer: non-finite accumulated potential");

  TppOutput out{Tensor({static_cast<std::size_t>(T), N}), std::vector<double>(accumulated.begin(), accumulated.end()), {}};
  auto& v = out.residue;
  for (int t = 1; t <= T; ++t) {
    if (record_potentials) out.v_pre.emplace_back(Shape{N}, v);
    const std::uint64_t stream = stream_seed(key.with_step(static_cast<std::uint64_t>(t)));
    const double remaining = static_cast<double>(T - t + 1);
    for (std::size_t n = 0; n < N; ++n) {
      const double th = theta.size() == 1 ? theta[0] : theta[n];
      if (!(th > 0.0)) throw std::invalid_argument("tpp_layer: theta must be > 0");
      const double p = std::clamp(v[n] / (th * remaining), 0.0, 1.0);
      if (p > 0.0 && bernoulli(p, keyed_draw(stream, n))) {
        out.spikes[(static_cast<std::size_t>(t) - 1) * N + n] = 1.0;
        v[n] -= th;
      }
    }
  }
  return out;
}

TppOutput tpp_layer(std::span<const double> accumulated, double theta, int T, const RngKey& key) {
  return tpp_layer(accumulated, std::span<const double>(&theta, 1), T, key, false);
}

// --- simulator -------------------------------------------------------------

Simulator::Simulator(const ConvertedModel& model) : model_(&model) {
  const auto& m = model.base;
  m.validate();
  for (const auto& layer : m.layers)
    if (kind_of(layer) == LayerKind::batchnorm) throw StructureError("simulator needs a batchnorm-free model");
  const auto shapes = m.layer_shapes();
  std::size_t begin = 0;
  for (auto idx : m.activation_indices()) {
    const auto* entry = model.plan.find(idx);
    if (!entry) throw CalibrationError("no threshold for activation layer " + std::to_string(idx));
    Stage stage{begin, idx, idx, shapes[idx], {}};
    const auto n = element_count(stage.shape);
    const auto channels = channel_count(stage.shape);
    if (entry->theta.size() != 1 && entry->theta.size() != channels)
      throw CalibrationError("threshold count mismatch for activation layer " + std::to_string(idx));
    stage.theta.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      stage.theta[i] = entry->theta.size() == 1 ? entry->theta[0] : entry->theta[i / (n / channels)];
    stages_.push_back(std::move(stage));
    begin = idx + 1;
  }
  if (begin >= m.layers.size()) throw StructureError("model ends with an activation; no classifier head");
  stages_.push_back(Stage{begin, m.layers.size(), m.layers.size(), shapes.back(), {}});
}

SimResult Simulator::run(const Tensor& x, const SimConfig& config, const RngKey& key) const {
  require_T(config.T);
  const auto& m = model_->base;
  if (x.shape() != m.input_shape)
    throw DimensionError("model expects input " + to_string(m.input_shape) + ", got " + to_string(x.shape()));
  require_finite(x, "simulator input");
  const auto T = static_cast<std::size_t>(config.T);
  const bool full = config.trace == TraceLevel::full;
  const auto& mode = config.mode;

  SimResult result;
  SimTrace& trace = result.trace;
  trace.T = config.T;
  trace.mode = mode;
  trace.absorbed = model_->absorbed;
  trace.encoding = config.encoding;
  trace.input = x;

  // Input series: what the first affine block sees at each step.
  std::vector<Tensor> series;
  bool constant = config.encoding == InputEncoding::constant;
  if (constant) {
    series.assign(1, x);
  } else {
    trace.input_counts.assign(x.size(), 0);
    const RngKey input_key = key.with_layer(0);
    for (std::size_t t = 1; t <= T; ++t) {
      const auto stream = stream_seed(input_key.with_step(t));
      Tensor s(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i)
        if (bernoulli(std::clamp(x[i], 0.0, 1.0), keyed_draw(stream, i))) {
          s[i] = 1.0;
          ++trace.input_counts[i];
        }
      series.push_back(std::move(s));
    }
  }

  auto currents_of = [&](const Stage& stage) {
    std::vector<Tensor> cur;
    if (constant) {
      cur.assign(T, forward_range(m, stage.begin, stage.end, series[0]));
    } else {
      cur.reserve(T);
      for (const auto& s : series) cur.push_back(forward_range(m, stage.begin, stage.end, s));
    }
    return cur;
  };

  for (std::size_t k = 0; k + 1 < stages_.size(); ++k) {
    const Stage& stage = stages_[k];
    const auto current = currents_of(stage);
    const auto N = element_count(stage.shape);
    LayerTrace lt;
    lt.model_layer = stage.activation;
    lt.shape = stage.shape;
    lt.theta = stage.theta;
    lt.spike_counts.assign(N, 0);
    lt.step_counts.assign(T, 0);
    const RngKey layer_key = key.with_layer(k + 1);

    Tensor trains({T, N});  // {0,1}
    if (mode.variant == NeuronVariant::tpp) {
      std::vector<double> acc(N, 0.0);
      for (const auto& c : current)
        for (std::size_t i = 0; i < N; ++i) acc[i] += c[i];
      lt.initial.assign(N, 0.0);
      auto tpp = tpp_layer(acc, stage.theta, config.T, layer_key, full);
      lt.accumulated = std::move(acc);
      trains = std::move(tpp.spikes);
      lt.residue = std::move(tpp.residue);
      if (full) {
        lt.v_pre = std::move(tpp.v_pre);
        for (std::size_t t = 0; t < T; ++t) {
          Tensor post = lt.v_pre[t];
          for (std::size_t i = 0; i < N; ++i) post[i] -= stage.theta[i] * trains[t * N + i];
          lt.v_post.push_back(std::move(post));
        }
        for (std::size_t t = 0; t < T; ++t) {
          lt.v_pre[t] = lt.v_pre[t].reshaped(stage.shape);
          lt.v_post[t] = lt.v_post[t].reshaped(stage.shape);
        }
      }
    } else {
      Tensor v(stage.shape);
      for (std::size_t i = 0; i < N; ++i) v[i] = mode.initial_potential * stage.theta[i];
      lt.initial = v.values();
      for (std::size_t t = 0; t < T; ++t) {
        const Tensor& in = current[t];
        for (std::size_t i = 0; i < N; ++i) {
          v[i] += in[i];
          if (v[i] >= stage.theta[i]) trains[t * N + i] = 1.0;
        }
        if (full) lt.v_pre.push_back(v);
        for (std::size_t i = 0; i < N; ++i) v[i] -= stage.theta[i] * trains[t * N + i];
        if (full) lt.v_post.push_back(v);
      }
      require_finite(v, "membrane potential");
      lt.residue = v.values();
      if (mode.variant == NeuronVariant::shuffle) trains = shuffle_spikes(trains, mode.shuffle_scope, layer_key);
    }

    // Emit: {0,1} when thresholds are absorbed downstream, {0,theta} otherwise.
    series.clear();
    series.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
      Tensor s(stage.shape);
      for (std::size_t i = 0; i < N; ++i) {
        if (trains[t * N + i] == 0.0) continue;
        s[i] = model_->absorbed ? 1.0 : stage.theta[i];
        ++lt.spike_counts[i];
        ++lt.step_counts[t];
      }
      if (full) lt.spikes.push_back(s);
      series.push_back(std::move(s));
    }
    constant = false;
    trace.layers.push_back(std::move(lt));
  }

  // Classifier head. The readout after t steps is the head block applied to
  // the mean of its first t inputs; for an affine block this equals the mean
  // of the per-step outputs, and summing spikes before the block keeps the
  // result independent of their temporal order.
  const Stage& head = stages_.back();
  trace.readout.reserve(T);
  if (config.head == HeadMode::spiking) {
    if (!model_->plan.head_theta) throw CalibrationError("spiking head requested but the plan has no head threshold");
    const double th = *model_->plan.head_theta;
    const auto current = currents_of(head);
    Tensor v(head.shape), sum(head.shape);
    for (std::size_t t = 0; t < T; ++t) {
      auto step = if_layer_step(v, current[t], th);
      v = std::move(step.v);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += th * step.spikes[i];
      trace.readout.push_back(scale(sum, 1.0 / static_cast<double>(t + 1)));
    }
  } else if (constant) {
    trace.readout.assign(T, forward_range(m, head.begin, head.end, series[0]));
  } else {
    Tensor sum(series.front().shape());
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += series[t][i];
      trace.readout.push_back(forward_range(m, head.begin, head.end, scale(sum, 1.0 / static_cast<double>(t + 1))));
    }
  }
  result.logits = trace.readout.back();
  return result;
}

SimResult snn_forward_baseline(const ConvertedModel& model, const Tensor& x, int T, const NeuronMode& mode,
                               const RngKey& key, TraceLevel trace) {
  SimConfig config;
  config.mode = mode;
  config.mode.variant = NeuronVariant::baseline_if;
  config.T = T;
  config.trace = trace;
  return Simulator(model).run(x, config, key);
}

SimResult snn_forward_shuffle(const ConvertedModel& model, const Tensor& x, int T, const RngKey& key, ShuffleScope scope,
                              TraceLevel trace) {
  SimConfig config;
  config.mode = NeuronMode::shuffled(scope);
  config.T = T;
  config.trace = trace;
  return Simulator(model).run(x, config, key);
}

SimResult snn_forward_tpp(const ConvertedModel& model, const Tensor& x, int T, const RngKey& key, TraceLevel trace) {
  SimConfig config;
  config.mode = NeuronMode::tpp();
  config.T = T;
  config.trace = trace;
  return Simulator(model).run(x, config, key);
}

Tensor anytime_logits(const SimTrace& trace, int t) {
  if (t < 1 || t > trace.T || static_cast<std::size_t>(trace.T) != trace.readout.size())
    throw std::invalid_argument("anytime_logits: t must lie in [1, T] of a complete trace");
  return trace.readout[static_cast<std::size_t>(t - 1)];
}

}  // namespace spikeforge
