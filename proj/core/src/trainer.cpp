// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spikeforge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spikeforge/error.hpp"
#include "spikeforge/parallel.hpp"
#include "spikeforge/rng.hpp"

namespace spikeforge {

namespace {

struct Dense {
  std::size_t in = 0, out = 0;
  std::vector<double> w, b, gw, gb, vw, vb;
};

}  // namespace

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

ModelGraph train_toy_mlp(const Dataset& data, const TrainConfig& config) {
  data.validate();
  if (config.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");

  std::vector<std::size_t> widths{data.feature_count()};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(data.num_classes);

  SplitMix64 init_gen(derive(config.seed, 1));
  std::vector<Dense> net(widths.size() - 1);
  for (std::size_t l = 0; l < net.size(); ++l) {
    auto& d = net[l];
    d.in = widths[l];
    d.out = widths[l + 1];
    d.w.resize(d.in * d.out);
    d.b.assign(d.out, 0.0);
    const double stddev = std::sqrt(2.0 / static_cast<double>(d.in));
    for (auto& v : d.w) v = stddev * standard_normal(init_gen);
    d.gw.assign(d.w.size(), 0.0);
    d.gb.assign(d.out, 0.0);
    d.vw.assign(d.w.size(), 0.0);
    d.vb.assign(d.out, 0.0);
  }

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 shuffle_gen(derive(config.seed, 2));

  std::vector<std::vector<double>> acts(net.size() + 1);
  std::vector<std::vector<double>> deltas(net.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_below(i, shuffle_gen())]);

    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      for (auto& d : net) {
        std::fill(d.gw.begin(), d.gw.end(), 0.0);
        std::fill(d.gb.begin(), d.gb.end(), 0.0);
      }
      double batch_loss = 0.0;
      for (std::size_t bi = start; bi < stop; ++bi) {
        const std::size_t s = order[bi];
        const auto* feat = data.features.data() + s * data.feature_count();
        acts[0].assign(feat, feat + data.feature_count());
        for (std::size_t l = 0; l < net.size(); ++l) {
          const auto& d = net[l];
          auto& y = acts[l + 1];
          y.assign(d.out, 0.0);
          for (std::size_t o = 0; o < d.out; ++o) {
            double acc = d.b[o];
            const double* row = d.w.data() + o * d.in;
            for (std::size_t i = 0; i < d.in; ++i) acc += row[i] * acts[l][i];
            y[o] = (l + 1 < net.size()) ? std::max(acc, 0.0) : acc;
          }
        }
        // softmax cross-entropy
        auto& logits = acts.back();
        const double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double v : logits) z += std::exp(v - mx);
        const int label = data.labels[s];
        batch_loss += -(logits[static_cast<std::size_t>(label)] - mx - std::log(z));
        auto& top = deltas.back();
        top.resize(logits.size());
        for (std::size_t c = 0; c < logits.size(); ++c)
          top[c] = std::exp(logits[c] - mx) / z - (static_cast<int>(c) == label ? 1.0 : 0.0);

        for (std::size_t l = net.size(); l-- > 0;) {
          auto& d = net[l];
          const auto& delta = deltas[l];
          for (std::size_t o = 0; o < d.out; ++o) {
            d.gb[o] += delta[o];
            double* grow = d.gw.data() + o * d.in;
            for (std::size_t i = 0; i < d.in; ++i) grow[i] += delta[o] * acts[l][i];
          }
          if (l == 0) break;
          auto& below = deltas[l - 1];
          below.assign(d.in, 0.0);
          for (std::size_t o = 0; o < d.out; ++o) {
            const double* row = d.w.data() + o * d.in;
            for (std::size_t i = 0; i < d.in; ++i) below[i] += row[i] * delta[o];
          }
          for (std::size_t i = 0; i < d.in; ++i)
            if (acts[l][i] <= 0.0) below[i] = 0.0;
        }
      }
      if (!std::isfinite(batch_loss))
        throw TrainingError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");

      const double scale = config.learning_rate / static_cast<double>(stop - start);
      for (auto& d : net) {
        for (std::size_t i = 0; i < d.w.size(); ++i) {
          d.vw[i] = config.momentum * d.vw[i] - scale * d.gw[i];
          d.w[i] += d.vw[i];
        }
        for (std::size_t o = 0; o < d.out; ++o) {
          d.vb[o] = config.momentum * d.vb[o] - scale * d.gb[o];
          d.b[o] += d.vb[o];
        }
      }
    }
  }

  ModelGraph model;
  model.input_shape = data.feature_shape;
  if (data.feature_shape.size() != 1) model.layers.emplace_back(FlattenLayer{});
  for (std::size_t l = 0; l < net.size(); ++l) {
    auto& d = net[l];
    if (!all_finite(d.w) || !all_finite(d.b)) throw TrainingError("training produced non-finite weights");
    model.layers.emplace_back(LinearLayer{Tensor({d.out, d.in}, std::move(d.w)), Tensor({d.out}, std::move(d.b))});
    if (l + 1 < net.size()) model.layers.emplace_back(ActivationLayer{ActivationSpec::relu()});
  }
  return model;
}

ModelGraph random_mlp(const std::vector<std::size_t>& widths, std::uint64_t seed, double bias_scale) {
  if (widths.size() < 2) throw std::invalid_argument("random_mlp needs at least input and output widths");
  for (auto w : widths)
    if (w == 0) throw std::invalid_argument("random_mlp widths must be positive");
  SplitMix64 gen(derive(seed, 3));
  ModelGraph model;
  model.input_shape = {widths.front()};
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto in = widths[l], out = widths[l + 1];
    const double stddev = std::sqrt(2.0 / static_cast<double>(in));
    Tensor w({out, in}), b({out});
    for (auto& v : w.data()) v = stddev * standard_normal(gen);
    for (auto& v : b.data()) v = bias_scale * standard_normal(gen);
    model.layers.emplace_back(LinearLayer{std::move(w), std::move(b)});
    if (l + 2 < widths.size()) model.layers.emplace_back(ActivationLayer{ActivationSpec::relu()});
  }
  return model;
}

double ann_accuracy(const ModelGraph& model, const Dataset& data, unsigned threads) {
  if (data.size() == 0) return 0.0;
  std::vector<unsigned char> correct(data.size(), 0);
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const auto out = ann_forward(model, data.sample(i));
    correct[i] = argmax(out.logits.data()) == static_cast<std::size_t>(data.label(i));
  });
  return static_cast<double>(std::count(correct.begin(), correct.end(), 1)) / static_cast<double>(data.size());
}

}  // namespace spikeforge
