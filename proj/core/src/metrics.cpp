// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spikeforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "spikeforge/error.hpp"
#include "spikeforge/parallel.hpp"
#include "spikeforge/report.hpp"
#include "spikeforge/trainer.hpp"

namespace spikeforge {

void SweepConfig::validate() const {
  if (modes.empty()) throw std::invalid_argument("sweep needs at least one mode");
  if (T_values.empty()) throw std::invalid_argument("sweep needs at least one T");
  if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
  for (int T : T_values)
    if (T < 1) throw std::invalid_argument("latency T must be >= 1, got " + std::to_string(T));
}

double SpikeReport::total() const {
  double sum = 0;
  for (const auto& l : layers) sum += l.total;
  return sum;
}

SpikeReport count_spikes(const std::vector<SimTrace>& traces) {
  SpikeReport report;
  if (traces.empty()) return report;
  report.T = traces.front().T;
  report.samples = traces.size();
  for (const auto& l : traces.front().layers)
    report.layers.push_back({l.model_layer, element_count(l.shape), std::vector<double>(static_cast<std::size_t>(report.T), 0.0), 0.0});
  std::vector<std::vector<std::uint64_t>> sums(report.layers.size(), std::vector<std::uint64_t>(static_cast<std::size_t>(report.T), 0));
  for (const auto& trace : traces) {
    if (trace.T != report.T || trace.layers.size() != report.layers.size())
      throw std::invalid_argument("count_spikes: traces differ in T or layer layout");
    for (std::size_t l = 0; l < trace.layers.size(); ++l)
      for (std::size_t t = 0; t < sums[l].size(); ++t) sums[l][t] += trace.layers[l].step_counts.at(t);
  }
  const auto n = static_cast<double>(traces.size());
  for (std::size_t l = 0; l < sums.size(); ++l) {
    std::uint64_t total = 0;
    for (std::size_t t = 0; t < sums[l].size(); ++t) {
      report.layers[l].per_step[t] = static_cast<double>(sums[l][t]) / n;
      total += sums[l][t];
    }
    report.layers[l].total = static_cast<double>(total) / n;
  }
  return report;
}

std::optional<double> percentage_difference(double ours, double baseline) {
  if (baseline == 0.0) {
    if (ours == 0.0) return 0.0;
    return std::nullopt;
  }
  return (ours - baseline) / baseline * 100.0;
}

std::vector<SpikeDifference> compare_spikes(const SpikeReport& ours, const SpikeReport& baseline) {
  if (ours.layers.size() != baseline.layers.size())
    throw std::invalid_argument("compare_spikes: reports have different layer counts");
  std::vector<SpikeDifference> out;
  for (std::size_t l = 0; l < ours.layers.size(); ++l) {
    const double a = ours.layers[l].total, b = baseline.layers[l].total;
    out.push_back({ours.layers[l].layer, a, b, percentage_difference(a, b)});
  }
  out.push_back({std::nullopt, ours.total(), baseline.total(), percentage_difference(ours.total(), baseline.total())});
  return out;
}

double SweepCell::accuracy() const { return samples ? static_cast<double>(correct) / static_cast<double>(samples) : 0.0; }

namespace {

struct SampleOutcome {
  bool correct = false;
  std::vector<unsigned char> anytime;
  std::vector<std::vector<std::uint32_t>> step_counts;
};

SweepCell evaluate_cell(const SweepConfig& config, const Simulator& sim, const Dataset& data, std::size_t n,
                        NeuronVariant mode, int T, std::uint64_t seed) {
  SimConfig sc;
  sc.mode.variant = mode;
  sc.mode.shuffle_scope = config.shuffle_scope;
  sc.mode.initial_potential = mode == NeuronVariant::tpp ? 0.0 : config.initial_potential;
  sc.T = T;
  sc.encoding = config.encoding;
  sc.head = config.head;
  sc.trace = TraceLevel::counts;

  std::vector<SampleOutcome> outcomes(n);
  parallel_for(n, config.threads, [&](std::size_t i) {
    const auto result = sim.run(data.sample(i), sc, RngKey{seed, i, 0, 0});
    const auto label = static_cast<std::size_t>(data.label(i));
    auto& o = outcomes[i];
    o.correct = argmax(result.logits.data()) == label;
    o.anytime.resize(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t)
      o.anytime[static_cast<std::size_t>(t - 1)] = argmax(anytime_logits(result.trace, t).data()) == label;
    for (const auto& l : result.trace.layers) o.step_counts.push_back(l.step_counts);
  });

  SweepCell cell;
  cell.mode = mode;
  cell.T = T;
  cell.seed = seed;
  cell.samples = n;
  cell.anytime_correct.assign(static_cast<std::size_t>(T), 0);
  std::vector<SimTrace> shells;
  for (const auto& o : outcomes) {
    cell.correct += o.correct;
    for (std::size_t t = 0; t < o.anytime.size(); ++t) cell.anytime_correct[t] += o.anytime[t];
  }
  // Spike report from per-step counts (the trace fields count_spikes reads).
  shells.reserve(n);
  const auto stages = sim.model().base.activation_indices();
  const auto shapes = sim.model().base.layer_shapes();
  for (auto& o : outcomes) {
    SimTrace shell;
    shell.T = T;
    for (std::size_t l = 0; l < o.step_counts.size(); ++l) {
      LayerTrace lt;
      lt.model_layer = stages[l];
      lt.shape = shapes[stages[l]];
      lt.step_counts = std::move(o.step_counts[l]);
      shell.layers.push_back(std::move(lt));
    }
    shells.push_back(std::move(shell));
  }
  cell.spikes = count_spikes(shells);
  return cell;
}

}  // namespace

std::vector<SweepCell> run_sweep(const SweepConfig& config, const ConvertedModel& model, const Dataset& data) {
  config.validate();
  if (data.size() == 0) throw std::invalid_argument("sweep dataset is empty");
  const std::size_t n = config.limit ? std::min(config.limit, data.size()) : data.size();
  const Simulator sim(model);
  std::vector<SweepCell> cells;
  for (auto mode : config.modes)
    for (int T : config.T_values) {
      const bool seedless = mode == NeuronVariant::baseline_if && config.encoding == InputEncoding::constant;
      std::optional<SweepCell> shared;
      for (auto seed : config.seeds) {
        if (seedless && shared) {
          SweepCell copy = *shared;
          copy.seed = seed;
          cells.push_back(std::move(copy));
          continue;
        }
        cells.push_back(evaluate_cell(config, sim, data, n, mode, T, seed));
        if (seedless) shared = cells.back();
      }
    }
  return cells;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  // Deviations from the first value: identical inputs give exactly that value
  // and a zero spread.
  const double pivot = values.front();
  double shift = 0;
  for (double v : values) shift += v - pivot;
  shift /= static_cast<double>(values.size());
  const double mean = pivot + shift;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0;
  for (double v : values) ss += (v - pivot - shift) * (v - pivot - shift);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::vector<AccuracyRow> accuracy_rows(const std::vector<SweepCell>& cells) {
  std::map<std::pair<NeuronVariant, int>, std::vector<double>> groups;
  for (const auto& c : cells) groups[{c.mode, c.T}].push_back(c.accuracy());
  std::vector<AccuracyRow> rows;
  for (const auto& c : cells) {
    const auto [mean, sd] = mean_std(groups[{c.mode, c.T}]);
    rows.push_back({c.mode, c.T, c.seed, c.accuracy(), mean, sd});
  }
  return rows;
}

std::vector<AnytimeRow> anytime_rows(const std::vector<SweepCell>& cells) {
  std::vector<AnytimeRow> rows;
  std::vector<std::pair<NeuronVariant, int>> order;
  for (const auto& c : cells)
    if (std::find(order.begin(), order.end(), std::make_pair(c.mode, c.T)) == order.end()) order.emplace_back(c.mode, c.T);
  for (const auto& [mode, T] : order) {
    std::vector<const SweepCell*> group;
    for (const auto& c : cells)
      if (c.mode == mode && c.T == T) group.push_back(&c);
    for (int t = 1; t <= T; ++t) {
      std::vector<double> acc;
      for (const auto* c : group)
        acc.push_back(static_cast<double>(c->anytime_correct[static_cast<std::size_t>(t - 1)]) /
                      static_cast<double>(c->samples));
      const auto [mean, sd] = mean_std(acc);
      rows.push_back({mode, T, t, group.size(), mean, sd});
    }
  }
  return rows;
}

std::vector<AccuracyRow> sweep_accuracy(const SweepConfig& config, const ConvertedModel& model, const Dataset& data) {
  return accuracy_rows(run_sweep(config, model, data));
}

std::vector<AnytimeRow> sweep_anytime_accuracy(const SweepConfig& config, const ConvertedModel& model,
                                               const Dataset& data) {
  return anytime_rows(run_sweep(config, model, data));
}

void write_accuracy_csv(std::ostream& out, const std::vector<AccuracyRow>& rows) {
  CsvWriter csv(out);
  csv.row({"mode", "T", "seed", "accuracy", "mean", "std"});
  for (const auto& r : rows)
    csv.row({std::string(to_string(r.mode)), std::to_string(r.T), std::to_string(r.seed), format_double(r.accuracy),
             format_double(r.mean), format_double(r.std)});
}

void write_anytime_csv(std::ostream& out, const std::vector<AnytimeRow>& rows) {
  CsvWriter csv(out);
  csv.row({"mode", "T", "t", "mean", "std", "seeds"});
  for (const auto& r : rows)
    csv.row({std::string(to_string(r.mode)), std::to_string(r.T), std::to_string(r.t), format_double(r.mean),
             format_double(r.std), std::to_string(r.seeds)});
}

std::uint64_t Histogram::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

Histogram histogram_membrane(const std::vector<SimTrace>& traces, std::size_t layer_index, int t, std::size_t bins,
                             std::optional<std::size_t> channel) {
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  if (traces.empty()) throw std::invalid_argument("histogram needs at least one trace");
  std::vector<double> values;
  Histogram h;
  h.t = t;
  h.channel = channel;
  for (const auto& trace : traces) {
    if (layer_index >= trace.layers.size()) throw std::out_of_range("trace has no layer " + std::to_string(layer_index));
    const auto& layer = trace.layers[layer_index];
    if (t < 1 || t > trace.T) throw std::out_of_range("step t must lie in [1, T]");
    if (layer.v_pre.size() != static_cast<std::size_t>(trace.T))
      throw std::invalid_argument("histogram needs traces recorded with full potentials");
    const Tensor& v = layer.v_pre[static_cast<std::size_t>(t - 1)];
    h.layer = layer.model_layer;
    std::size_t begin = 0, end = v.size();
    if (channel) {
      const auto channels = channel_count(layer.shape);
      if (*channel >= channels) throw std::out_of_range("channel " + std::to_string(*channel) + " out of range");
      const auto per = v.size() / channels;
      begin = *channel * per;
      end = begin + per;
    }
    h.theta = layer.theta.at(begin);
    values.insert(values.end(), v.data().begin() + static_cast<std::ptrdiff_t>(begin),
                  v.data().begin() + static_cast<std::ptrdiff_t>(end));
  }
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + width * static_cast<double>(b);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  double sum = 0;
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    b = std::min(b, bins - 1);
    ++h.counts[b];
    sum += v;
  }
  h.mean = sum / static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - h.mean) * (v - h.mean);
  h.variance = ss / static_cast<double>(values.size());
  return h;
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
  CsvWriter csv(out);
  csv.row({"layer", "t", "channel", "theta", "bin_left", "bin_right", "count"});
  const std::string channel = h.channel ? std::to_string(*h.channel) : "all";
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    csv.row({std::to_string(h.layer), std::to_string(h.t), channel, format_double(h.theta), format_double(h.edges[b]),
             format_double(h.edges[b + 1]), std::to_string(h.counts[b])});
}

}  // namespace spikeforge
