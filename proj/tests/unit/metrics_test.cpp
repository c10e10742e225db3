// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spikeforge/calibration.hpp"
#include "spikeforge/metrics.hpp"
#include "spikeforge/report.hpp"
#include "spikeforge/trainer.hpp"
#include "test_support.hpp"

using namespace spikeforge;

namespace {

struct Trained {
  Dataset data;
  ModelGraph ann;
  ConvertedModel model;
  double ann_accuracy = 0.0;
};

const Trained& blobs_model() {
  static const Trained t = [] {
    Trained r;
    r.data = synth_dataset(SynthKind::gaussian_blobs, 400, 21, {4, 4, 3.0});
    TrainConfig cfg;
    cfg.hidden = {24, 24, 24};
    cfg.epochs = 40;
    cfg.learning_rate = 0.02;
    cfg.momentum = 0.9;
    cfg.seed = 5;
    r.ann = train_toy_mlp(r.data, cfg);
    r.ann_accuracy = ann_accuracy(r.ann, r.data);
    const auto stats = collect_activation_stats(r.ann, r.data, r.data.size());
    r.model = absorb_thresholds(r.ann, fit_thresholds(stats, ThresholdSource::max(), Granularity::layer));
    return r;
  }();
  return t;
}

std::vector<SimTrace> traces_for(const ConvertedModel& m, const Dataset& d, NeuronMode mode, int T, std::size_t n,
                                 std::uint64_t seed = 1) {
  const Simulator sim(m);
  std::vector<SimTrace> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(sim.run(d.sample(i), {mode, T, InputEncoding::constant, HeadMode::accumulate, TraceLevel::full}, {seed, i})
                      .trace);
  return out;
}

}  // namespace

TEST_CASE("percentage difference") {
  CHECK(*percentage_difference(150, 100) == 50.0);
  CHECK(*percentage_difference(75, 100) == -25.0);
  CHECK(*percentage_difference(0, 0) == 0.0);
  CHECK_FALSE(percentage_difference(3, 0).has_value());
}

TEST_CASE("mean and sample standard deviation") {
  CHECK(mean_std({2.0}) == std::pair<double, double>{2.0, 0.0});
  const auto [m, s] = mean_std({1.0, 2.0, 3.0, 4.0});
  CHECK(m == 2.5);
  CHECK(s == doctest::Approx(std::sqrt(5.0 / 3.0)));
}

TEST_CASE("spike counting") {
  const Trained& t = blobs_model();
  SUBCASE("zero-spike traces give a zero report") {
    SimTrace empty;
    empty.T = 3;
    empty.layers.resize(2);
    for (auto& l : empty.layers) l.step_counts.assign(3, 0);
    const SpikeReport r = count_spikes({empty, empty});
    CHECK(r.total() == 0.0);
    CHECK(r.samples == 2);
  }
  SUBCASE("totals equal the sum over spike tensors") {
    const auto traces = traces_for(t.model, t.data, NeuronMode::tpp(), 6, 8);
    const SpikeReport r = count_spikes(traces);
    double direct = 0.0;
    for (const auto& tr : traces)
      for (const auto& l : tr.layers)
        for (const auto& s : l.spikes)
          for (double v : s.data()) direct += v;
    CHECK(r.total() * 8 == doctest::Approx(direct).epsilon(1e-14));
    REQUIRE(r.layers.size() == 3);
    for (const auto& l : r.layers) {
      CHECK(l.per_step.size() == 6);
      for (double v : l.per_step) CHECK(v >= 0.0);
    }
  }
  SUBCASE("shuffle keeps the first layer's counts") {
    const auto base = count_spikes(traces_for(t.model, t.data, NeuronMode::baseline(), 8, 20));
    const auto shuf = count_spikes(traces_for(t.model, t.data, NeuronMode::shuffled(), 8, 20));
    const auto diff = compare_spikes(shuf, base);
    REQUIRE(diff.size() == 4);
    CHECK(*diff[0].percent == 0.0);
    CHECK_FALSE(diff.back().layer.has_value());

    const auto tpp = count_spikes(traces_for(t.model, t.data, NeuronMode::tpp(), 8, 20));
    for (const auto& d : compare_spikes(tpp, base)) {
      REQUIRE(d.percent.has_value());
      CHECK(std::isfinite(*d.percent));
    }
  }
}

TEST_CASE("sweep tables") {
  const Trained& t = blobs_model();
  SweepConfig cfg;
  cfg.modes = {NeuronVariant::baseline_if, NeuronVariant::tpp};
  cfg.T_values = {2, 4, 8};
  cfg.seeds = {1, 2, 3};
  cfg.limit = 60;
  const auto rows = sweep_accuracy(cfg, t.model, t.data);
  CHECK(rows.size() == 18);
  for (const auto& r : rows) {
    if (r.mode == NeuronVariant::baseline_if) CHECK(r.std == 0.0);
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
  }
  SweepConfig threaded = cfg;
  threaded.threads = 4;
  std::ostringstream a, b;
  write_accuracy_csv(a, rows);
  write_accuracy_csv(b, sweep_accuracy(threaded, t.model, t.data));
  CHECK(a.str() == b.str());
  const auto parsed = parse_csv(a.str());
  CHECK(parsed.front() == std::vector<std::string>{"mode", "T", "seed", "accuracy", "mean", "std"});
  CHECK(parsed.size() == 19);

  const auto any = sweep_anytime_accuracy(cfg, t.model, t.data);
  for (const auto& r : rows) {
    std::size_t n = 0;
    for (const auto& a : any)
      if (a.mode == r.mode && a.T == r.T) {
        ++n;
        if (a.t == r.T) CHECK(a.mean == doctest::Approx(r.mean).epsilon(1e-15));
      }
    CHECK(n == static_cast<std::size_t>(r.T));
  }
}

TEST_CASE("sweep config validation") {
  SweepConfig cfg;
  cfg.T_values = {0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.T_values = {4};
  cfg.seeds.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("latency trends on a trained toy MLP") {
  const Trained& t = blobs_model();
  REQUIRE(t.ann_accuracy > 0.9);
  SweepConfig cfg;
  cfg.limit = 200;

  SUBCASE("baseline at T = 1 collapses toward chance") {
    cfg.T_values = {1};
    CHECK(sweep_accuracy(cfg, t.model, t.data).front().accuracy < 0.5);
  }
  SUBCASE("tpp at T = 512 is within 1.5 points of the ANN") {
    cfg.modes = {NeuronVariant::tpp};
    cfg.T_values = {512};
    cfg.threads = 0;
    const double ann = ann_accuracy(t.ann, t.data.head(200));
    CHECK(sweep_accuracy(cfg, t.model, t.data).front().accuracy >= ann - 0.015);
  }
  SUBCASE("stochastic variants read out earlier than baseline") {
    cfg.modes = {NeuronVariant::baseline_if, NeuronVariant::shuffle, NeuronVariant::tpp};
    cfg.T_values = {16};
    cfg.seeds = {1, 2, 3, 4, 5};
    const auto any = sweep_anytime_accuracy(cfg, t.model, t.data);
    auto at = [&](NeuronVariant m, int step) {
      for (const auto& r : any)
        if (r.mode == m && r.t == step) return r.mean;
      return -1.0;
    };
    CHECK(at(NeuronVariant::tpp, 4) > at(NeuronVariant::baseline_if, 4));
    CHECK(at(NeuronVariant::shuffle, 4) > at(NeuronVariant::baseline_if, 4));
  }
}

TEST_CASE("membrane histograms") {
  const Trained& t = blobs_model();
  SUBCASE("one bin holds every neuron of every sample") {
    const auto traces = traces_for(t.model, t.data, NeuronMode::baseline(), 4, 10);
    const Histogram h = histogram_membrane(traces, 0, 2, 1);
    CHECK(h.total() == 24 * 10);
    CHECK(h.edges.size() == 2);
  }
  SUBCASE("constant potentials occupy a single bin") {
    const auto traces = traces_for(t.model, t.data, NeuronMode::baseline(), 4, 1);
    // At t = 1 with v[0] = 0 the pre-fire potential is the drive; a single
    // channel of one sample is a single value.
    const Histogram h = histogram_membrane(traces, 0, 1, 7, 3);
    std::size_t occupied = 0;
    for (auto c : h.counts) occupied += c > 0;
    CHECK(occupied == 1);
    CHECK(h.variance == 0.0);
    CHECK(h.edges.front() < h.edges.back());
  }
  SUBCASE("csv layout and threshold metadata") {
    const auto traces = traces_for(t.model, t.data, NeuronMode::tpp(), 4, 10);
    const Histogram h = histogram_membrane(traces, 1, 1, 5);
    CHECK(h.theta == t.model.plan.layers[1].theta[0]);
    std::ostringstream os;
    write_histogram_csv(os, h);
    const auto rows = parse_csv(os.str());
    CHECK(rows.front() == std::vector<std::string>{"layer", "t", "channel", "theta", "bin_left", "bin_right", "count"});
    CHECK(rows.size() == 6);
  }
  SUBCASE("tpp potentials at t = 1 spread wider than baseline's in a deep layer") {
    const auto base = histogram_membrane(traces_for(t.model, t.data, NeuronMode::baseline(), 8, 50), 2, 1, 20);
    const auto tpp = histogram_membrane(traces_for(t.model, t.data, NeuronMode::tpp(), 8, 50), 2, 1, 20);
    CHECK(tpp.variance > base.variance);
  }
}
