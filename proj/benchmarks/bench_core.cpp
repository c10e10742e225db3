// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "spikeforge/calibration.hpp"
#include "spikeforge/snn.hpp"
#include "spikeforge/tensor.hpp"
#include "spikeforge/trainer.hpp"

using namespace spikeforge;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  SplitMix64 gen(seed);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = unit_interval(gen()) - 0.5;
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 128);

void BM_Conv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({c, 16, 16}, 3), w = random_tensor({c, c, 3, 3}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, 1, 1));
}
BENCHMARK(BM_Conv2d)->Arg(4)->Arg(16);

void BM_TppLayer(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const int T = static_cast<int>(state.range(1));
  std::vector<double> acc(n);
  SplitMix64 gen(5);
  for (auto& v : acc) v = T * unit_interval(gen());
  std::uint64_t sample = 0;
  for (auto _ : state) benchmark::DoNotOptimize(tpp_layer(acc, 1.0, T, RngKey{1, sample++, 1, 0}));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_TppLayer)->Args({128, 8})->Args({128, 64})->Args({1024, 32});

void BM_Simulate(benchmark::State& state) {
  const auto model = random_mlp({64, 128, 64, 10}, 7);
  const auto inputs = uniform_inputs({64}, 64, 8);
  const auto plan = fit_thresholds(collect_activation_stats(model, inputs, inputs.size()), ThresholdSource::max(),
                                   Granularity::layer);
  const auto converted = absorb_thresholds(model, plan);
  const Simulator sim(converted);
  SimConfig config;
  config.mode.variant = static_cast<NeuronVariant>(state.range(0));
  config.T = static_cast<int>(state.range(1));
  std::uint64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim.run(inputs.sample(i % inputs.size()), config, RngKey{1, i, 0, 0}));
    ++i;
  }
}
BENCHMARK(BM_Simulate)
    ->ArgNames({"mode", "T"})
    ->Args({0, 16})
    ->Args({1, 16})
    ->Args({2, 16})
    ->Args({2, 64});

}  // namespace

BENCHMARK_MAIN();
