// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "spikeforge/activation.hpp"
#include "spikeforge/dataset.hpp"
#include "spikeforge/error.hpp"
#include "spikeforge/model.hpp"
#include "spikeforge/trainer.hpp"
#include "test_support.hpp"

using namespace spikeforge;
using spikeforge::testing::random_tensor;
using spikeforge::testing::single_linear;

namespace {

BatchNormLayer make_bn(std::size_t n, std::uint64_t seed) {
  BatchNormLayer bn;
  bn.gamma = random_tensor({n}, seed, 0.5, 2.0);
  bn.beta = random_tensor({n}, seed + 1, -0.5, 0.5);
  bn.running_mean = random_tensor({n}, seed + 2, -1.0, 1.0);
  bn.running_var = random_tensor({n}, seed + 3, 0.2, 3.0);
  bn.epsilon = 1e-5;
  return bn;
}

ModelGraph bn_mlp() {
  ModelGraph m;
  m.input_shape = {6};
  m.layers.push_back(LinearLayer{random_tensor({8, 6}, 1), random_tensor({8}, 2)});
  m.layers.push_back(make_bn(8, 10));
  m.layers.push_back(ActivationLayer{ActivationSpec::relu()});
  m.layers.push_back(LinearLayer{random_tensor({3, 8}, 3), random_tensor({3}, 4)});
  m.layers.push_back(make_bn(3, 20));
  return m;
}

ModelGraph bn_cnn() {
  ModelGraph m;
  m.input_shape = {2, 6, 6};
  m.layers.push_back(Conv2dLayer{random_tensor({4, 2, 3, 3}, 5), random_tensor({4}, 6), 1, 1});
  m.layers.push_back(make_bn(4, 30));
  m.layers.push_back(ActivationLayer{ActivationSpec::relu()});
  m.layers.push_back(AvgPoolLayer{2, 2});
  m.layers.push_back(FlattenLayer{});
  m.layers.push_back(LinearLayer{random_tensor({5, 36}, 7), random_tensor({5}, 8)});
  return m;
}

}  // namespace

TEST_CASE("activation hand cases") {
  CHECK(apply_activation(ActivationSpec::relu(), 0.0) == 0.0);
  CHECK(eval_activation(ActivationSpec::clipped(1.0), Tensor::vector({-0.5, 0.5, 2})) == Tensor::vector({0, 0.5, 1}));
  CHECK(apply_activation(ActivationSpec::clipped(2.0), 5.0) == 2.0);
  CHECK(apply_activation(ActivationSpec::quantized(1.0, 4, 0.5), 0.3) == 0.25);
  CHECK(apply_activation(ActivationSpec::quantized(1.0, 2, 0.5), 0.6) == 0.5);
}

TEST_CASE("activation spec validation") {
  CHECK_THROWS_AS(ActivationSpec::clipped(0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(ActivationSpec::quantized(1.0, 0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(ActivationSpec::quantized(1.0, 4, 1.5).validate(), std::invalid_argument);
  CHECK(parse_activation_family(to_string(ActivationFamily::quantized_relu)) == ActivationFamily::quantized_relu);
}

TEST_CASE("activation properties on random inputs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor x = random_tensor({50}, seed, -3.0, 3.0);
    const double big = std::max(std::abs(x.max()), std::abs(x.min()));
    CHECK(eval_activation(ActivationSpec::relu(), x) == eval_activation(ActivationSpec::clipped(big), x));
    CHECK(eval_activation(ActivationSpec::relu(), x) == eval_activation(ActivationSpec::clipped(big * 2), x));

    const double theta = 0.5 + static_cast<double>(seed) * 0.25;
    const int L = 1 + static_cast<int>(seed % 7);
    const Tensor q = eval_activation(ActivationSpec::quantized(theta, L), x);
    for (double v : q.data()) {
      CHECK(v >= 0.0);
      CHECK(v <= theta);
      const double k = v / (theta / L);
      CHECK(std::abs(k - std::round(k)) < 1e-9);
    }
  }
}

TEST_CASE("identity linear layer with relu") {
  const ModelGraph m = single_linear(Tensor::identity(2), Tensor({2}, 0.0), true);
  CHECK(ann_forward(m, Tensor::vector({1, -1})).logits == Tensor::vector({1, 0}));
}

TEST_CASE("ann_forward records one tensor per activation") {
  const ModelGraph m = bn_mlp();
  m.validate();
  const AnnOutput out = ann_forward(m, random_tensor({6}, 99), true);
  CHECK(out.activations.size() == 1);
  CHECK(out.logits.shape() == Shape{3});
  CHECK(m.activation_indices() == std::vector<std::size_t>{2});
}

TEST_CASE("validate rejects shapes that do not compose") {
  ModelGraph m = bn_mlp();
  m.input_shape = {5};
  CHECK_THROWS_AS(m.validate(), DimensionError);
  ModelGraph empty;
  empty.input_shape = {3};
  CHECK_THROWS_AS(empty.validate(), StructureError);
}

TEST_CASE("fold_batchnorm hand cases") {
  const Tensor w = random_tensor({3, 4}, 42);
  const Tensor b = random_tensor({3}, 43);
  ModelGraph m = single_linear(w, b, false);

  SUBCASE("identity batchnorm leaves the model unchanged") {
    m.layers.push_back(BatchNormLayer{Tensor({3}, 1.0), Tensor({3}, 0.0), Tensor({3}, 0.0), Tensor({3}, 1.0), 0.0});
    const ModelGraph f = fold_batchnorm(m);
    REQUIRE(f.layers.size() == 1);
    CHECK(std::get<LinearLayer>(f.layers[0]).weight == w);
    CHECK(std::get<LinearLayer>(f.layers[0]).bias == b);
  }
  SUBCASE("gamma 2 doubles the weights") {
    m.layers.push_back(BatchNormLayer{Tensor({3}, 2.0), Tensor({3}, 0.0), Tensor({3}, 0.0), Tensor({3}, 1.0), 0.0});
    const ModelGraph f = fold_batchnorm(m);
    REQUIRE(f.layers.size() == 1);
    CHECK(std::get<LinearLayer>(f.layers[0]).weight == scale(w, 2.0));
  }
}

TEST_CASE("fold_batchnorm preserves forward outputs") {
  for (const ModelGraph& m : {bn_mlp(), bn_cnn()}) {
    const ModelGraph f = fold_batchnorm(m);
    for (const Layer& l : f.layers) CHECK(kind_of(l) != LayerKind::batchnorm);
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const Tensor x = random_tensor(m.input_shape, 1000 + s);
      worst = std::max(worst, max_abs_diff(ann_forward(m, x).logits, ann_forward(f, x).logits));
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("fold_batchnorm requires a weight layer before each batchnorm") {
  ModelGraph m;
  m.input_shape = {3};
  m.layers.push_back(make_bn(3, 1));
  m.layers.push_back(LinearLayer{random_tensor({2, 3}, 2), random_tensor({2}, 3)});
  CHECK_THROWS_AS(fold_batchnorm(m), StructureError);
}

TEST_CASE("toy trainer separates XOR") {
  const Dataset xor_data = synth_dataset(SynthKind::xor_corners, 4, 1);
  TrainConfig cfg;
  cfg.hidden = {8};
  cfg.epochs = 2000;
  cfg.learning_rate = 0.1;
  cfg.batch_size = 4;
  cfg.seed = 3;
  const ModelGraph m = train_toy_mlp(xor_data, cfg);
  CHECK(ann_accuracy(m, xor_data) == 1.0);
}

TEST_CASE("toy trainer is deterministic and zero epochs keeps the initialization") {
  const Dataset blobs = synth_dataset(SynthKind::gaussian_blobs, 200, 5, {4, 2, 6.0});
  TrainConfig cfg;
  cfg.hidden = {16};
  cfg.epochs = 3;
  cfg.seed = 11;
  CHECK(train_toy_mlp(blobs, cfg) == train_toy_mlp(blobs, cfg));

  cfg.epochs = 0;
  const ModelGraph init = train_toy_mlp(blobs, cfg);
  const double acc = ann_accuracy(init, blobs);
  CHECK(acc < 0.75);
  cfg.epochs = 5;
  CHECK(ann_accuracy(train_toy_mlp(blobs, cfg), blobs) > acc);
}

TEST_CASE("argmax ties resolve to the lowest index") {
  const std::vector<double> v{1.0, 3.0, 3.0, -1.0};
  CHECK(argmax(v) == 1);
}
