// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spikeforge/dataset.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "spikeforge/error.hpp"
#include "spikeforge/rng.hpp"

namespace spikeforge {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) throw FormatError("IDX header truncated");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::size_t channels_of(const Shape& s) { return s.size() == 3 ? s[0] : 1; }

void init_normalization(Dataset& d) {
  d.mean.assign(channels_of(d.feature_shape), 0.0);
  d.std.assign(channels_of(d.feature_shape), 1.0);
}

}  // namespace

Tensor Dataset::sample(std::size_t i) const {
  const std::size_t f = feature_count();
  if (i >= size()) throw std::out_of_range("sample index " + std::to_string(i) + " out of range");
  std::vector<double> values(features.begin() + static_cast<std::ptrdiff_t>(i * f),
                             features.begin() + static_cast<std::ptrdiff_t>((i + 1) * f));
  const std::size_t channels = mean.size();
  if (channels > 0) {
    const std::size_t plane = f / channels;
    for (std::size_t c = 0; c < channels; ++c)
      if (mean[c] != 0.0 || std[c] != 1.0)
        for (std::size_t k = 0; k < plane; ++k) values[c * plane + k] = (values[c * plane + k] - mean[c]) / std[c];
  }
  return Tensor(feature_shape, std::move(values));
}

void Dataset::validate() const {
  if (labels.empty()) throw ConsistencyError("dataset '" + name + "' has no samples");
  if (features.size() != labels.size() * feature_count())
    throw ConsistencyError("dataset '" + name + "': feature count does not match sample count");
  if (num_classes == 0) throw ConsistencyError("dataset '" + name + "' declares zero classes");
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes)
      throw ConsistencyError("dataset '" + name + "' has label " + std::to_string(l) + " outside [0, " +
                             std::to_string(num_classes) + ")");
  if (mean.size() != std.size()) throw ConsistencyError("normalization mean/std length mismatch");
  for (double s : std)
    if (!(s > 0.0)) throw ConsistencyError("normalization std must be positive");
}

Dataset Dataset::head(std::size_t n) const {
  if (n == 0 || n >= size()) return *this;
  Dataset d = *this;
  d.labels.resize(n);
  d.features.resize(n * feature_count());
  return d;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_file(images);
  const auto lbl = read_file(labels);
  if (be32(img, 0) != 0x00000803)
    throw FormatError(images.string() + ": bad IDX3 magic (expected 0x00000803)");
  if (be32(lbl, 0) != 0x00000801)
    throw FormatError(labels.string() + ": bad IDX1 magic (expected 0x00000801)");
  const std::size_t count = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  const std::size_t label_count = be32(lbl, 4);
  if (rows == 0 || cols == 0) throw FormatError(images.string() + ": zero image dimensions");
  if (count != label_count)
    throw ConsistencyError("image file holds " + std::to_string(count) + " samples but label file holds " +
                           std::to_string(label_count));
  if (img.size() != 16 + count * rows * cols)
    throw FormatError(images.string() + ": payload size does not match header dimensions");
  if (lbl.size() != 8 + count) throw FormatError(labels.string() + ": payload size does not match header count");

  Dataset d;
  d.name = images.filename().string();
  d.split = d.name.find("train") != std::string::npos ? "train" : (d.name.find("t10k") != std::string::npos || d.name.find("test") != std::string::npos ? "test" : "");
  d.feature_shape = {1, rows, cols};
  d.features.resize(count * rows * cols);
  for (std::size_t i = 0; i < d.features.size(); ++i) d.features[i] = static_cast<double>(img[16 + i]) / 255.0;
  d.labels.resize(count);
  int max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    d.labels[i] = lbl[8 + i];
    max_label = std::max(max_label, d.labels[i]);
  }
  d.num_classes = static_cast<std::size_t>(std::max(max_label + 1, 10));
  init_normalization(d);
  d.validate();
  return d;
}

Dataset load_cifar10(const std::vector<std::filesystem::path>& batches) {
  constexpr std::size_t kRecord = 1 + 3 * 32 * 32;
  Dataset d;
  d.name = "cifar10";
  d.feature_shape = {3, 32, 32};
  d.num_classes = 10;
  for (const auto& path : batches) {
    const auto bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kRecord != 0)
      throw FormatError(path.string() + ": size is not a multiple of the 3073-byte CIFAR-10 record");
    for (std::size_t r = 0; r < bytes.size() / kRecord; ++r) {
      const unsigned char* rec = bytes.data() + r * kRecord;
      if (rec[0] >= 10) throw FormatError(path.string() + ": label byte out of range");
      d.labels.push_back(rec[0]);
      for (std::size_t i = 1; i < kRecord; ++i) d.features.push_back(static_cast<double>(rec[i]) / 255.0);
    }
    if (d.split.empty()) d.split = path.filename().string().find("test") != std::string::npos ? "test" : "train";
  }
  init_normalization(d);
  d.validate();
  return d;
}

Dataset synth_dataset(SynthKind kind, std::size_t n, std::uint64_t seed, const SynthOptions& options) {
  if (n == 0) throw std::invalid_argument("synthetic dataset needs n > 0");
  Dataset d;
  d.split = "train";
  d.labels.resize(n);
  if (kind == SynthKind::xor_corners) {
    d.name = "xor";
    d.feature_shape = {2};
    d.num_classes = 2;
    d.features.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const int a = static_cast<int>(i % 4) >> 1, b = static_cast<int>(i % 4) & 1;
      d.features[2 * i] = a;
      d.features[2 * i + 1] = b;
      d.labels[i] = a ^ b;
    }
  } else {
    if (options.classes < 2 || options.dims < 2)
      throw std::invalid_argument("gaussian blobs need at least 2 classes and 2 dimensions");
    d.name = "gaussian-blobs";
    d.feature_shape = {options.dims};
    d.num_classes = options.classes;
    d.features.resize(options.dims * n);
    // Means on a circle whose chord between neighbours equals the separation.
    const double k = static_cast<double>(options.classes);
    const double radius = options.separation / (2.0 * std::sin(std::numbers::pi / k));
    SplitMix64 gen(derive(seed, 0x626c6f6273));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = uniform_below(options.classes, gen());
      d.labels[i] = static_cast<int>(c);
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / k;
      double* f = d.features.data() + i * options.dims;
      for (std::size_t j = 0; j < options.dims; ++j) f[j] = standard_normal(gen);
      f[0] += radius * std::cos(angle);
      f[1] += radius * std::sin(angle);
    }
  }
  d.mean.assign(1, 0.0);
  d.std.assign(1, 1.0);
  d.validate();
  return d;
}

Dataset uniform_inputs(const Shape& shape, std::size_t n, std::uint64_t seed) {
  if (n == 0 || element_count(shape) == 0) throw std::invalid_argument("uniform_inputs needs n > 0 and a non-empty shape");
  Dataset d;
  d.name = "uniform";
  d.split = "random";
  d.feature_shape = shape;
  d.num_classes = 1;
  d.labels.assign(n, 0);
  d.features.resize(n * element_count(shape));
  SplitMix64 gen(derive(seed, 0x756e69));
  for (auto& v : d.features) v = unit_interval(gen());
  return d;
}

}  // namespace spikeforge
