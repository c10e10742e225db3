// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "spikeforge/model.hpp"
#include "spikeforge/rng.hpp"
#include "spikeforge/tensor.hpp"

namespace spikeforge::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("spikeforge-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("SPIKEFORGE_DATA_DIR"); env && *env) return env;
  return std::filesystem::path(SPIKEFORGE_SOURCE_DIR) / "data";
}

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  SplitMix64 gen(seed);
  for (auto& v : t.data()) v = lo + (hi - lo) * unit_interval(gen());
  return t;
}

inline ModelGraph single_linear(Tensor w, Tensor b, bool relu_after) {
  ModelGraph m;
  m.input_shape = {w.dim(1)};
  m.layers.push_back(LinearLayer{std::move(w), std::move(b)});
  if (relu_after) m.layers.push_back(ActivationLayer{ActivationSpec::relu()});
  return m;
}

}  // namespace spikeforge::testing
