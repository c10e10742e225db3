// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "spikeforge/dataset.hpp"

namespace spikeforge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Subcommands: train, calibrate, run, verify, spikes, hist, export-report.
/// Returns 0 on success, 1 on a failed check or runtime error, 2 on usage errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// idx:IMAGES,LABELS | cifar10:FILE[,FILE...] | synth:xor:N[:SEED] | synth:blobs:N[:SEED]
Dataset load_data_spec(const std::string& spec);

/// SPIKEFORGE_SEED when set, otherwise `fallback`.
std::uint64_t default_seed(std::uint64_t fallback = 1);

}  // namespace spikeforge
