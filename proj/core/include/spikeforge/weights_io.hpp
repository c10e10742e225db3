// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include "spikeforge/model.hpp"
#include "spikeforge/threshold_plan.hpp"

namespace spikeforge {

inline constexpr int kWeightFormatVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kBlobFile = "weights.bin";

/// Writes manifest.json + weights.bin into dir (created if missing). Tensors
/// are narrowed to little-endian float32; see docs/weight-format.md.
void write_weights(const ModelGraph& model, const std::filesystem::path& dir,
                   const std::optional<ThresholdPlan>& plan = std::nullopt);

struct WeightBundle {
  ModelGraph model;
  std::optional<ThresholdPlan> plan;
};

/// Throws FormatError (version, truncation, layout), ChecksumError, or
/// StructureError (empty layer list, inconsistent shapes).
WeightBundle read_weight_bundle(const std::filesystem::path& dir);
ModelGraph read_weights(const std::filesystem::path& dir);

/// CRC-32 (IEEE 802.3, reflected, init/xorout 0xFFFFFFFF).
std::uint32_t crc32(std::span<const unsigned char> bytes);

}  // namespace spikeforge
