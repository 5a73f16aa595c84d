/* Copyright 2026 The SmokeyNet Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>

#include "smokeynet/model.hpp"
#include "smokeynet/weather.hpp"

namespace smokeynet::model {

struct Checkpoint {
  ModelConfig config;
  nn::ParameterSet params;
  Stage stage = Stage::kVanilla;
  double validation_loss = std::numeric_limits<double>::quiet_NaN();
  std::string rng_state;  // serialized std::mt19937_64
  // Training-split weather statistics the model was fitted against.
  weather::NormalizationStats weather_stats;

  static Checkpoint from_model(const SmokeyNet& net, Stage stage, double validation_loss);
  SmokeyNet to_model() const;
};

// File layout: 8-byte magic "SMKYCKPT", u32 format version, u64 header
// length, a JSON header (config, stage, loss, rng state, weather stats and
// the ordered parameter table), then every parameter as little-endian
// float64 in column-major order.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

/// Widens a vanilla checkpoint into a multimodal one. Shared parameters are
/// copied verbatim; fusion blocks start as identity on the embedding with
/// random (or, in test mode, zero) weather columns.
Checkpoint init_from_vanilla(const Checkpoint& vanilla, const ModelConfig& multimodal_config,
                             uint64_t seed);

// Random init, optionally overwriting backbone.* from config.backbone_weights.
SmokeyNet make_model(const ModelConfig& config, uint64_t seed);

}  // namespace smokeynet::model
