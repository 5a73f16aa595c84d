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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smokeynet/autodiff.hpp"

namespace smokeynet::model {

using nn::Matrix;
using nn::Var;

struct ModelConfig {
  int tile_size = 224;
  int grid_rows = 5;
  int grid_cols = 9;
  int backbone_channels = 64;       // width of the stem and residual stage
  int backbone_embed_dim = 512;
  int temporal_hidden_dim = 512;
  int spatial_token_dim = 512;
  int spatial_layers = 4;
  int spatial_heads = 8;
  int spatial_mlp_dim = 1024;
  int image_head_hidden = 256;
  int weather_dim = 8;
  int replication_factor = 10;
  bool fusion_enabled = false;
  bool fusion_test_mode = false;
  bool backbone_pretrained = false;
  std::string backbone_weights;  // checkpoint path, used when backbone_pretrained

  int tile_count() const { return grid_rows * grid_cols; }
  int fusion_pad_width() const { return weather_dim * replication_factor; }
  int fused_width() const { return backbone_embed_dim + fusion_pad_width(); }

  // Throws kInvalidArgument on any violated invariant.
  void validate() const;

  // 2x3 grid, 16 px tiles, 32-wide embeddings, one transformer layer.
  static ModelConfig toy();
  static ModelConfig full_scale();
};

// Widened-input hidden layer restoring the embedding width after the
// replicated weather vector is appended.
struct FusionBlock {
  int embed_dim = 0;
  int weather_dim = 0;
  int replication_factor = 0;
  bool rectify = true;

  int input_width() const { return embed_dim + weather_dim * replication_factor; }
  int output_width() const { return embed_dim; }
};

struct ModelOutput {
  std::vector<double> cnn_tile_logits;
  std::vector<double> temporal_tile_logits;
  std::vector<double> spatial_tile_logits;
  double image_logit = 0.0;

  double image_probability() const;
  std::vector<double> tile_probabilities(const std::vector<double>& logits) const;
};

// Logit variables of one forward pass, still attached to the tape.
struct OutputVars {
  Var cnn_tile_logits;       // tiles x 1
  Var temporal_tile_logits;  // tiles x 1
  Var spatial_tile_logits;   // tiles x 1
  Var image_logit;           // 1 x 1

  ModelOutput values() const;
};

// One (previous, current) tile pair ready for the network. Tiles are stored
// as (tiles*tile*tile) x 3 feature maps (see nn::FeatureShape).
struct ModelInput {
  Matrix previous_tiles;
  Matrix current_tiles;
  std::optional<std::array<double, 8>> weather;
  bool weather_normalized = true;
};

enum class Stage { kVanilla, kMultimodal };

std::string to_string(Stage stage);
Stage parse_stage(const std::string& text);

class SmokeyNet {
 public:
  // Random initialization from `seed`.
  SmokeyNet(ModelConfig config, uint64_t seed);
  SmokeyNet(ModelConfig config, nn::ParameterSet params);

  const ModelConfig& config() const { return config_; }
  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }

  FusionBlock backbone_fusion() const;
  FusionBlock temporal_fusion() const;

  /// Per-tile embeddings, tiles x embed_dim; frames are encoded independently.
  Var encode_tiles(nn::Tape& tape, const Matrix& tiles);

  /// Appends the replicated weather row to every tile embedding and maps the
  /// widened vector back to the embedding width. `prefix` selects the block.
  Var fuse_weather(nn::Tape& tape, Var embeddings, Var weather_row, const std::string& prefix,
                   const FusionBlock& block);

  /// Two-step recurrent combiner per tile; returns the final hidden state.
  Var temporal_combine(nn::Tape& tape, Var previous, Var current);

  struct SpatialResult {
    Var tile_tokens;  // tiles x token_dim
    Var cls_token;    // 1 x token_dim
  };
  SpatialResult spatial_encode(nn::Tape& tape, Var tile_embeddings);

  OutputVars predict_heads(nn::Tape& tape, Var cnn_embeddings, Var temporal_embeddings,
                           const SpatialResult& spatial);

  // `weather_override` replaces the input's weather with an externally owned
  // variable (used for input-gradient checks).
  OutputVars forward(nn::Tape& tape, const ModelInput& input,
                     std::optional<Var> weather_override = std::nullopt);

  // Evaluation-mode forward on a non-recording tape.
  ModelOutput predict(const ModelInput& input);

 private:
  void build(uint64_t seed);
  Var param(nn::Tape& tape, const std::string& name);
  Var apply_linear(nn::Tape& tape, Var x, const std::string& prefix);

  ModelConfig config_;
  nn::ParameterSet params_;
};

// Names of the fusion-block parameters that receive random (or test-mode)
// initialization when a vanilla model is widened.
std::vector<std::string> fusion_parameter_names();

}  // namespace smokeynet::model
