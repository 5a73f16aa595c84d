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
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smokeynet/checkpoint.hpp"
#include "smokeynet/dataset.hpp"
#include "smokeynet/metrics.hpp"
#include "smokeynet/model.hpp"

namespace smokeynet::training {

using model::Checkpoint;
using model::ModelConfig;
using model::SmokeyNet;

enum Head { kCnnTile = 0, kTemporalTile = 1, kSpatialTile = 2, kImage = 3 };

struct LossConfig {
  double image_positive_weight = 5.0;
  std::array<double, 4> head_weights{1.0, 1.0, 1.0, 1.0};  // indexed by Head

  void validate() const;
};

struct LossBreakdown {
  std::array<double, 4> heads{};  // unweighted, indexed by Head
  double total = 0.0;
};

// Tile heads: BCE averaged over tiles. Image head: BCE with positive weight.
nn::Var compute_losses(nn::Tape& tape, const model::OutputVars& output,
                       const std::vector<uint8_t>& tile_labels, bool image_label,
                       const LossConfig& config, LossBreakdown* breakdown = nullptr);
LossBreakdown compute_losses(const model::ModelOutput& output,
                             const std::vector<uint8_t>& tile_labels, bool image_label,
                             const LossConfig& config);

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  int batch_size = 2;
  int max_epochs = 25;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  uint64_t seed = 1;

  void validate() const;
};

// Adam moments with decoupled weight decay.
class AdamW {
 public:
  explicit AdamW(OptimizerConfig config) : config_(config) {}

  // Applies one update from the accumulated gradients, then clears them.
  void step(nn::ParameterSet& params);
  long steps() const { return steps_; }

 private:
  struct Moments {
    nn::Matrix m;
    nn::Matrix v;
  };
  OptimizerConfig config_;
  std::map<std::string, Moments> moments_;
  long steps_ = 0;
};

struct EarlyStopPolicy {
  bool enabled = true;
  int patience = 4;
  double min_delta = 0.0;

  void validate() const;
};

enum class WeatherSource { kNone, kReal, kRandom };

std::string to_string(WeatherSource source);
WeatherSource parse_weather_source(const std::string& text);

struct TrainConfig {
  OptimizerConfig optimizer;
  LossConfig loss;
  EarlyStopPolicy early_stop;
  bool augment = true;
  image::AugmentOptions augment_options;
  WeatherSource weather = WeatherSource::kNone;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 0 is the evaluation before any update
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double val_loss = 0.0;
  eval::ClassificationMetrics val_metrics;
  double seconds = 0.0;
};

struct TrainState {
  int epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  std::optional<Checkpoint> best_checkpoint;
  int epochs_since_improvement = 0;
  std::vector<EpochRecord> history;

  // Appends the record; returns true when it improved the best loss by more
  // than `min_delta`.
  bool record(const EpochRecord& rec, double min_delta);
};

// Model input for one sample. `weather_seed` picks the random draw for
// WeatherSource::kRandom.
model::ModelInput to_model_input(const dataset::AlignedSample& sample, WeatherSource source,
                                 uint64_t weather_seed);

// Seed of the random weather vector for a sample in a given epoch; epoch -1
// is used for evaluation.
uint64_t random_weather_seed(uint64_t base, int epoch, const dataset::SampleRef& ref);

struct SampleSet {
  const dataset::Corpus* corpus = nullptr;
  std::vector<dataset::SampleRef> refs;

  static SampleSet of(const dataset::Corpus& corpus, const std::vector<std::string>& fire_ids);
  bool empty() const { return refs.empty(); }
};

struct EpochStats {
  double mean_loss = 0.0;
  size_t samples = 0;
  size_t steps = 0;
};

EpochStats train_epoch(SmokeyNet& net, AdamW& optimizer, const SampleSet& data,
                       const TrainConfig& config, int epoch);

struct ValidationResult {
  double loss = 0.0;
  eval::ClassificationMetrics metrics;
  eval::PredictionLog log;
};

ValidationResult validate(SmokeyNet& net, const SampleSet& data, const TrainConfig& config);

struct StageResult {
  Checkpoint best;
  TrainState state;
};

// Trains `net` for up to config.optimizer.max_epochs with early stopping on
// validation loss. When `run_dir` is set, writes config.json, epochs.csv and
// best.ckpt there.
StageResult train_stage(SmokeyNet net, model::Stage stage, const SampleSet& train,
                        const SampleSet& val, const TrainConfig& config,
                        const std::optional<std::filesystem::path>& run_dir = std::nullopt);

struct TwoStageResult {
  StageResult vanilla;
  StageResult multimodal;
};

TwoStageResult two_stage_train(const dataset::Corpus& corpus, const dataset::DatasetSplit& split,
                               const ModelConfig& vanilla_config,
                               const ModelConfig& multimodal_config,
                               const TrainConfig& stage_one, const TrainConfig& stage_two,
                               const std::optional<std::filesystem::path>& run_dir = std::nullopt);

enum class Arm { kBaseline, kRandomWeather, kRealWeather };

std::string to_string(Arm arm);
Arm parse_arm(const std::string& text);
inline constexpr std::array<Arm, 3> kAllArms = {Arm::kBaseline, Arm::kRandomWeather,
                                                Arm::kRealWeather};

/// Second stage from a vanilla checkpoint. Baseline continues the vanilla
/// model without weather; the weather arms widen it with init_from_vanilla
/// and feed real or per-sample random weather.
StageResult run_control_arm(const dataset::Corpus& corpus, const dataset::DatasetSplit& split,
                            const Checkpoint& stage_one, const ModelConfig& multimodal_config,
                            const TrainConfig& stage_two, Arm arm,
                            const std::optional<std::filesystem::path>& run_dir = std::nullopt);

// Evaluation-mode predictions on `fire_ids`; weather follows `source`.
eval::PredictionLog predict_log(SmokeyNet& net, const dataset::Corpus& corpus,
                                const std::vector<std::string>& fire_ids, WeatherSource source,
                                uint64_t seed);

std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);

}  // namespace smokeynet::training
