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
#include <vector>

#include "smokeynet/dataset.hpp"
#include "smokeynet/model.hpp"
#include "smokeynet/report.hpp"
#include "smokeynet/training.hpp"

namespace smokeynet::experiment {

// The vanilla config with fusion enabled.
model::ModelConfig multimodal_of(const model::ModelConfig& vanilla);

struct SuiteConfig {
  model::ModelConfig vanilla_model = model::ModelConfig::toy();
  model::ModelConfig multimodal_model = multimodal_of(model::ModelConfig::toy());
  training::TrainConfig stage_one;
  training::TrainConfig stage_two;
  std::vector<uint64_t> seeds{1, 2, 3};
  double threshold = eval::kDefaultThreshold;
  int horizon = eval::kDefaultHorizon;

  void validate() const;
};

struct SuiteResult {
  std::vector<eval::MetricsReport> reports;  // baseline, random_weather, real_weather
  std::vector<eval::ArmLogs> logs;
};

/// Loads the corpus and fits weather normalization on the training fires.
dataset::Corpus load_corpus(const std::filesystem::path& data_root,
                            const image::TileGeometry& geometry,
                            const dataset::DatasetSplit& split);

/// For every seed: one vanilla run, then the three second-stage arms from
/// its best checkpoint, each evaluated on the test fires. Run directories go
/// under out_dir/seed_<s>/<arm>, the table and plots under out_dir.
SuiteResult run_experiment_suite(const dataset::Corpus& corpus, const dataset::DatasetSplit& split,
                                 const SuiteConfig& config, const std::filesystem::path& out_dir);

}  // namespace smokeynet::experiment
