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

#include "smokeynet/experiment.hpp"

#include <fmt/format.h>

#include "smokeynet/error.hpp"

namespace smokeynet::experiment {

namespace fs = std::filesystem;
using training::Arm;

void SuiteConfig::validate() const {
  vanilla_model.validate();
  multimodal_model.validate();
  if (vanilla_model.fusion_enabled) fail(ErrorCode::kInvalidArgument, "vanilla model must not fuse weather");
  if (!multimodal_model.fusion_enabled) {
    fail(ErrorCode::kInvalidArgument, "multimodal model must enable fusion");
  }
  stage_one.validate();
  stage_two.validate();
  if (seeds.empty()) fail(ErrorCode::kInvalidArgument, "suite needs at least one seed");
}

model::ModelConfig multimodal_of(const model::ModelConfig& vanilla) {
  auto mm = vanilla;
  mm.fusion_enabled = true;
  mm.fusion_test_mode = false;
  return mm;
}

dataset::Corpus load_corpus(const fs::path& data_root, const image::TileGeometry& geometry,
                            const dataset::DatasetSplit& split) {
  auto corpus = dataset::Corpus::load(data_root, geometry);
  bool has_weather = !corpus.fires().empty();
  for (const auto& f : corpus.fires()) has_weather = has_weather && !f.raw_weather.empty();
  if (has_weather) corpus.set_normalization(corpus.fit_normalization(split.train));
  return corpus;
}

SuiteResult run_experiment_suite(const dataset::Corpus& corpus, const dataset::DatasetSplit& split,
                                 const SuiteConfig& config, const fs::path& out_dir) {
  config.validate();
  split.validate();
  if (split.test.empty()) fail(ErrorCode::kInvalidArgument, "suite needs test fires");
  SuiteResult result;
  for (Arm arm : training::kAllArms) result.logs.push_back({training::to_string(arm), {}});

  for (uint64_t seed : config.seeds) {
    const fs::path seed_dir = out_dir / fmt::format("seed_{}", seed);
    try {
      auto one = config.stage_one;
      one.optimizer.seed = seed;
      one.weather = training::WeatherSource::kNone;
      const auto train = training::SampleSet::of(corpus, split.train);
      const auto val = training::SampleSet::of(corpus, split.val);
      const auto vanilla =
          training::train_stage(model::make_model(config.vanilla_model, seed),
                                model::Stage::kVanilla, train, val, one, seed_dir / "vanilla");
      for (size_t a = 0; a < training::kAllArms.size(); ++a) {
        const Arm arm = training::kAllArms[a];
        auto two = config.stage_two;
        two.optimizer.seed = seed;
        const fs::path arm_dir = seed_dir / training::to_string(arm);
        const auto best = training::run_control_arm(corpus, split, vanilla.best,
                                                    config.multimodal_model, two, arm, arm_dir);
        auto net = best.best.to_model();
        const auto source = arm == Arm::kBaseline        ? training::WeatherSource::kNone
                            : arm == Arm::kRealWeather   ? training::WeatherSource::kReal
                                                         : training::WeatherSource::kRandom;
        auto log = training::predict_log(net, corpus, split.test, source, seed);
        eval::write_prediction_log(arm_dir / "predictions.csv", log);
        result.logs[a].runs.emplace_back(fmt::format("seed_{}", seed), std::move(log));
      }
    } catch (const Error& e) {
      rethrow_with_context(e, fmt::format("seed {}", seed));
    }
  }
  result.reports = eval::write_suite_report(out_dir, result.logs, config.threshold, config.horizon);
  return result;
}

}  // namespace smokeynet::experiment
