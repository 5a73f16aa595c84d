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

// Command-line front end: corpus generation, training, evaluation and the
// three-arm comparison.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "smokeynet/checkpoint.hpp"
#include "smokeynet/dataset.hpp"
#include "smokeynet/error.hpp"
#include "smokeynet/experiment.hpp"
#include "smokeynet/metrics.hpp"
#include "smokeynet/report.hpp"
#include "smokeynet/training.hpp"
#include "smokeynet/weather_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace smokeynet;

namespace {

struct ModelFlags {
  bool full_scale = false;
  int tile_size = 16;
  int grid_rows = 2;
  int grid_cols = 3;
  int channels = 8;
  int embed_dim = 32;
  int layers = 1;
  int heads = 2;
  int mlp_dim = 64;
  int head_hidden = 16;
  int replication = 10;
  std::string backbone_weights;

  void add(CLI::App* app) {
    app->add_flag("--full-scale", full_scale, "5x9 grid of 224 px tiles with 512-wide embeddings");
    app->add_option("--tile-size", tile_size, "tile edge in pixels");
    app->add_option("--grid-rows", grid_rows);
    app->add_option("--grid-cols", grid_cols);
    app->add_option("--channels", channels, "backbone stem width");
    app->add_option("--embed-dim", embed_dim, "embedding, LSTM and token width");
    app->add_option("--layers", layers, "transformer layers");
    app->add_option("--heads", heads, "attention heads");
    app->add_option("--mlp-dim", mlp_dim);
    app->add_option("--head-hidden", head_hidden, "image head hidden width");
    app->add_option("--replication", replication, "weather replication factor");
    app->add_option("--backbone-weights", backbone_weights, "checkpoint to take backbone.* from");
  }

  model::ModelConfig config() const {
    auto c = full_scale ? model::ModelConfig::full_scale() : model::ModelConfig::toy();
    if (!full_scale) {
      c.tile_size = tile_size;
      c.grid_rows = grid_rows;
      c.grid_cols = grid_cols;
      c.backbone_channels = channels;
      c.backbone_embed_dim = c.temporal_hidden_dim = c.spatial_token_dim = embed_dim;
      c.spatial_layers = layers;
      c.spatial_heads = heads;
      c.spatial_mlp_dim = mlp_dim;
      c.image_head_hidden = head_hidden;
    }
    c.replication_factor = replication;
    if (!backbone_weights.empty()) {
      c.backbone_pretrained = true;
      c.backbone_weights = backbone_weights;
    }
    c.validate();
    return c;
  }
};

struct TrainFlags {
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  int batch_size = 2;
  int epochs = 25;
  int patience = 4;
  bool no_early_stop = false;
  bool no_augment = false;
  double positive_weight = 5.0;
  std::vector<double> head_weights{1.0, 1.0, 1.0, 1.0};

  void add(CLI::App* app, const std::string& prefix = "") {
    app->add_option("--" + prefix + "lr", learning_rate, "learning rate");
    app->add_option("--" + prefix + "weight-decay", weight_decay);
    app->add_option("--" + prefix + "batch-size", batch_size);
    app->add_option("--" + prefix + "epochs", epochs, "maximum epochs");
    app->add_option("--" + prefix + "patience", patience, "early-stopping patience");
    app->add_flag("--" + prefix + "no-early-stop", no_early_stop);
    app->add_flag("--" + prefix + "no-augment", no_augment);
    app->add_option("--" + prefix + "positive-weight", positive_weight, "image BCE positive weight");
    app->add_option("--" + prefix + "head-weights", head_weights,
                    "cnn_tile temporal_tile spatial_tile image")
        ->expected(4);
  }

  training::TrainConfig config(uint64_t seed) const {
    training::TrainConfig c;
    c.optimizer.learning_rate = learning_rate;
    c.optimizer.weight_decay = weight_decay;
    c.optimizer.batch_size = batch_size;
    c.optimizer.max_epochs = epochs;
    c.optimizer.seed = seed;
    c.early_stop.enabled = !no_early_stop;
    c.early_stop.patience = patience;
    c.augment = !no_augment;
    c.loss.image_positive_weight = positive_weight;
    for (size_t i = 0; i < 4; ++i) c.loss.head_weights[i] = head_weights.at(i);
    c.validate();
    return c;
  }
};

image::TileGeometry geometry_of(const model::ModelConfig& c) {
  if (c.tile_size == 224 && c.grid_rows == 5 && c.grid_cols == 9) return image::kFullScaleGeometry;
  return image::TileGeometry::for_grid(c.grid_rows, c.grid_cols, c.tile_size,
                                       c.tile_size - c.tile_size / 8);
}

const std::vector<std::string>& split_ids(const dataset::DatasetSplit& s, const std::string& name) {
  if (name == "train") return s.train;
  if (name == "val") return s.val;
  if (name == "test") return s.test;
  fail(ErrorCode::kInvalidArgument, fmt::format("unknown split '{}'", name));
}

dataset::DatasetSplit resolve_split(const fs::path& data, uint64_t seed) {
  const auto manifest = dataset::read_manifest(data / "manifest.csv");
  bool labelled = true;
  for (const auto& e : manifest) labelled = labelled && !e.split.empty();
  if (labelled) return dataset::split_from_manifest(manifest);
  return dataset::make_splits(manifest, dataset::SplitFractions{}, seed);
}

void print_json(const json& j) { std::cout << j.dump(2) << std::endl; }

json report_json(const eval::MetricsReport& r) {
  return {{"model", r.model},
          {"n_runs", r.n_runs},
          {"accuracy", {r.accuracy.mean, r.accuracy.sd}},
          {"precision", {r.precision.mean, r.precision.sd}},
          {"recall", {r.recall.mean, r.recall.sd}},
          {"f1", {r.f1.mean, r.f1.sd}},
          {"ttd", {r.ttd.mean, r.ttd.sd}},
          {"censored_fire_count", r.censored_fire_count}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SmokeyNet wildfire smoke detection with weather fusion"};
  app.set_config("--config", "", "TOML/INI file providing defaults for any flag");
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string synth_spec, synth_out;
  dataset::SyntheticSpec spec;
  std::string coupling = "none";
  synth->add_option("--spec", synth_spec, "JSON spec; flags override its fields");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--n-fires", spec.n_fires);
  synth->add_option("--coupling", coupling, "none or discriminative");
  synth->add_option("--seed", spec.seed);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "validate a corpus and fit weather statistics");
  std::string prep_data, prep_stats;
  ModelFlags prep_model;
  uint64_t prep_seed = 1;
  prepare->add_option("--data", prep_data)->required();
  prepare->add_option("--stats-out", prep_stats, "write normalization statistics here");
  prepare->add_option("--seed", prep_seed, "split seed when the manifest has no split column");
  prep_model.add(prepare);

  // train
  auto* train = app.add_subcommand("train", "train one stage or arm");
  std::string train_data, train_out, train_stage = "vanilla", train_arm = "real_weather", train_init;
  uint64_t train_seed = 1;
  ModelFlags train_model;
  TrainFlags train_flags;
  bool train_test_mode = false;
  train->add_option("--data", train_data)->required();
  train->add_option("--out", train_out, "run directory")->required();
  train->add_option("--stage", train_stage, "vanilla or multimodal");
  train->add_option("--arm", train_arm, "baseline, random_weather or real_weather (multimodal stage)");
  train->add_option("--init", train_init, "vanilla checkpoint for the second stage");
  train->add_option("--seed", train_seed);
  train->add_flag("--fusion-test-mode", train_test_mode, "zero weather columns at initialization");
  train_model.add(train);
  train_flags.add(train);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "predict a split and compute metrics");
  std::string eval_data, eval_ckpt, eval_out, eval_split = "test", eval_weather;
  uint64_t eval_seed = 1;
  double eval_threshold = eval::kDefaultThreshold;
  int eval_horizon = eval::kDefaultHorizon;
  evaluate->add_option("--data", eval_data)->required();
  evaluate->add_option("--checkpoint", eval_ckpt)->required();
  evaluate->add_option("--out", eval_out)->required();
  evaluate->add_option("--split", eval_split);
  evaluate->add_option("--weather", eval_weather, "none, real or random (default from checkpoint)");
  evaluate->add_option("--seed", eval_seed, "seed of random weather draws");
  evaluate->add_option("--threshold", eval_threshold);
  evaluate->add_option("--horizon", eval_horizon);

  // suite
  auto* suite = app.add_subcommand("suite", "three-arm comparison over several seeds");
  std::string suite_data, suite_synth, suite_out;
  std::vector<uint64_t> suite_seeds{1, 2, 3};
  ModelFlags suite_model;
  TrainFlags stage_one, stage_two;
  suite->add_option("--data", suite_data, "corpus directory");
  suite->add_option("--synthetic", suite_synth, "generate the corpus from this JSON spec first");
  suite->add_option("--out", suite_out)->required();
  suite->add_option("--seeds", suite_seeds);
  suite_model.add(suite);
  stage_one.add(suite, "stage1-");
  stage_two.add(suite, "stage2-");

  // report
  auto* report = app.add_subcommand("report", "table and plots from prediction logs");
  std::string report_suite, report_out;
  std::vector<std::string> report_logs;
  double report_threshold = eval::kDefaultThreshold;
  int report_horizon = eval::kDefaultHorizon;
  report->add_option("--suite-dir", report_suite, "read seed_*/<arm>/predictions.csv");
  report->add_option("--log", report_logs, "model:run_id:path, repeatable");
  report->add_option("--out", report_out)->required();
  report->add_option("--threshold", report_threshold);
  report->add_option("--horizon", report_horizon);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << std::endl;
    return 2;
  }

  try {
    if (*synth) {
      dataset::SyntheticSpec s = synth_spec.empty() ? dataset::SyntheticSpec{}
                                                    : dataset::read_synthetic_spec(synth_spec);
      if (synth->count("--n-fires")) s.n_fires = spec.n_fires;
      if (synth->count("--seed")) s.seed = spec.seed;
      if (synth->count("--coupling")) s.coupling = dataset::parse_coupling(coupling);
      dataset::generate_synthetic_dataset(s, synth_out);
      print_json({{"out", synth_out}, {"fires", s.n_fires}, {"coupling", dataset::to_string(s.coupling)}});
    } else if (*prepare) {
      const auto cfg = prep_model.config();
      const auto split = resolve_split(prep_data, prep_seed);
      const auto corpus = experiment::load_corpus(prep_data, geometry_of(cfg), split);
      if (!prep_stats.empty()) weather::write_normalization_stats(prep_stats, corpus.normalization());
      print_json({{"fires", corpus.fires().size()},
                  {"train", split.train.size()},
                  {"val", split.val.size()},
                  {"test", split.test.size()},
                  {"samples", corpus.samples(split.train).size() + corpus.samples(split.val).size() +
                                  corpus.samples(split.test).size()},
                  {"weather", !corpus.normalization().empty()}});
    } else if (*train) {
      const auto cfg = train_model.config();
      const auto split = resolve_split(train_data, train_seed);
      const auto corpus = experiment::load_corpus(train_data, geometry_of(cfg), split);
      const auto tcfg = train_flags.config(train_seed);
      const auto stage = model::parse_stage(train_stage);
      training::StageResult result;
      if (stage == model::Stage::kVanilla) {
        result = training::train_stage(model::make_model(cfg, train_seed), stage,
                                       training::SampleSet::of(corpus, split.train),
                                       training::SampleSet::of(corpus, split.val), tcfg, train_out);
      } else {
        if (train_init.empty()) fail(ErrorCode::kInvalidArgument, "multimodal stage needs --init");
        auto mm = experiment::multimodal_of(cfg);
        mm.fusion_test_mode = train_test_mode;
        result = training::run_control_arm(corpus, split, model::load_checkpoint(train_init), mm, tcfg,
                                           training::parse_arm(train_arm), train_out);
      }
      print_json({{"run_dir", train_out},
                  {"best_epoch", result.state.best_epoch},
                  {"best_val_loss", result.state.best_val_loss},
                  {"epochs_run", result.state.epoch}});
    } else if (*evaluate) {
      const auto ckpt = model::load_checkpoint(eval_ckpt);
      const auto split = resolve_split(eval_data, eval_seed);
      auto corpus = dataset::Corpus::load(eval_data, geometry_of(ckpt.config));
      if (!ckpt.weather_stats.empty()) corpus.set_normalization(ckpt.weather_stats);
      const auto source = !eval_weather.empty() ? training::parse_weather_source(eval_weather)
                          : ckpt.config.fusion_enabled ? training::WeatherSource::kReal
                                                       : training::WeatherSource::kNone;
      auto net = ckpt.to_model();
      const auto log = training::predict_log(net, corpus, split_ids(split, eval_split), source, eval_seed);
      fs::create_directories(eval_out);
      eval::write_prediction_log(fs::path(eval_out) / "predictions.csv", log);
      const auto rep = eval::aggregate_runs(
          model::to_string(ckpt.stage), {eval::evaluate_run(eval_split, log, eval_threshold, eval_horizon)});
      eval::write_metrics_report(fs::path(eval_out) / "metrics.csv", rep);
      print_json(report_json(rep));
    } else if (*suite) {
      fs::path data = suite_data;
      if (!suite_synth.empty()) {
        data = fs::path(suite_out) / "corpus";
        dataset::generate_synthetic_dataset(dataset::read_synthetic_spec(suite_synth), data);
      }
      if (data.empty()) fail(ErrorCode::kInvalidArgument, "suite needs --data or --synthetic");
      experiment::SuiteConfig sc;
      sc.vanilla_model = suite_model.config();
      sc.multimodal_model = experiment::multimodal_of(sc.vanilla_model);
      sc.stage_one = stage_one.config(1);
      sc.stage_two = stage_two.config(1);
      sc.seeds = suite_seeds;
      const auto split = resolve_split(data, suite_seeds.front());
      const auto corpus = experiment::load_corpus(data, geometry_of(sc.vanilla_model), split);
      const auto result = experiment::run_experiment_suite(corpus, split, sc, suite_out);
      json rows = json::array();
      for (const auto& r : result.reports) rows.push_back(report_json(r));
      print_json({{"table", (fs::path(suite_out) / "table.csv").string()}, {"models", rows}});
    } else if (*report) {
      std::map<std::string, eval::ArmLogs> arms;
      std::vector<std::string> order;
      auto add = [&](const std::string& model, const std::string& run, const fs::path& path) {
        if (!arms.count(model)) {
          order.push_back(model);
          arms[model].model = model;
        }
        arms[model].runs.emplace_back(run, eval::read_prediction_log(path));
      };
      if (!report_suite.empty()) {
        std::vector<fs::path> seeds;
        for (const auto& d : fs::directory_iterator(report_suite)) {
          if (d.is_directory() && d.path().filename().string().rfind("seed_", 0) == 0) seeds.push_back(d.path());
        }
        std::sort(seeds.begin(), seeds.end());
        for (auto arm : training::kAllArms) {
          for (const auto& s : seeds) {
            const auto p = s / training::to_string(arm) / "predictions.csv";
            if (fs::exists(p)) add(training::to_string(arm), s.filename().string(), p);
          }
        }
      }
      for (const auto& spec_text : report_logs) {
        const auto a = spec_text.find(':');
        const auto b = spec_text.find(':', a == std::string::npos ? a : a + 1);
        if (a == std::string::npos || b == std::string::npos) {
          fail(ErrorCode::kInvalidArgument, fmt::format("--log expects model:run_id:path, got '{}'", spec_text));
        }
        add(spec_text.substr(0, a), spec_text.substr(a + 1, b - a - 1), spec_text.substr(b + 1));
      }
      if (order.empty()) fail(ErrorCode::kInvalidArgument, "report: no prediction logs given");
      std::vector<eval::ArmLogs> logs;
      for (const auto& m : order) logs.push_back(arms[m]);
      const auto reports = eval::write_suite_report(report_out, logs, report_threshold, report_horizon);
      json rows = json::array();
      for (const auto& r : reports) rows.push_back(report_json(r));
      print_json({{"table", (fs::path(report_out) / "table.csv").string()}, {"models", rows}});
    }
  } catch (const Error& e) {
    std::cerr << json{{"error", to_string(e.code())}, {"message", e.what()}}.dump() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << std::endl;
    return 1;
  }
  return 0;
}
