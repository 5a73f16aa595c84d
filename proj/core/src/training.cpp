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

#include "smokeynet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "smokeynet/csv.hpp"
#include "smokeynet/error.hpp"

namespace smokeynet::training {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t splitmix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t mix(uint64_t a, uint64_t b) { return splitmix(a ^ splitmix(b)); }

nn::Matrix label_column(const std::vector<uint8_t>& labels) {
  nn::Matrix m(static_cast<Eigen::Index>(labels.size()), 1);
  for (size_t i = 0; i < labels.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = labels[i] ? 1.0 : 0.0;
  return m;
}

nn::Matrix tiles_to_matrix(const image::TileGrid& grid) {
  if (grid.tiles.empty()) fail(ErrorCode::kShapeMismatch, "sample has no tiles");
  const int ts = grid.tiles.front().rows;
  nn::Matrix out(static_cast<Eigen::Index>(grid.tiles.size()) * ts * ts, 3);
  Eigen::Index row = 0;
  for (const auto& tile : grid.tiles) {
    if (tile.rows != ts || tile.cols != ts || tile.type() != CV_32FC3) {
      fail(ErrorCode::kShapeMismatch, "tiles must be square CV_32FC3 of equal size");
    }
    for (int y = 0; y < ts; ++y) {
      const auto* p = tile.ptr<cv::Vec3f>(y);
      for (int x = 0; x < ts; ++x, ++row) {
        out(row, 0) = p[x][0];
        out(row, 1) = p[x][1];
        out(row, 2) = p[x][2];
      }
    }
  }
  return out;
}

std::string rng_state_for(uint64_t seed, int epoch) {
  std::mt19937_64 rng(mix(seed, static_cast<uint64_t>(epoch)));
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

void write_epochs_csv(const fs::path& path, const TrainState& state) {
  csv::Table t{{"epoch", "train_loss", "val_loss", "val_accuracy", "val_precision", "val_recall",
                "val_f1", "seconds"},
               {}};
  for (const auto& r : state.history) {
    t.rows.push_back({std::to_string(r.epoch), csv::format_double(r.train_loss),
                      csv::format_double(r.val_loss), csv::format_double(r.val_metrics.accuracy),
                      csv::format_double(r.val_metrics.precision),
                      csv::format_double(r.val_metrics.recall),
                      csv::format_double(r.val_metrics.f1), csv::format_double(r.seconds)});
  }
  csv::write(path, t);
}

bool corpus_has_normalized_weather(const dataset::Corpus& corpus) {
  for (const auto& f : corpus.fires()) {
    if (f.weather.empty() || !f.weather.front().normalized) return false;
  }
  return !corpus.fires().empty();
}

}  // namespace

void LossConfig::validate() const {
  if (!(image_positive_weight > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "image_positive_weight must be positive");
  }
  for (double w : head_weights) {
    if (!(w >= 0.0)) fail(ErrorCode::kInvalidArgument, "head weights must be non-negative");
  }
}

nn::Var compute_losses(nn::Tape& tape, const model::OutputVars& output,
                       const std::vector<uint8_t>& tile_labels, bool image_label,
                       const LossConfig& config, LossBreakdown* breakdown) {
  config.validate();
  if (static_cast<Eigen::Index>(tile_labels.size()) != output.cnn_tile_logits.rows()) {
    fail(ErrorCode::kShapeMismatch,
         fmt::format("compute_losses: {} tile labels for {} tiles", tile_labels.size(),
                     output.cnn_tile_logits.rows()));
  }
  for (const auto* v : {&output.cnn_tile_logits, &output.temporal_tile_logits,
                        &output.spatial_tile_logits, &output.image_logit}) {
    if (!v->value().allFinite()) fail(ErrorCode::kNumeric, "compute_losses: non-finite logits");
  }
  const nn::Matrix tiles = label_column(tile_labels);
  nn::Matrix image(1, 1);
  image(0, 0) = image_label ? 1.0 : 0.0;
  const std::array<nn::Var, 4> losses = {
      nn::bce_with_logits(output.cnn_tile_logits, tiles),
      nn::bce_with_logits(output.temporal_tile_logits, tiles),
      nn::bce_with_logits(output.spatial_tile_logits, tiles),
      nn::bce_with_logits(output.image_logit, image, config.image_positive_weight)};
  nn::Var total = nn::scale(losses[0], config.head_weights[0]);
  for (size_t h = 1; h < losses.size(); ++h) {
    total = nn::add(total, nn::scale(losses[h], config.head_weights[h]));
  }
  if (breakdown) {
    for (size_t h = 0; h < losses.size(); ++h) breakdown->heads[h] = losses[h].value()(0, 0);
    breakdown->total = total.value()(0, 0);
  }
  (void)tape;
  return total;
}

LossBreakdown compute_losses(const model::ModelOutput& output,
                             const std::vector<uint8_t>& tile_labels, bool image_label,
                             const LossConfig& config) {
  nn::Tape tape(false);
  auto column = [&tape](const std::vector<double>& v) {
    nn::Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    for (size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return tape.constant(std::move(m));
  };
  nn::Matrix image(1, 1);
  image(0, 0) = output.image_logit;
  const model::OutputVars vars{column(output.cnn_tile_logits), column(output.temporal_tile_logits),
                               column(output.spatial_tile_logits), tape.constant(image)};
  LossBreakdown out;
  compute_losses(tape, vars, tile_labels, image_label, config, &out);
  return out;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0)) {
    fail(ErrorCode::kInvalidArgument, "learning_rate and weight_decay must be non-negative");
  }
  if (batch_size < 1) fail(ErrorCode::kInvalidArgument, "batch_size must be positive");
  if (max_epochs < 0) fail(ErrorCode::kInvalidArgument, "max_epochs must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "invalid Adam moment parameters");
  }
}

void AdamW::step(nn::ParameterSet& params) {
  ++steps_;
  const double lr = config_.learning_rate;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (auto& [name, p] : params) {
    auto& mom = moments_[name];
    if (mom.m.size() == 0) {
      mom.m = nn::Matrix::Zero(p.value.rows(), p.value.cols());
      mom.v = nn::Matrix::Zero(p.value.rows(), p.value.cols());
    }
    if (p.grad.size() == 0) p.grad = nn::Matrix::Zero(p.value.rows(), p.value.cols());
    mom.m = config_.beta1 * mom.m + (1.0 - config_.beta1) * p.grad;
    mom.v = config_.beta2 * mom.v + (1.0 - config_.beta2) * p.grad.cwiseProduct(p.grad);
    p.value *= 1.0 - lr * config_.weight_decay;
    p.value.array() -=
        lr * (mom.m.array() / c1) / ((mom.v.array() / c2).sqrt() + config_.epsilon);
  }
  params.zero_grad();
}

void EarlyStopPolicy::validate() const {
  if (patience < 1) fail(ErrorCode::kInvalidArgument, "patience must be at least 1");
  if (!(min_delta >= 0.0)) fail(ErrorCode::kInvalidArgument, "min_delta must be non-negative");
}

std::string to_string(WeatherSource source) {
  switch (source) {
    case WeatherSource::kNone: return "none";
    case WeatherSource::kReal: return "real";
    case WeatherSource::kRandom: return "random";
  }
  return "none";
}

WeatherSource parse_weather_source(const std::string& text) {
  if (text == "none") return WeatherSource::kNone;
  if (text == "real") return WeatherSource::kReal;
  if (text == "random") return WeatherSource::kRandom;
  fail(ErrorCode::kInvalidArgument, fmt::format("unknown weather source '{}'", text));
}

void TrainConfig::validate() const {
  optimizer.validate();
  loss.validate();
  early_stop.validate();
}

bool TrainState::record(const EpochRecord& rec, double min_delta) {
  history.push_back(rec);
  epoch = rec.epoch;
  if (rec.val_loss < best_val_loss - min_delta || best_epoch < 0) {
    best_val_loss = std::min(best_val_loss, rec.val_loss);
    best_epoch = rec.epoch;
    epochs_since_improvement = 0;
    return true;
  }
  ++epochs_since_improvement;
  return false;
}

model::ModelInput to_model_input(const dataset::AlignedSample& sample, WeatherSource source,
                                 uint64_t weather_seed) {
  model::ModelInput in;
  in.previous_tiles = tiles_to_matrix(sample.previous);
  in.current_tiles = tiles_to_matrix(sample.current);
  switch (source) {
    case WeatherSource::kNone:
      break;
    case WeatherSource::kReal:
      in.weather = sample.weather.values;
      in.weather_normalized = sample.weather.normalized;
      break;
    case WeatherSource::kRandom:
      in.weather = weather::random_weather_vector(weather_seed, sample.weather.timestamp).values;
      in.weather_normalized = true;
      break;
  }
  return in;
}

uint64_t random_weather_seed(uint64_t base, int epoch, const dataset::SampleRef& ref) {
  return mix(mix(mix(base, static_cast<uint64_t>(static_cast<int64_t>(epoch))), ref.fire),
             ref.frame);
}

SampleSet SampleSet::of(const dataset::Corpus& corpus, const std::vector<std::string>& fire_ids) {
  return SampleSet{&corpus, corpus.samples(fire_ids)};
}

EpochStats train_epoch(SmokeyNet& net, AdamW& optimizer, const SampleSet& data,
                       const TrainConfig& config, int epoch) {
  if (data.empty() || !data.corpus) fail(ErrorCode::kInvalidArgument, "train_epoch: no samples");
  const uint64_t seed = config.optimizer.seed;
  std::vector<size_t> order(data.refs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(mix(seed, static_cast<uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);

  const size_t batch = static_cast<size_t>(config.optimizer.batch_size);
  EpochStats stats;
  double sum = 0.0;
  net.parameters().zero_grad();
  for (size_t start = 0; start < order.size(); start += batch) {
    const size_t end = std::min(order.size(), start + batch);
    for (size_t i = start; i < end; ++i) {
      const auto& ref = data.refs[order[i]];
      const uint64_t sample_seed = random_weather_seed(seed ^ 0xa5a5a5a5ULL, epoch, ref);
      const auto sample = data.corpus->sample(
          ref, config.augment ? &config.augment_options : nullptr, sample_seed);
      const auto input = to_model_input(sample, config.weather, random_weather_seed(seed, epoch, ref));
      nn::Tape tape;
      double loss_value = 0.0;
      try {
        const auto out = net.forward(tape, input);
        const auto loss = compute_losses(tape, out, sample.tile_labels, sample.image_label, config.loss);
        loss_value = loss.value()(0, 0);
        if (!std::isfinite(loss_value)) fail(ErrorCode::kNumeric, "training loss is not finite");
        tape.backward(nn::scale(loss, 1.0 / static_cast<double>(end - start)));
      } catch (const Error& e) {
        rethrow_with_context(e, fmt::format("epoch {}: divergence on {} offset {}", epoch,
                                            sample.fire_id, sample.offset));
      }
      sum += loss_value;
      ++stats.samples;
    }
    optimizer.step(net.parameters());
    ++stats.steps;
  }
  stats.mean_loss = sum / static_cast<double>(stats.samples);
  return stats;
}

eval::PredictionLog predict_log(SmokeyNet& net, const dataset::Corpus& corpus,
                                const std::vector<std::string>& fire_ids, WeatherSource source,
                                uint64_t seed) {
  const auto data = SampleSet::of(corpus, fire_ids);
  eval::PredictionLog log;
  for (const auto& ref : data.refs) {
    const auto sample = corpus.sample(ref);
    const auto out = net.predict(to_model_input(sample, source, random_weather_seed(seed, -1, ref)));
    log.rows.push_back({sample.fire_id, sample.offset, out.image_probability(), sample.image_label});
  }
  return log;
}

ValidationResult validate(SmokeyNet& net, const SampleSet& data, const TrainConfig& config) {
  if (data.empty() || !data.corpus) fail(ErrorCode::kInvalidArgument, "validate: empty validation set");
  ValidationResult res;
  double sum = 0.0;
  for (const auto& ref : data.refs) {
    const auto sample = data.corpus->sample(ref);
    const auto input =
        to_model_input(sample, config.weather, random_weather_seed(config.optimizer.seed, -1, ref));
    const auto out = net.predict(input);
    sum += compute_losses(out, sample.tile_labels, sample.image_label, config.loss).total;
    res.log.rows.push_back({sample.fire_id, sample.offset, out.image_probability(), sample.image_label});
  }
  res.loss = sum / static_cast<double>(data.refs.size());
  res.metrics = eval::prf_metrics(eval::confusion_counts(res.log, eval::kDefaultThreshold));
  return res;
}

StageResult train_stage(SmokeyNet net, model::Stage stage, const SampleSet& train,
                        const SampleSet& val, const TrainConfig& config,
                        const std::optional<fs::path>& run_dir) {
  config.validate();
  const bool fused = net.config().fusion_enabled;
  if (fused != (config.weather != WeatherSource::kNone)) {
    fail(ErrorCode::kInvalidArgument,
         fused ? "fusion-enabled model needs a weather source"
               : "weather source given for a model without fusion");
  }
  if (config.weather == WeatherSource::kReal && !corpus_has_normalized_weather(*train.corpus)) {
    fail(ErrorCode::kInvalidArgument, "real weather requested but the corpus has no normalized weather");
  }
  if (run_dir) {
    fs::create_directories(*run_dir);
    std::ofstream cfg(*run_dir / "config.json");
    cfg << json{{"stage", model::to_string(stage)},
                {"model", json::parse(model::config_to_json(net.config()))},
                {"train", json::parse(train_config_to_json(config))}}
               .dump(2)
        << '\n';
  }

  AdamW optimizer(config.optimizer);
  StageResult result;
  auto& state = result.state;
  const auto& stats = train.corpus->normalization();
  auto snapshot = [&](double loss, int epoch) {
    auto ckpt = Checkpoint::from_model(net, stage, loss);
    ckpt.rng_state = rng_state_for(config.optimizer.seed, epoch + 1);
    ckpt.weather_stats = stats;
    return ckpt;
  };
  auto finish_epoch = [&](EpochRecord rec) {
    if (state.record(rec, config.early_stop.min_delta)) {
      state.best_checkpoint = snapshot(rec.val_loss, rec.epoch);
    }
    if (run_dir) write_epochs_csv(*run_dir / "epochs.csv", state);
  };

  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto v = validate(net, val, config);
    EpochRecord rec;
    rec.epoch = 0;
    rec.val_loss = v.loss;
    rec.val_metrics = v.metrics;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    finish_epoch(rec);
  }
  for (int epoch = 1; epoch <= config.optimizer.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = train_epoch(net, optimizer, train, config, epoch);
    const auto v = validate(net, val, config);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = s.mean_loss;
    rec.val_loss = v.loss;
    rec.val_metrics = v.metrics;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    finish_epoch(rec);
    if (config.early_stop.enabled && state.epochs_since_improvement >= config.early_stop.patience) {
      break;
    }
  }
  result.best = *state.best_checkpoint;
  if (run_dir) model::save_checkpoint(*run_dir / "best.ckpt", result.best);
  return result;
}

TwoStageResult two_stage_train(const dataset::Corpus& corpus, const dataset::DatasetSplit& split,
                               const ModelConfig& vanilla_config,
                               const ModelConfig& multimodal_config,
                               const TrainConfig& stage_one, const TrainConfig& stage_two,
                               const std::optional<fs::path>& run_dir) {
  if (vanilla_config.fusion_enabled) {
    fail(ErrorCode::kInvalidArgument, "stage one must train with fusion disabled");
  }
  split.validate();
  const auto train = SampleSet::of(corpus, split.train);
  const auto val = SampleSet::of(corpus, split.val);
  TrainConfig one = stage_one;
  one.weather = WeatherSource::kNone;
  TwoStageResult out;
  out.vanilla = train_stage(model::make_model(vanilla_config, stage_one.optimizer.seed),
                            model::Stage::kVanilla, train, val, one,
                            run_dir ? std::optional(*run_dir / "vanilla") : std::nullopt);
  out.multimodal = run_control_arm(corpus, split, out.vanilla.best, multimodal_config, stage_two,
                                   Arm::kRealWeather,
                                   run_dir ? std::optional(*run_dir / "multimodal") : std::nullopt);
  return out;
}

std::string to_string(Arm arm) {
  switch (arm) {
    case Arm::kBaseline: return "baseline";
    case Arm::kRandomWeather: return "random_weather";
    case Arm::kRealWeather: return "real_weather";
  }
  return "baseline";
}

Arm parse_arm(const std::string& text) {
  for (Arm a : kAllArms) {
    if (to_string(a) == text) return a;
  }
  fail(ErrorCode::kInvalidArgument,
       fmt::format("unknown arm '{}' (baseline, random_weather, real_weather)", text));
}

StageResult run_control_arm(const dataset::Corpus& corpus, const dataset::DatasetSplit& split,
                            const Checkpoint& stage_one, const ModelConfig& multimodal_config,
                            const TrainConfig& stage_two, Arm arm,
                            const std::optional<fs::path>& run_dir) {
  if (stage_one.stage != model::Stage::kVanilla) {
    fail(ErrorCode::kInvalidArgument, "control arms start from a vanilla checkpoint");
  }
  const auto train = SampleSet::of(corpus, split.train);
  const auto val = SampleSet::of(corpus, split.val);
  TrainConfig cfg = stage_two;
  try {
    if (arm == Arm::kBaseline) {
      cfg.weather = WeatherSource::kNone;
      return train_stage(stage_one.to_model(), model::Stage::kVanilla, train, val, cfg, run_dir);
    }
    cfg.weather = arm == Arm::kRealWeather ? WeatherSource::kReal : WeatherSource::kRandom;
    const auto widened =
        model::init_from_vanilla(stage_one, multimodal_config, stage_two.optimizer.seed);
    return train_stage(widened.to_model(), model::Stage::kMultimodal, train, val, cfg, run_dir);
  } catch (const Error& e) {
    rethrow_with_context(e, fmt::format("arm {}", to_string(arm)));
  }
}

std::string train_config_to_json(const TrainConfig& c) {
  const auto& o = c.optimizer;
  const auto& a = c.augment_options;
  json j{{"optimizer",
          {{"learning_rate", o.learning_rate},
           {"weight_decay", o.weight_decay},
           {"batch_size", o.batch_size},
           {"max_epochs", o.max_epochs},
           {"beta1", o.beta1},
           {"beta2", o.beta2},
           {"epsilon", o.epsilon},
           {"seed", o.seed}}},
         {"loss",
          {{"image_positive_weight", c.loss.image_positive_weight},
           {"head_weights", c.loss.head_weights}}},
         {"early_stop",
          {{"enabled", c.early_stop.enabled},
           {"patience", c.early_stop.patience},
           {"min_delta", c.early_stop.min_delta}}},
         {"augment", c.augment},
         {"augment_options",
          {{"min_scale", a.min_scale},
           {"flip_probability", a.flip_probability},
           {"max_contrast_jitter", a.max_contrast_jitter},
           {"max_brightness_jitter", a.max_brightness_jitter}}},
         {"weather", to_string(c.weather)}};
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  TrainConfig c;
  try {
    const auto j = json::parse(text);
    const auto& o = j.at("optimizer");
    c.optimizer.learning_rate = o.at("learning_rate").get<double>();
    c.optimizer.weight_decay = o.at("weight_decay").get<double>();
    c.optimizer.batch_size = o.at("batch_size").get<int>();
    c.optimizer.max_epochs = o.at("max_epochs").get<int>();
    c.optimizer.beta1 = o.at("beta1").get<double>();
    c.optimizer.beta2 = o.at("beta2").get<double>();
    c.optimizer.epsilon = o.at("epsilon").get<double>();
    c.optimizer.seed = o.at("seed").get<uint64_t>();
    c.loss.image_positive_weight = j.at("loss").at("image_positive_weight").get<double>();
    c.loss.head_weights = j.at("loss").at("head_weights").get<std::array<double, 4>>();
    c.early_stop.enabled = j.at("early_stop").at("enabled").get<bool>();
    c.early_stop.patience = j.at("early_stop").at("patience").get<int>();
    c.early_stop.min_delta = j.at("early_stop").at("min_delta").get<double>();
    c.augment = j.at("augment").get<bool>();
    const auto& a = j.at("augment_options");
    c.augment_options.min_scale = a.at("min_scale").get<double>();
    c.augment_options.flip_probability = a.at("flip_probability").get<double>();
    c.augment_options.max_contrast_jitter = a.at("max_contrast_jitter").get<double>();
    c.augment_options.max_brightness_jitter = a.at("max_brightness_jitter").get<double>();
    c.weather = parse_weather_source(j.at("weather").get<std::string>());
  } catch (const json::exception& e) {
    fail(ErrorCode::kDataError, fmt::format("train config: {}", e.what()));
  }
  c.validate();
  return c;
}

}  // namespace smokeynet::training
