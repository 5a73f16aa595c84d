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

#include <doctest.h>

#include <cmath>
#include <random>

#include "smokeynet/checkpoint.hpp"
#include "smokeynet/csv.hpp"
#include "smokeynet/error.hpp"
#include "smokeynet/training.hpp"
#include "test_support.hpp"

using namespace smokeynet;
using namespace smokeynet::training;
using model::ModelConfig;

namespace {

struct Fixture {
  testing::TempDir dir{"training"};
  dataset::Corpus corpus;
  dataset::DatasetSplit split;
  Fixture() {
    dataset::SyntheticSpec spec;
    spec.n_fires = 4;
    spec.coupling = dataset::WeatherCoupling::kDiscriminative;
    spec.seed = 3;
    corpus = testing::make_corpus(spec, dir.path());
    split = testing::manifest_split(dir.path());
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

struct PlainFixture {
  testing::TempDir dir{"training_plain"};
  dataset::Corpus corpus;
  dataset::DatasetSplit split;
  PlainFixture() {
    dataset::SyntheticSpec spec;
    spec.n_fires = 4;
    spec.seed = 3;
    corpus = testing::make_corpus(spec, dir.path());
    split = testing::manifest_split(dir.path());
  }
};

PlainFixture& plain_fixture() {
  static PlainFixture f;
  return f;
}

ModelConfig fusion_config(bool test_mode) {
  auto c = ModelConfig::toy();
  c.fusion_enabled = true;
  c.fusion_test_mode = test_mode;
  return c;
}

TrainConfig quick_config(int epochs, uint64_t seed = 1) {
  TrainConfig c;
  c.optimizer.max_epochs = epochs;
  c.optimizer.seed = seed;
  return c;
}

double bce_oracle(double logit, double target, double pos_weight) {
  const double p = 1.0 / (1.0 + std::exp(-logit));
  return -(pos_weight * target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

bool same_parameters(const nn::ParameterSet& a, const nn::ParameterSet& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, p] : a) {
    if (!b.contains(name) || b.at(name).value != p.value) return false;
  }
  return true;
}

model::ModelOutput constant_output(double tile_logit, double image_logit) {
  model::ModelOutput o;
  o.cnn_tile_logits.assign(6, tile_logit);
  o.temporal_tile_logits.assign(6, tile_logit);
  o.spatial_tile_logits.assign(6, tile_logit);
  o.image_logit = image_logit;
  return o;
}

}  // namespace

TEST_CASE("loss examples") {
  const LossConfig cfg;
  const std::vector<uint8_t> none(6, 0);
  auto b = compute_losses(constant_output(0.0, 0.0), none, true, cfg);
  CHECK(b.heads[kImage] == doctest::Approx(5.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(b.heads[kImage] == doctest::Approx(3.4657).epsilon(1e-4));
  b = compute_losses(constant_output(0.0, 0.0), none, false, cfg);
  CHECK(b.heads[kImage] == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(b.heads[kCnnTile] == doctest::Approx(std::log(2.0)));

  model::ModelOutput perfect = constant_output(-20.0, 20.0);
  perfect.cnn_tile_logits[2] = perfect.temporal_tile_logits[2] = perfect.spatial_tile_logits[2] = 20.0;
  std::vector<uint8_t> labels(6, 0);
  labels[2] = 1;
  CHECK(compute_losses(perfect, labels, true, cfg).total < 1e-6);

  LossConfig image_only;
  image_only.head_weights = {0.0, 0.0, 0.0, 1.0};
  const auto o = constant_output(0.7, -1.3);
  const auto only = compute_losses(o, labels, true, image_only);
  CHECK(only.total == only.heads[kImage]);

  auto bad = o;
  bad.spatial_tile_logits[1] = std::nan("");
  CHECK_THROWS_AS(compute_losses(bad, labels, true, cfg), Error);
  CHECK_THROWS_AS(compute_losses(o, std::vector<uint8_t>(5, 0), true, cfg), Error);
  LossConfig negative;
  negative.head_weights[1] = -1.0;
  CHECK_THROWS_AS(compute_losses(o, labels, true, negative), Error);
}

TEST_CASE("loss equals a brute-force oracle") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> logit(0.0, 4.0);
  std::bernoulli_distribution coin(0.4);
  std::uniform_real_distribution<double> weight(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    model::ModelOutput o;
    std::vector<uint8_t> labels(6);
    for (auto& l : labels) l = coin(rng) ? 1 : 0;
    for (int i = 0; i < 6; ++i) {
      o.cnn_tile_logits.push_back(logit(rng));
      o.temporal_tile_logits.push_back(logit(rng));
      o.spatial_tile_logits.push_back(logit(rng));
    }
    o.image_logit = logit(rng);
    const bool image_label = coin(rng);
    LossConfig cfg;
    for (auto& w : cfg.head_weights) w = weight(rng);
    double expected = 0.0;
    const std::vector<double>* heads[3] = {&o.cnn_tile_logits, &o.temporal_tile_logits, &o.spatial_tile_logits};
    for (int h = 0; h < 3; ++h) {
      double mean = 0.0;
      for (size_t i = 0; i < 6; ++i) mean += bce_oracle((*heads[h])[i], labels[i], 1.0) / 6.0;
      expected += cfg.head_weights[static_cast<size_t>(h)] * mean;
    }
    expected += cfg.head_weights[3] * bce_oracle(o.image_logit, image_label ? 1.0 : 0.0, 5.0);
    CHECK(std::abs(compute_losses(o, labels, image_label, cfg).total - expected) < 1e-9);
  }
}

TEST_CASE("AdamW matches a reference update") {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.weight_decay = 0.1;
  nn::ParameterSet ps;
  auto& p = ps.add("w", nn::Matrix::Constant(1, 2, 1.0));
  AdamW opt(cfg);
  double ref = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 5; ++t) {
    const double g = 0.3 * t - 0.5;
    p.grad = nn::Matrix::Constant(1, 2, g);
    opt.step(ps);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    ref *= 1.0 - cfg.learning_rate * cfg.weight_decay;
    ref -= cfg.learning_rate * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    CHECK(p.value(0, 0) == doctest::Approx(ref).epsilon(1e-12));
  }
  CHECK(opt.steps() == 5);
  CHECK(p.grad.isZero());
}

TEST_CASE("weight decay on zero gradients") {
  OptimizerConfig cfg;
  nn::ParameterSet ps;
  auto& p = ps.add("w", nn::Matrix::Constant(3, 3, 2.0));
  p.zero_grad();
  AdamW opt(cfg);
  opt.step(ps);
  CHECK((p.value.array() - 2.0 * (1.0 - cfg.learning_rate * cfg.weight_decay)).abs().maxCoeff() < 1e-15);

  cfg.learning_rate = 0.0;
  nn::ParameterSet ps2;
  auto& q = ps2.add("w", nn::Matrix::Constant(2, 2, 1.5));
  q.grad = nn::Matrix::Constant(2, 2, 3.0);
  AdamW frozen(cfg);
  frozen.step(ps2);
  CHECK(q.value == nn::Matrix::Constant(2, 2, 1.5));
}

TEST_CASE("early stopping bookkeeping") {
  TrainState s;
  const std::vector<double> losses{1.0, 0.8, 0.9, 0.8, 0.85, 0.7, 0.75};
  std::vector<bool> improved;
  for (size_t i = 0; i < losses.size(); ++i) {
    EpochRecord r;
    r.epoch = static_cast<int>(i);
    r.val_loss = losses[i];
    improved.push_back(s.record(r, 0.0));
  }
  CHECK(improved == std::vector<bool>{true, true, false, false, false, true, false});
  CHECK(s.best_val_loss == *std::min_element(losses.begin(), losses.end()));
  CHECK(s.best_epoch == 5);
  CHECK(s.epochs_since_improvement == 1);
  EarlyStopPolicy p;
  p.patience = 0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("train_epoch: zero learning rate, determinism and decreasing loss") {
  auto& fx = fixture();
  const auto train = SampleSet::of(fx.corpus, fx.split.train);
  REQUIRE(train.refs.size() == 2 * 79);

  auto cfg = quick_config(1);
  cfg.optimizer.learning_rate = 0.0;
  model::SmokeyNet frozen(ModelConfig::toy(), 1);
  const auto before = frozen.parameters();
  AdamW opt0(cfg.optimizer);
  train_epoch(frozen, opt0, train, cfg, 1);
  CHECK(same_parameters(before, frozen.parameters()));

  cfg = quick_config(1);
  const auto plain = SampleSet::of(plain_fixture().corpus, plain_fixture().split.train);
  model::SmokeyNet a(ModelConfig::toy(), 2), b(ModelConfig::toy(), 2);
  AdamW oa(cfg.optimizer), ob(cfg.optimizer);
  std::vector<double> curve;
  for (int e = 1; e <= 5; ++e) {
    curve.push_back(train_epoch(a, oa, plain, cfg, e).mean_loss);
    train_epoch(b, ob, plain, cfg, e);
  }
  CHECK(same_parameters(a.parameters(), b.parameters()));
  MESSAGE("training loss " << curve[0] << " " << curve[1] << " " << curve[2] << " " << curve[3] << " " << curve[4]);
  for (size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] < curve[i - 1]);
  CHECK_THROWS_AS(train_epoch(a, oa, SampleSet{&fx.corpus, {}}, cfg, 1), Error);
}

TEST_CASE("validate is deterministic and agrees with the metrics module") {
  auto& fx = fixture();
  const auto val = SampleSet::of(fx.corpus, fx.split.val);
  model::SmokeyNet net(ModelConfig::toy(), 3);
  const auto cfg = quick_config(1);
  const auto r1 = validate(net, val, cfg);
  const auto r2 = validate(net, val, cfg);
  CHECK(r1.loss == r2.loss);
  REQUIRE(r1.log.rows.size() == r2.log.rows.size());
  for (size_t i = 0; i < r1.log.rows.size(); ++i) {
    CHECK(r1.log.rows[i].image_probability == r2.log.rows[i].image_probability);
  }
  const auto counts = eval::confusion_counts(r1.log, 0.5);
  size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& row : r1.log.rows) {
    const bool pred = row.image_probability >= 0.5;
    tp += pred && row.image_label;
    fp += pred && !row.image_label;
    tn += !pred && !row.image_label;
    fn += !pred && row.image_label;
  }
  CHECK(counts.tp == tp);
  CHECK(counts.fp == fp);
  CHECK(counts.tn == tn);
  CHECK(counts.fn == fn);
  CHECK(r1.metrics.accuracy == doctest::Approx(static_cast<double>(tp + tn) / r1.log.rows.size()));
  CHECK_THROWS_AS(validate(net, SampleSet{&fx.corpus, {}}, cfg), Error);
}

TEST_CASE("memorizes a small set") {
  auto& fx = fixture();
  auto small = SampleSet::of(fx.corpus, {fx.split.train.front()});
  // Two clearly negative and two clearly positive frames.
  small.refs = {small.refs[5], small.refs[20], small.refs[60], small.refs[70]};
  auto cfg = quick_config(1);
  cfg.augment = false;
  cfg.optimizer.learning_rate = 3e-3;
  model::SmokeyNet net(ModelConfig::toy(), 4);
  AdamW opt(cfg.optimizer);
  const double start = validate(net, small, cfg).loss;
  for (int e = 1; e <= 150; ++e) train_epoch(net, opt, small, cfg, e);
  const auto end = validate(net, small, cfg);
  MESSAGE("memorization loss " << start << " -> " << end.loss);
  CHECK(end.loss < 0.05);
  CHECK(end.metrics.accuracy == 1.0);
}

TEST_CASE("weather sources feed the model input") {
  auto& fx = fixture();
  const auto s = fx.corpus.sample({0, 10});
  CHECK_FALSE(to_model_input(s, WeatherSource::kNone, 1).weather.has_value());
  const auto real = to_model_input(s, WeatherSource::kReal, 1);
  CHECK(*real.weather == s.weather.values);
  const auto r1 = to_model_input(s, WeatherSource::kRandom, 7);
  const auto r2 = to_model_input(s, WeatherSource::kRandom, 7);
  const auto r3 = to_model_input(s, WeatherSource::kRandom, 8);
  CHECK(*r1.weather == *r2.weather);
  CHECK(*r1.weather != *r3.weather);
  CHECK(random_weather_seed(1, 2, {0, 3}) != random_weather_seed(1, 3, {0, 3}));
  CHECK(random_weather_seed(1, 2, {0, 3}) != random_weather_seed(1, 2, {1, 3}));
  CHECK(random_weather_seed(1, 2, {0, 3}) != random_weather_seed(1, 2, {0, 4}));
  CHECK(parse_weather_source(to_string(WeatherSource::kRandom)) == WeatherSource::kRandom);
}

TEST_CASE("train_stage stops early and keeps the best checkpoint") {
  auto& fx = fixture();
  const auto train = SampleSet::of(fx.corpus, fx.split.train);
  const auto val = SampleSet::of(fx.corpus, fx.split.val);
  auto cfg = quick_config(10);
  cfg.optimizer.learning_rate = 0.0;
  cfg.early_stop.patience = 2;
  testing::TempDir run("stage_run");
  const auto r = train_stage(model::SmokeyNet(ModelConfig::toy(), 5), model::Stage::kVanilla, train,
                             val, cfg, run.path());
  CHECK(r.state.history.size() == 3);
  CHECK(r.state.best_epoch == 0);
  CHECK(std::filesystem::exists(run / "config.json"));
  CHECK(std::filesystem::exists(run / "best.ckpt"));
  const auto epochs = csv::read(run / "epochs.csv");
  CHECK(epochs.rows.size() == 3);
  const auto loaded = model::load_checkpoint(run / "best.ckpt");
  CHECK(loaded.validation_loss == r.best.validation_loss);
  CHECK(loaded.weather_stats.size() == 8);

  cfg = quick_config(3);
  const auto real = train_stage(model::SmokeyNet(ModelConfig::toy(), 5), model::Stage::kVanilla,
                                train, val, cfg);
  double min_loss = std::numeric_limits<double>::infinity();
  for (const auto& h : real.state.history) min_loss = std::min(min_loss, h.val_loss);
  CHECK(real.state.best_val_loss == min_loss);
  CHECK(real.best.validation_loss == min_loss);

  auto mismatch = quick_config(1);
  mismatch.weather = WeatherSource::kReal;
  CHECK_THROWS_AS(train_stage(model::SmokeyNet(ModelConfig::toy(), 5), model::Stage::kVanilla,
                              train, val, mismatch),
                  Error);
}

TEST_CASE("two-stage transfer in test mode") {
  auto& fx = fixture();
  const auto one = quick_config(2);
  auto two = quick_config(0);
  const auto r = two_stage_train(fx.corpus, fx.split, ModelConfig::toy(), fusion_config(true), one, two);
  REQUIRE(r.multimodal.state.history.size() == 1);
  CHECK(r.multimodal.state.history.front().val_loss ==
        doctest::Approx(r.vanilla.state.best_val_loss).epsilon(1e-12));
  CHECK(r.multimodal.best.stage == model::Stage::kMultimodal);

  auto vanilla = r.vanilla.best.to_model();
  auto multimodal = r.multimodal.best.to_model();
  const auto lv = predict_log(vanilla, fx.corpus, fx.split.test, WeatherSource::kNone, 1);
  const auto lm = predict_log(multimodal, fx.corpus, fx.split.test, WeatherSource::kReal, 1);
  REQUIRE(lv.rows.size() == lm.rows.size());
  for (size_t i = 0; i < lv.rows.size(); ++i) {
    CHECK(std::abs(lv.rows[i].image_probability - lm.rows[i].image_probability) < 1e-12);
  }
  CHECK(eval::confusion_counts(lv, 0.5) == eval::confusion_counts(lm, 0.5));
}

TEST_CASE("control arms are reproducible and the real arm matches stage two") {
  auto& fx = fixture();
  const auto one = quick_config(1);
  const auto two = quick_config(2, 9);
  const auto r = two_stage_train(fx.corpus, fx.split, ModelConfig::toy(), fusion_config(false), one, two);
  const auto real = run_control_arm(fx.corpus, fx.split, r.vanilla.best, fusion_config(false), two,
                                    Arm::kRealWeather);
  CHECK(same_parameters(real.best.params, r.multimodal.best.params));
  const auto rand_a = run_control_arm(fx.corpus, fx.split, r.vanilla.best, fusion_config(false), two,
                                      Arm::kRandomWeather);
  const auto rand_b = run_control_arm(fx.corpus, fx.split, r.vanilla.best, fusion_config(false), two,
                                      Arm::kRandomWeather);
  CHECK(same_parameters(rand_a.best.params, rand_b.best.params));
  CHECK(rand_a.state.history[1].train_loss == rand_b.state.history[1].train_loss);
  CHECK(rand_a.state.history[1].train_loss != real.state.history[1].train_loss);
  const auto base = run_control_arm(fx.corpus, fx.split, r.vanilla.best, fusion_config(false), two,
                                    Arm::kBaseline);
  CHECK_FALSE(base.best.config.fusion_enabled);
  CHECK(parse_arm(to_string(Arm::kRandomWeather)) == Arm::kRandomWeather);
  CHECK_THROWS_AS(parse_arm("sunny"), Error);
}

TEST_CASE("train config json round trip") {
  TrainConfig c;
  c.optimizer.learning_rate = 2.5e-4;
  c.optimizer.seed = 77;
  c.loss.head_weights = {0.5, 1.0, 1.5, 2.0};
  c.early_stop.patience = 6;
  c.augment = false;
  c.weather = WeatherSource::kRandom;
  const auto back = train_config_from_json(train_config_to_json(c));
  CHECK(back.optimizer.learning_rate == 2.5e-4);
  CHECK(back.optimizer.seed == 77);
  CHECK(back.loss.head_weights == c.loss.head_weights);
  CHECK(back.early_stop.patience == 6);
  CHECK_FALSE(back.augment);
  CHECK(back.weather == WeatherSource::kRandom);
}
