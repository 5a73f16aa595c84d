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

#include "smokeynet/model.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "smokeynet/error.hpp"

namespace smokeynet::model {
namespace {

constexpr int kKernel = 3;

Matrix uniform_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

Matrix normal_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double sd) {
  std::normal_distribution<double> dist(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

}  // namespace

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kInvalidArgument, "invalid model config: " + what);
  };
  require(tile_size >= 4, "tile_size must be >= 4");
  require(grid_rows > 0 && grid_cols > 0, "grid must be non-empty");
  require(backbone_channels > 0, "backbone_channels must be > 0");
  require(backbone_embed_dim > 0 && temporal_hidden_dim > 0 && spatial_token_dim > 0,
          "all embedding dims must be > 0");
  require(spatial_layers >= 0, "spatial_layers must be >= 0");
  require(spatial_heads > 0 && spatial_token_dim % spatial_heads == 0,
          fmt::format("spatial_token_dim {} not divisible by {} heads", spatial_token_dim,
                      spatial_heads));
  require(spatial_mlp_dim > 0 && image_head_hidden > 0, "head/mlp widths must be > 0");
  require(weather_dim == 8, fmt::format("weather_dim must be 8, got {}", weather_dim));
  require(replication_factor > 0, "replication_factor must be > 0");
  require(temporal_hidden_dim == backbone_embed_dim,
          fmt::format("temporal_hidden_dim {} must equal backbone_embed_dim {} so one fusion "
                      "block shape serves both injection points",
                      temporal_hidden_dim, backbone_embed_dim));
  require(!fusion_test_mode || fusion_enabled, "fusion_test_mode requires fusion_enabled");
  require(!backbone_pretrained || !backbone_weights.empty(),
          "backbone_pretrained requires backbone_weights");
}

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.tile_size = 16;
  c.grid_rows = 2;
  c.grid_cols = 3;
  c.backbone_channels = 8;
  c.backbone_embed_dim = 32;
  c.temporal_hidden_dim = 32;
  c.spatial_token_dim = 32;
  c.spatial_layers = 1;
  c.spatial_heads = 2;
  c.spatial_mlp_dim = 64;
  c.image_head_hidden = 16;
  return c;
}

ModelConfig ModelConfig::full_scale() { return ModelConfig{}; }

double ModelOutput::image_probability() const { return 1.0 / (1.0 + std::exp(-image_logit)); }

std::vector<double> ModelOutput::tile_probabilities(const std::vector<double>& logits) const {
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-logits[i]));
  return out;
}

ModelOutput OutputVars::values() const {
  auto column = [](const Var& v) {
    const Matrix& m = v.value();
    return std::vector<double>(m.data(), m.data() + m.size());
  };
  ModelOutput out;
  out.cnn_tile_logits = column(cnn_tile_logits);
  out.temporal_tile_logits = column(temporal_tile_logits);
  out.spatial_tile_logits = column(spatial_tile_logits);
  out.image_logit = image_logit.value()(0, 0);
  return out;
}

std::string to_string(Stage stage) {
  return stage == Stage::kVanilla ? "vanilla" : "multimodal";
}

Stage parse_stage(const std::string& text) {
  if (text == "vanilla") return Stage::kVanilla;
  if (text == "multimodal") return Stage::kMultimodal;
  fail(ErrorCode::kInvalidArgument, fmt::format("unknown stage '{}'", text));
}

std::vector<std::string> fusion_parameter_names() {
  return {"fusion.backbone.weight", "fusion.backbone.bias", "fusion.temporal.weight",
          "fusion.temporal.bias"};
}

SmokeyNet::SmokeyNet(ModelConfig config, uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  build(seed);
}

SmokeyNet::SmokeyNet(ModelConfig config, nn::ParameterSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  // Shapes must agree with a freshly built model of the same config.
  SmokeyNet reference(config_, 0);
  for (const auto& [name, p] : reference.params_) {
    if (!params_.contains(name)) {
      fail(ErrorCode::kShapeMismatch, fmt::format("parameter {} missing", name));
    }
    const auto& mine = params_.at(name).value;
    if (mine.rows() != p.value.rows() || mine.cols() != p.value.cols()) {
      fail(ErrorCode::kShapeMismatch,
           fmt::format("parameter {} is {}x{}, config expects {}x{}", name, mine.rows(),
                       mine.cols(), p.value.rows(), p.value.cols()));
    }
  }
  if (params_.size() != reference.params_.size()) {
    fail(ErrorCode::kShapeMismatch, "parameter set has entries the config does not define");
  }
}

void SmokeyNet::build(uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& c = config_;
  const int ch = c.backbone_channels;
  const int e = c.backbone_embed_dim;
  const int h = c.temporal_hidden_dim;
  const int d = c.spatial_token_dim;

  auto conv = [&](const std::string& name, int in, int out, double gain) {
    const int fan_in = in * kKernel * kKernel;
    params_.add(name + ".weight", normal_matrix(rng, out, fan_in, gain * std::sqrt(2.0 / fan_in)));
    params_.add(name + ".bias", Matrix::Zero(1, out));
  };
  auto linear = [&](const std::string& name, int in, int out) {
    params_.add(name + ".weight", uniform_matrix(rng, out, in, 1.0 / std::sqrt(in)));
    params_.add(name + ".bias", Matrix::Zero(1, out));
  };

  conv("backbone.stem", 3, ch, 1.0);
  conv("backbone.res.conv1", ch, ch, 1.0);
  conv("backbone.res.conv2", ch, ch, 0.5);
  conv("backbone.proj", ch, e, 1.0);
  linear("heads.cnn_tile", e, 1);

  const double lstm_bound = 1.0 / std::sqrt(h);
  params_.add("temporal.w_ih", uniform_matrix(rng, 4 * h, e, lstm_bound));
  params_.add("temporal.w_hh", uniform_matrix(rng, 4 * h, h, lstm_bound));
  Matrix lstm_bias = Matrix::Zero(1, 4 * h);
  lstm_bias.middleCols(h, h).setOnes();  // forget gate
  params_.add("temporal.bias", std::move(lstm_bias));
  linear("heads.temporal_tile", h, 1);

  if (d != h) linear("spatial.input_proj", h, d);
  params_.add("spatial.cls", normal_matrix(rng, 1, d, 0.02));
  params_.add("spatial.pos", normal_matrix(rng, c.tile_count() + 1, d, 0.02));
  for (int l = 0; l < c.spatial_layers; ++l) {
    const std::string p = fmt::format("spatial.layer{}", l);
    params_.add(p + ".ln1.gain", Matrix::Ones(1, d));
    params_.add(p + ".ln1.bias", Matrix::Zero(1, d));
    linear(p + ".attn.q", d, d);
    linear(p + ".attn.k", d, d);
    linear(p + ".attn.v", d, d);
    linear(p + ".attn.out", d, d);
    params_.add(p + ".ln2.gain", Matrix::Ones(1, d));
    params_.add(p + ".ln2.bias", Matrix::Zero(1, d));
    linear(p + ".mlp.fc1", d, c.spatial_mlp_dim);
    linear(p + ".mlp.fc2", c.spatial_mlp_dim, d);
  }
  linear("heads.spatial_tile", d, 1);
  linear("heads.image.fc1", d, c.image_head_hidden);
  linear("heads.image.fc2", c.image_head_hidden, 1);

  if (c.fusion_enabled) {
    // Identity on the embedding columns; the weather columns are the new
    // connections (random, or zero in test mode).
    for (const char* point : {"fusion.backbone", "fusion.temporal"}) {
      const int pad = c.fusion_pad_width();
      Matrix w(e, e + pad);
      w.leftCols(e).setIdentity();
      w.rightCols(pad) = c.fusion_test_mode
                             ? Matrix::Zero(e, pad)
                             : uniform_matrix(rng, e, pad, 1.0 / std::sqrt(e + pad));
      params_.add(std::string(point) + ".weight", std::move(w));
      params_.add(std::string(point) + ".bias", Matrix::Zero(1, e));
    }
  }
}

Var SmokeyNet::param(nn::Tape& tape, const std::string& name) {
  return tape.param(params_.at(name));
}

Var SmokeyNet::apply_linear(nn::Tape& tape, Var x, const std::string& prefix) {
  return nn::linear(x, param(tape, prefix + ".weight"), param(tape, prefix + ".bias"));
}

FusionBlock SmokeyNet::backbone_fusion() const {
  return {config_.backbone_embed_dim, config_.weather_dim, config_.replication_factor, true};
}

FusionBlock SmokeyNet::temporal_fusion() const {
  // Temporal states are signed, so this block stays affine; see DESIGN notes
  // in the README.
  return {config_.temporal_hidden_dim, config_.weather_dim, config_.replication_factor, false};
}

Var SmokeyNet::encode_tiles(nn::Tape& tape, const Matrix& tiles) {
  const int ts = config_.tile_size;
  const Eigen::Index pixels = static_cast<Eigen::Index>(ts) * ts;
  if (tiles.cols() != 3 || tiles.rows() % pixels != 0 || tiles.rows() == 0) {
    fail(ErrorCode::kShapeMismatch,
         fmt::format("encode_tiles: expected (n*{}*{}) x 3 input, got {}x{}", ts, ts,
                     tiles.rows(), tiles.cols()));
  }
  nn::FeatureShape shape{static_cast<int>(tiles.rows() / pixels), ts, ts, 3};
  auto conv = [&](Var x, const std::string& name, int stride, nn::FeatureShape* s) {
    nn::FeatureShape out;
    Var y = nn::conv2d(x, *s, param(tape, name + ".weight"), param(tape, name + ".bias"), kKernel,
                       stride, 1, &out);
    *s = out;
    return y;
  };
  Var x = tape.constant(tiles);
  Var stem = nn::relu(conv(x, "backbone.stem", 2, &shape));
  nn::FeatureShape res_shape = shape;
  Var r = nn::relu(conv(stem, "backbone.res.conv1", 1, &res_shape));
  r = conv(r, "backbone.res.conv2", 1, &res_shape);
  Var res = nn::relu(nn::add(stem, r));
  Var proj = nn::relu(conv(res, "backbone.proj", 2, &shape));
  return nn::global_avg_pool(proj, shape);
}

Var SmokeyNet::fuse_weather(nn::Tape& tape, Var embeddings, Var weather_row,
                            const std::string& prefix, const FusionBlock& block) {
  if (!config_.fusion_enabled) fail(ErrorCode::kInvalidArgument, "fusion is disabled");
  if (weather_row.rows() != 1 || weather_row.cols() != block.weather_dim) {
    fail(ErrorCode::kShapeMismatch,
         fmt::format("fuse_weather: weather must be 1x{}", block.weather_dim));
  }
  if (embeddings.cols() != block.embed_dim) {
    fail(ErrorCode::kShapeMismatch,
         fmt::format("fuse_weather: embeddings are {} wide, block expects {}", embeddings.cols(),
                     block.embed_dim));
  }
  std::vector<Var> copies(static_cast<size_t>(block.replication_factor), weather_row);
  Var replicated = nn::concat_cols(copies);
  Var widened =
      nn::concat_cols({embeddings, nn::broadcast_rows(replicated, embeddings.rows())});
  Var out = apply_linear(tape, widened, prefix);
  return block.rectify ? nn::relu(out) : out;
}

Var SmokeyNet::temporal_combine(nn::Tape& tape, Var previous, Var current) {
  if (previous.rows() != current.rows() || previous.cols() != current.cols()) {
    fail(ErrorCode::kShapeMismatch, "temporal_combine: frame embeddings differ in shape");
  }
  const Eigen::Index h = config_.temporal_hidden_dim;
  Var w_ih = param(tape, "temporal.w_ih");
  Var w_hh = param(tape, "temporal.w_hh");
  Var bias = param(tape, "temporal.bias");

  auto gates_of = [&](Var pre) {
    return std::array<Var, 4>{nn::sigmoid(nn::slice_cols(pre, 0, h)),
                              nn::sigmoid(nn::slice_cols(pre, h, h)),
                              nn::tanh(nn::slice_cols(pre, 2 * h, h)),
                              nn::sigmoid(nn::slice_cols(pre, 3 * h, h))};
  };
  // Step 1 starts from zero state, so the recurrent and forget terms vanish.
  auto g1 = gates_of(nn::linear(previous, w_ih, bias));
  Var c1 = nn::hadamard(g1[0], g1[2]);
  Var h1 = nn::hadamard(g1[3], nn::tanh(c1));
  auto g2 = gates_of(nn::add(nn::linear(current, w_ih, bias), nn::matmul_nt(h1, w_hh)));
  Var c2 = nn::add(nn::hadamard(g2[1], c1), nn::hadamard(g2[0], g2[2]));
  return nn::hadamard(g2[3], nn::tanh(c2));
}

SmokeyNet::SpatialResult SmokeyNet::spatial_encode(nn::Tape& tape, Var tile_embeddings) {
  const int tiles = config_.tile_count();
  if (tile_embeddings.rows() != tiles) {
    fail(ErrorCode::kShapeMismatch,
         fmt::format("spatial_encode: {} tokens for a {}-tile grid", tile_embeddings.rows(),
                     tiles));
  }
  const int d = config_.spatial_token_dim;
  Var tokens = tile_embeddings;
  if (params_.contains("spatial.input_proj.weight")) {
    tokens = apply_linear(tape, tokens, "spatial.input_proj");
  }
  Var x = nn::add(nn::concat_rows({param(tape, "spatial.cls"), tokens}),
                  param(tape, "spatial.pos"));
  const int heads = config_.spatial_heads;
  const int hd = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  for (int l = 0; l < config_.spatial_layers; ++l) {
    const std::string p = fmt::format("spatial.layer{}", l);
    Var n1 = nn::layer_norm(x, param(tape, p + ".ln1.gain"), param(tape, p + ".ln1.bias"));
    Var q = apply_linear(tape, n1, p + ".attn.q");
    Var k = apply_linear(tape, n1, p + ".attn.k");
    Var v = apply_linear(tape, n1, p + ".attn.v");
    std::vector<Var> head_out;
    head_out.reserve(static_cast<size_t>(heads));
    for (int hi = 0; hi < heads; ++hi) {
      Var qh = nn::slice_cols(q, hi * hd, hd);
      Var kh = nn::slice_cols(k, hi * hd, hd);
      Var vh = nn::slice_cols(v, hi * hd, hd);
      Var attn = nn::softmax_rows(nn::scale(nn::matmul_nt(qh, kh), inv_sqrt));
      head_out.push_back(nn::matmul(attn, vh));
    }
    Var merged = heads == 1 ? head_out.front() : nn::concat_cols(head_out);
    x = nn::add(x, apply_linear(tape, merged, p + ".attn.out"));
    Var n2 = nn::layer_norm(x, param(tape, p + ".ln2.gain"), param(tape, p + ".ln2.bias"));
    Var m = apply_linear(tape, nn::relu(apply_linear(tape, n2, p + ".mlp.fc1")), p + ".mlp.fc2");
    x = nn::add(x, m);
  }
  return {nn::slice_rows(x, 1, tiles), nn::slice_rows(x, 0, 1)};
}

OutputVars SmokeyNet::predict_heads(nn::Tape& tape, Var cnn_embeddings, Var temporal_embeddings,
                                    const SpatialResult& spatial) {
  const int tiles = config_.tile_count();
  if (cnn_embeddings.rows() != tiles || temporal_embeddings.rows() != tiles ||
      spatial.tile_tokens.rows() != tiles) {
    fail(ErrorCode::kShapeMismatch, "predict_heads: tile count mismatch");
  }
  OutputVars out;
  out.cnn_tile_logits = apply_linear(tape, cnn_embeddings, "heads.cnn_tile");
  out.temporal_tile_logits = apply_linear(tape, temporal_embeddings, "heads.temporal_tile");
  out.spatial_tile_logits = apply_linear(tape, spatial.tile_tokens, "heads.spatial_tile");
  Var hidden = nn::relu(apply_linear(tape, spatial.cls_token, "heads.image.fc1"));
  out.image_logit = apply_linear(tape, hidden, "heads.image.fc2");
  return out;
}

OutputVars SmokeyNet::forward(nn::Tape& tape, const ModelInput& input,
                              std::optional<Var> weather_override) {
  const Eigen::Index tiles = config_.tile_count();
  const Eigen::Index tile_rows = tiles * config_.tile_size * config_.tile_size;
  if (input.previous_tiles.rows() != tile_rows || input.current_tiles.rows() != tile_rows) {
    fail(ErrorCode::kShapeMismatch,
         fmt::format("forward: expected {} tiles of {} px per frame", tiles, config_.tile_size));
  }
  Matrix both(2 * tile_rows, 3);
  both.topRows(tile_rows) = input.previous_tiles;
  both.bottomRows(tile_rows) = input.current_tiles;
  Var embeddings = encode_tiles(tape, both);
  Var prev = nn::slice_rows(embeddings, 0, tiles);
  Var curr = nn::slice_rows(embeddings, tiles, tiles);

  Var prev_in = prev;
  Var curr_in = curr;
  Var weather;
  if (config_.fusion_enabled) {
    if (weather_override) {
      weather = *weather_override;
    } else {
      if (!input.weather) fail(ErrorCode::kInvalidArgument, "fusion enabled but no weather");
      if (!input.weather_normalized) {
        fail(ErrorCode::kInvalidArgument, "fuse_weather: weather vector is not normalized");
      }
      Matrix w(1, config_.weather_dim);
      for (int i = 0; i < config_.weather_dim; ++i) w(0, i) = (*input.weather)[static_cast<size_t>(i)];
      weather = tape.constant(std::move(w));
    }
    const auto block = backbone_fusion();
    prev_in = fuse_weather(tape, prev, weather, "fusion.backbone", block);
    curr_in = fuse_weather(tape, curr, weather, "fusion.backbone", block);
  }
  Var temporal = temporal_combine(tape, prev_in, curr_in);
  Var spatial_in = temporal;
  if (config_.fusion_enabled) {
    spatial_in = fuse_weather(tape, temporal, weather, "fusion.temporal", temporal_fusion());
  }
  const auto spatial = spatial_encode(tape, spatial_in);
  return predict_heads(tape, curr, temporal, spatial);
}

ModelOutput SmokeyNet::predict(const ModelInput& input) {
  nn::Tape tape(false);
  return forward(tape, input).values();
}

}  // namespace smokeynet::model
