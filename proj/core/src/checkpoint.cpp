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

#include "smokeynet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "smokeynet/error.hpp"

namespace smokeynet::model {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'M', 'K', 'Y', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

json config_json(const ModelConfig& c) {
  return json{{"tile_size", c.tile_size},
              {"grid_rows", c.grid_rows},
              {"grid_cols", c.grid_cols},
              {"backbone_channels", c.backbone_channels},
              {"backbone_embed_dim", c.backbone_embed_dim},
              {"temporal_hidden_dim", c.temporal_hidden_dim},
              {"spatial_token_dim", c.spatial_token_dim},
              {"spatial_layers", c.spatial_layers},
              {"spatial_heads", c.spatial_heads},
              {"spatial_mlp_dim", c.spatial_mlp_dim},
              {"image_head_hidden", c.image_head_hidden},
              {"weather_dim", c.weather_dim},
              {"replication_factor", c.replication_factor},
              {"fusion_enabled", c.fusion_enabled},
              {"fusion_test_mode", c.fusion_test_mode},
              {"backbone_pretrained", c.backbone_pretrained},
              {"backbone_weights", c.backbone_weights}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("tile_size", c.tile_size);
  get("grid_rows", c.grid_rows);
  get("grid_cols", c.grid_cols);
  get("backbone_channels", c.backbone_channels);
  get("backbone_embed_dim", c.backbone_embed_dim);
  get("temporal_hidden_dim", c.temporal_hidden_dim);
  get("spatial_token_dim", c.spatial_token_dim);
  get("spatial_layers", c.spatial_layers);
  get("spatial_heads", c.spatial_heads);
  get("spatial_mlp_dim", c.spatial_mlp_dim);
  get("image_head_hidden", c.image_head_hidden);
  get("weather_dim", c.weather_dim);
  get("replication_factor", c.replication_factor);
  get("fusion_enabled", c.fusion_enabled);
  get("fusion_test_mode", c.fusion_test_mode);
  get("backbone_pretrained", c.backbone_pretrained);
  get("backbone_weights", c.backbone_weights);
  return c;
}

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) fail(ErrorCode::kIo, fmt::format("{}: truncated checkpoint", path.string()));
  return value;
}

}  // namespace

std::string config_to_json(const ModelConfig& config) { return config_json(config).dump(2); }

ModelConfig config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    fail(ErrorCode::kDataError, fmt::format("malformed model config: {}", e.what()));
  }
}

Checkpoint Checkpoint::from_model(const SmokeyNet& net, Stage stage, double validation_loss) {
  Checkpoint ckpt;
  ckpt.config = net.config();
  ckpt.params = net.parameters();
  ckpt.stage = stage;
  ckpt.validation_loss = validation_loss;
  return ckpt;
}

SmokeyNet Checkpoint::to_model() const { return SmokeyNet(config, params); }

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  json header;
  header["config"] = config_json(checkpoint.config);
  header["stage"] = to_string(checkpoint.stage);
  header["validation_loss"] = std::isnan(checkpoint.validation_loss)
                                  ? json(nullptr)
                                  : json(checkpoint.validation_loss);
  header["rng_state"] = checkpoint.rng_state;
  json stats = json::object();
  for (const auto& [name, s] : checkpoint.weather_stats) stats[name] = {s.mean, s.sd};
  header["weather_stats"] = stats;
  json table = json::array();
  for (const auto& [name, p] : checkpoint.params) {
    table.push_back({{"name", name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  header["parameters"] = table;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, fmt::format("cannot write checkpoint '{}'", path.string()));
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kCheckpointVersion);
  write_pod(out, static_cast<uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, p] : checkpoint.params) {
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!out) fail(ErrorCode::kIo, fmt::format("write failed for '{}'", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, fmt::format("cannot open checkpoint '{}'", path.string()));
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorCode::kDataError, fmt::format("{}: not a checkpoint file", path.string()));
  }
  const auto version = read_pod<uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kDataError,
         fmt::format("{}: unsupported checkpoint version {}", path.string(), version));
  }
  const auto header_len = read_pod<uint64_t>(in, path);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) fail(ErrorCode::kIo, fmt::format("{}: truncated header", path.string()));

  Checkpoint ckpt;
  try {
    const json header = json::parse(text);
    ckpt.config = config_from(header.at("config"));
    ckpt.stage = parse_stage(header.at("stage").get<std::string>());
    ckpt.validation_loss = header.at("validation_loss").is_null()
                               ? std::numeric_limits<double>::quiet_NaN()
                               : header.at("validation_loss").get<double>();
    ckpt.rng_state = header.value("rng_state", std::string());
    const json stats = header.value("weather_stats", json::object());
    for (const auto& [name, v] : stats.items()) {
      ckpt.weather_stats[name] = {v.at(0).get<double>(), v.at(1).get<double>()};
    }
    for (const auto& entry : header.at("parameters")) {
      const auto rows = entry.at("rows").get<Eigen::Index>();
      const auto cols = entry.at("cols").get<Eigen::Index>();
      nn::Matrix m(rows, cols);
      in.read(reinterpret_cast<char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
      if (!in) fail(ErrorCode::kIo, fmt::format("{}: truncated parameter data", path.string()));
      ckpt.params.add(entry.at("name").get<std::string>(), std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kDataError, fmt::format("{}: malformed header: {}", path.string(), e.what()));
  }
  return ckpt;
}

Checkpoint init_from_vanilla(const Checkpoint& vanilla, const ModelConfig& multimodal_config,
                             uint64_t seed) {
  if (vanilla.stage != Stage::kVanilla) {
    fail(ErrorCode::kInvalidArgument, "init_from_vanilla: source checkpoint is not vanilla");
  }
  if (!multimodal_config.fusion_enabled) {
    fail(ErrorCode::kInvalidArgument, "init_from_vanilla: target config must enable fusion");
  }
  // Fresh multimodal model supplies the fusion blocks; everything else is
  // overwritten from the vanilla weights.
  SmokeyNet target(multimodal_config, seed);
  std::vector<std::string> problems;
  for (auto& [name, p] : target.parameters()) {
    if (name.rfind("fusion.", 0) == 0) continue;
    if (!vanilla.params.contains(name)) {
      problems.push_back(name + " (missing)");
      continue;
    }
    const auto& src = vanilla.params.at(name).value;
    if (src.rows() != p.value.rows() || src.cols() != p.value.cols()) {
      problems.push_back(fmt::format("{} ({}x{} vs {}x{})", name, src.rows(), src.cols(),
                                     p.value.rows(), p.value.cols()));
      continue;
    }
    p.value = src;
  }
  if (!problems.empty()) {
    std::string list;
    for (const auto& p : problems) list += (list.empty() ? "" : ", ") + p;
    fail(ErrorCode::kShapeMismatch, "init_from_vanilla: incompatible parameters: " + list);
  }
  Checkpoint out = Checkpoint::from_model(target, Stage::kMultimodal, vanilla.validation_loss);
  out.weather_stats = vanilla.weather_stats;
  out.rng_state = vanilla.rng_state;
  return out;
}

SmokeyNet make_model(const ModelConfig& config, uint64_t seed) {
  SmokeyNet net(config, seed);
  if (config.backbone_pretrained) {
    const auto source = load_checkpoint(config.backbone_weights);
    for (auto& [name, p] : net.parameters()) {
      if (name.rfind("backbone.", 0) != 0) continue;
      if (!source.params.contains(name)) {
        fail(ErrorCode::kShapeMismatch,
             fmt::format("pretrained weights lack {}", name));
      }
      const auto& src = source.params.at(name).value;
      if (src.rows() != p.value.rows() || src.cols() != p.value.cols()) {
        fail(ErrorCode::kShapeMismatch, fmt::format("pretrained {} has a different shape", name));
      }
      p.value = src;
    }
  }
  return net;
}

}  // namespace smokeynet::model
