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
#include <string>

#include "smokeynet/dataset.hpp"
#include "smokeynet/model.hpp"

namespace smokeynet::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Synthetic corpus written under `dir`, loaded with weather normalized on
// the manifest's training split.
dataset::Corpus make_corpus(const dataset::SyntheticSpec& spec, const std::filesystem::path& dir);

dataset::DatasetSplit manifest_split(const std::filesystem::path& dir);

// Random normalized tiles for a config, one frame.
model::Matrix random_tiles(const model::ModelConfig& config, uint64_t seed);
model::ModelInput random_input(const model::ModelConfig& config, uint64_t seed);

std::string read_file(const std::filesystem::path& path);

}  // namespace smokeynet::testing
