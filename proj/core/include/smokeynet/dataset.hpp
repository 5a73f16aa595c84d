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
#include <optional>
#include <string>
#include <vector>

#include "smokeynet/image.hpp"
#include "smokeynet/weather.hpp"

namespace smokeynet::dataset {

inline constexpr int kFirstOffset = -40;
inline constexpr int kLastOffset = 39;
inline constexpr int kFramesPerFire = kLastOffset - kFirstOffset + 1;

struct ManifestEntry {
  std::string fire_id;
  std::string camera_id;
  UtcInstant ignition;
  double latitude = 0.0;
  double longitude = 0.0;
  double view_azimuth = 0.0;
  std::optional<double> field_of_view;
  std::string split;  // "train", "val", "test" or empty

  weather::CameraPose camera() const;
};

using Manifest = std::vector<ManifestEntry>;

// Columns: fire_id,camera_id,ignition,latitude,longitude,view_azimuth,split
// with an optional field_of_view column.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

std::string frame_filename(const std::string& camera_id, int offset, const std::string& ext);
std::string mask_filename(const std::string& camera_id, int offset);

struct FireSequence {
  std::string fire_id;
  weather::CameraPose camera;
  UtcInstant ignition;
  std::vector<image::RawFrame> frames;  // offsets -40 .. +39, in order
  std::vector<image::GroundTruthMask> masks;  // per frame; empty Mat when absent

  UtcInstant frame_time(size_t index) const {
    return add_minutes(ignition, frames[index].minute_offset);
  }
};

/// Reads `<data_root>/<fire_id>/<camera_id>_<±MMM>.jpg` (or .png) frames and
/// optional `_mask.png` siblings, validating that every offset is present once.
FireSequence load_fire_sequence(const ManifestEntry& entry, const std::filesystem::path& data_root);

/// One weather vector per frame at ignition + offset minutes. Normalized when
/// `stats` is given.
std::vector<weather::WeatherVector> align_weather_to_frames(
    const FireSequence& seq, const weather::WeatherContext& context,
    const weather::NormalizationStats* stats = nullptr);

struct AlignedSample {
  std::string fire_id;
  int offset = 0;  // of the current frame
  image::TileGrid previous;
  image::TileGrid current;
  weather::WeatherVector weather;
  bool image_label = false;
  std::vector<uint8_t> tile_labels;
};

struct SampleOptions {
  image::TileGeometry geometry = image::kFullScaleGeometry;
  image::ImageNormalization normalization;
  int min_overlap_px = 1;
};

// Builds the (previous, current) pair for frame `index` (>= 1). Both frames
// share one augmentation draw so their tiles stay registered.
AlignedSample make_sample(const std::string& fire_id, const image::PreparedImage& previous,
                          const image::PreparedImage& current, const image::GroundTruthMask& mask,
                          const weather::WeatherVector& weather, const SampleOptions& options,
                          const image::AugmentOptions* augment, uint64_t augment_seed);

/// Samples for offsets -39 .. +39: each frame paired with its predecessor and
/// carrying the current frame's weather.
std::vector<AlignedSample> pair_consecutive_frames(
    const FireSequence& seq, const std::vector<weather::WeatherVector>& weather,
    const SampleOptions& options);

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;

  // Throws when a fire appears in more than one list.
  void validate() const;
};

struct SplitFractions {
  double train = 0.514;
  double val = 0.247;
  double test = 0.239;
};

// Largest-remainder rounding of fractions * n: floors first, then leftover
// fires go to the largest fractional parts (ties: train, val, test).
std::array<size_t, 3> split_counts(size_t n, const SplitFractions& fractions);

/// Deterministic fire-level split: ids are sorted, shuffled with `seed`, and
/// cut at split_counts().
DatasetSplit make_splits(const Manifest& manifest, const SplitFractions& fractions,
                         uint64_t seed);
// Uses the lists as given after checking they are disjoint and known.
DatasetSplit make_splits(const Manifest& manifest, const DatasetSplit& explicit_lists);
// Reads the manifest's split column.
DatasetSplit split_from_manifest(const Manifest& manifest);

// ---- in-memory corpus ---------------------------------------------------

struct PreparedFire {
  ManifestEntry entry;
  std::vector<image::PreparedImage> frames;  // resized/cropped, unnormalized
  std::vector<image::GroundTruthMask> masks;
  std::vector<weather::WeatherVector> raw_weather;
  std::vector<weather::WeatherVector> weather;  // normalized once stats are set
};

struct SampleRef {
  size_t fire = 0;
  size_t frame = 0;  // index of the current frame, >= 1
};

// A corpus loaded from disk with frames prepared once and kept in memory.
class Corpus {
 public:
  static Corpus load(const std::filesystem::path& data_root, const image::TileGeometry& geometry);

  const Manifest& manifest() const { return manifest_; }
  const std::vector<PreparedFire>& fires() const { return fires_; }
  const SampleOptions& sample_options() const { return options_; }

  std::optional<size_t> fire_index(const std::string& fire_id) const;
  std::vector<SampleRef> samples(const std::vector<std::string>& fire_ids) const;

  weather::NormalizationStats fit_normalization(const std::vector<std::string>& train_ids) const;
  void set_normalization(const weather::NormalizationStats& stats);
  const weather::NormalizationStats& normalization() const { return stats_; }

  AlignedSample sample(const SampleRef& ref, const image::AugmentOptions* augment = nullptr,
                       uint64_t augment_seed = 0) const;

 private:
  Manifest manifest_;
  std::vector<PreparedFire> fires_;
  SampleOptions options_;
  weather::NormalizationStats stats_;
};

// ---- synthetic corpora --------------------------------------------------

enum class WeatherCoupling { kNone, kDiscriminative };

std::string to_string(WeatherCoupling coupling);
WeatherCoupling parse_coupling(const std::string& text);

struct SyntheticSpec {
  int n_fires = 20;
  int grid_rows = 2;
  int grid_cols = 3;
  int tile_size = 16;
  int stride = 14;

  // Plume: gaussian blob seeded at ignition, growing and rising each minute.
  double plume_initial_radius = 1.8;
  double plume_growth_per_minute = 0.12;
  double plume_rise_per_minute = 0.06;
  double plume_opacity = 0.75;

  WeatherCoupling coupling = WeatherCoupling::kNone;
  // Discriminative mode: each fire's plume stays transparent for a delay
  // drawn uniformly from [min, max] minutes after ignition, and a fog bank
  // rendered like a plume drifts through a pre-ignition window whose length
  // and last offset are drawn from the given ranges. Only the in-sector
  // stations' signal component separates the two.
  int visibility_delay_min = 0;
  int visibility_delay_max = 2;
  int confuser_min_frames = 20;
  int confuser_max_frames = 30;
  int confuser_last_offset_min = -10;
  int confuser_last_offset_max = -3;
  std::string signal_component = "air_temperature";
  double signal_strength = 6.0;
  int weather_cadence_minutes = 5;

  int in_sector_stations = 3;
  int distractor_stations = 2;
  int jpeg_quality = 95;
  SplitFractions fractions;
  uint64_t seed = 1;

  image::TileGeometry geometry() const;
  void validate() const;
};

SyntheticSpec read_synthetic_spec(const std::filesystem::path& path);
void write_synthetic_spec(const std::filesystem::path& path, const SyntheticSpec& spec);

/// Writes manifest.csv, per-fire frame/mask directories and weather fixtures
/// (weather/stations.csv plus one series per station) under `out_dir`.
void generate_synthetic_dataset(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace smokeynet::dataset
