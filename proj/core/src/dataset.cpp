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

#include "smokeynet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <fmt/format.h>

#include "smokeynet/csv.hpp"
#include "smokeynet/error.hpp"
#include "smokeynet/weather_io.hpp"

namespace smokeynet::dataset {

namespace fs = std::filesystem;

weather::CameraPose ManifestEntry::camera() const {
  weather::CameraPose pose{camera_id, latitude, longitude, view_azimuth, field_of_view};
  pose.validate();
  return pose;
}

Manifest read_manifest(const fs::path& path) {
  const auto table = csv::read(path);
  const size_t c_fire = table.column("fire_id");
  const size_t c_cam = table.column("camera_id");
  const size_t c_ign = table.column("ignition");
  const size_t c_lat = table.column("latitude");
  const size_t c_lon = table.column("longitude");
  const size_t c_az = table.column("view_azimuth");
  const size_t c_split = table.column("split");
  const bool has_fov = table.has_column("field_of_view");
  Manifest out;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    ManifestEntry e;
    e.fire_id = row[c_fire];
    e.camera_id = row[c_cam];
    e.ignition = parse_iso8601(row[c_ign]);
    e.latitude = csv::parse_double(row[c_lat], "latitude");
    e.longitude = csv::parse_double(row[c_lon], "longitude");
    e.view_azimuth = csv::parse_double(row[c_az], "view_azimuth");
    if (has_fov && !row[table.column("field_of_view")].empty()) {
      e.field_of_view = csv::parse_double(row[table.column("field_of_view")], "field_of_view");
    }
    e.split = row[c_split];
    if (!e.split.empty() && e.split != "train" && e.split != "val" && e.split != "test") {
      fail(ErrorCode::kDataError,
           fmt::format("{}: fire {} has unknown split '{}'", path.string(), e.fire_id, e.split));
    }
    if (!seen.insert(e.fire_id).second) {
      fail(ErrorCode::kDataError, fmt::format("{}: duplicate fire_id {}", path.string(), e.fire_id));
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  csv::Table table;
  table.header = {"fire_id",      "camera_id", "ignition", "latitude", "longitude",
                  "view_azimuth", "split",     "field_of_view"};
  for (const auto& e : manifest) {
    table.rows.push_back({e.fire_id, e.camera_id, format_iso8601(e.ignition),
                          csv::format_double(e.latitude), csv::format_double(e.longitude),
                          csv::format_double(e.view_azimuth), e.split,
                          e.field_of_view ? csv::format_double(*e.field_of_view) : ""});
  }
  csv::write(path, table);
}

std::string frame_filename(const std::string& camera_id, int offset, const std::string& ext) {
  return fmt::format("{}_{:+04d}{}", camera_id, offset, ext);
}

std::string mask_filename(const std::string& camera_id, int offset) {
  return fmt::format("{}_{:+04d}_mask.png", camera_id, offset);
}

FireSequence load_fire_sequence(const ManifestEntry& entry, const fs::path& data_root) {
  const fs::path dir = data_root / entry.fire_id;
  if (!fs::is_directory(dir)) {
    fail(ErrorCode::kNotFound, fmt::format("fire {}: missing directory {}", entry.fire_id,
                                           dir.string()));
  }
  // offset -> frame path
  std::map<int, fs::path> found;
  std::vector<int> duplicates;
  const std::string prefix = entry.camera_id + "_";
  for (const auto& item : fs::directory_iterator(dir)) {
    if (!item.is_regular_file()) continue;
    const std::string name = item.path().filename().string();
    const std::string ext = item.path().extension().string();
    if (name.rfind(prefix, 0) != 0 || (ext != ".jpg" && ext != ".png")) continue;
    const std::string stem = item.path().stem().string().substr(prefix.size());
    if (stem.size() < 2 || (stem[0] != '+' && stem[0] != '-') ||
        stem.find("_mask") != std::string::npos) {
      continue;
    }
    const int offset = static_cast<int>(csv::parse_long(stem, "frame offset"));
    if (!found.emplace(offset, item.path()).second) duplicates.push_back(offset);
  }
  std::vector<int> missing;
  std::vector<int> unexpected;
  for (int o = kFirstOffset; o <= kLastOffset; ++o) {
    if (!found.count(o)) missing.push_back(o);
  }
  for (const auto& [o, p] : found) {
    if (o < kFirstOffset || o > kLastOffset) unexpected.push_back(o);
  }
  auto list = [](const std::vector<int>& v) {
    std::string s;
    for (int o : v) s += (s.empty() ? "" : " ") + fmt::format("{:+03d}", o);
    return s;
  };
  if (!duplicates.empty()) {
    fail(ErrorCode::kDataError,
         fmt::format("fire {}: duplicate frame offsets {}", entry.fire_id, list(duplicates)));
  }
  if (!missing.empty()) {
    fail(ErrorCode::kDataError,
         fmt::format("fire {}: missing frame offsets {}", entry.fire_id, list(missing)));
  }
  if (!unexpected.empty()) {
    fail(ErrorCode::kDataError, fmt::format("fire {}: frame offsets outside [-40, +39]: {}",
                                            entry.fire_id, list(unexpected)));
  }

  FireSequence seq;
  seq.fire_id = entry.fire_id;
  seq.camera = entry.camera();
  seq.ignition = entry.ignition;
  seq.frames.reserve(kFramesPerFire);
  seq.masks.reserve(kFramesPerFire);
  for (int o = kFirstOffset; o <= kLastOffset; ++o) {
    image::RawFrame frame;
    frame.camera_id = entry.camera_id;
    frame.minute_offset = o;
    frame.label = o >= 0;
    frame.pixels = image::read_rgb(found.at(o).string());
    seq.frames.push_back(std::move(frame));
    const fs::path mask_path = dir / mask_filename(entry.camera_id, o);
    seq.masks.push_back(fs::exists(mask_path) ? image::read_mask(mask_path.string()) : cv::Mat());
  }
  return seq;
}

std::vector<weather::WeatherVector> align_weather_to_frames(
    const FireSequence& seq, const weather::WeatherContext& context,
    const weather::NormalizationStats* stats) {
  std::vector<weather::WeatherVector> out;
  out.reserve(seq.frames.size());
  for (size_t i = 0; i < seq.frames.size(); ++i) {
    try {
      auto v = weather::build_raw_weather_vector(seq.camera, context, seq.frame_time(i));
      out.push_back(stats ? weather::normalize_weather(v, *stats) : v);
    } catch (const Error& e) {
      rethrow_with_context(e, fmt::format("fire {} frame {:+03d}", seq.fire_id,
                                          seq.frames[i].minute_offset));
    }
  }
  return out;
}

AlignedSample make_sample(const std::string& fire_id, const image::PreparedImage& previous,
                          const image::PreparedImage& current, const image::GroundTruthMask& mask,
                          const weather::WeatherVector& weather, const SampleOptions& options,
                          const image::AugmentOptions* augment, uint64_t augment_seed) {
  image::PreparedImage prev = previous;
  image::PreparedImage curr = current;
  image::GroundTruthMask m = mask;
  if (augment != nullptr && augment->enabled) {
    const auto params = image::sample_augment(augment_seed, curr.pixels.rows, curr.pixels.cols,
                                              *augment);
    prev = image::apply_augment(prev, params);
    curr = image::apply_augment(curr, params);
    if (!m.empty()) m = image::apply_augment_mask(m, params);
  }
  AlignedSample s;
  s.fire_id = fire_id;
  s.offset = current.source_offset;
  s.previous = image::tile_image(image::normalize_image(prev, options.normalization),
                                 options.geometry);
  s.current = image::tile_image(image::normalize_image(curr, options.normalization),
                                options.geometry);
  s.weather = weather;
  s.image_label = current.source_offset >= 0;
  if (m.empty()) {
    s.tile_labels.assign(s.current.size(), s.image_label ? 1 : 0);
  } else {
    s.tile_labels = image::label_tiles(s.current, m, options.geometry.tile_size,
                                       options.min_overlap_px);
  }
  s.current.labels = s.tile_labels;
  return s;
}

std::vector<AlignedSample> pair_consecutive_frames(
    const FireSequence& seq, const std::vector<weather::WeatherVector>& weather,
    const SampleOptions& options) {
  if (weather.size() != seq.frames.size()) {
    fail(ErrorCode::kShapeMismatch,
         fmt::format("fire {}: {} weather vectors for {} frames", seq.fire_id, weather.size(),
                     seq.frames.size()));
  }
  std::vector<image::PreparedImage> prepared;
  prepared.reserve(seq.frames.size());
  for (const auto& f : seq.frames) prepared.push_back(image::resize_crop(f, options.geometry));
  std::vector<AlignedSample> out;
  out.reserve(seq.frames.size() - 1);
  for (size_t i = 1; i < seq.frames.size(); ++i) {
    const cv::Mat mask = seq.masks.empty() || seq.masks[i].empty()
                             ? cv::Mat()
                             : image::resize_crop_mask(seq.masks[i], options.geometry);
    out.push_back(make_sample(seq.fire_id, prepared[i - 1], prepared[i], mask, weather[i], options,
                              nullptr, 0));
  }
  return out;
}

void DatasetSplit::validate() const {
  std::set<std::string> seen;
  for (const auto* list : {&train, &val, &test}) {
    for (const auto& id : *list) {
      if (!seen.insert(id).second) {
        fail(ErrorCode::kInvalidArgument, fmt::format("fire {} appears in more than one split", id));
      }
    }
  }
}

std::array<size_t, 3> split_counts(size_t n, const SplitFractions& f) {
  const std::array<double, 3> fr{f.train, f.val, f.test};
  double sum = 0.0;
  for (double x : fr) {
    if (x < 0.0) fail(ErrorCode::kInvalidArgument, "split fractions must be non-negative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(ErrorCode::kInvalidArgument, fmt::format("split fractions sum to {}, not 1", sum));
  }
  std::array<size_t, 3> counts{};
  std::array<double, 3> remainder{};
  size_t assigned = 0;
  for (size_t i = 0; i < 3; ++i) {
    const double exact = fr[i] * static_cast<double>(n);
    counts[i] = static_cast<size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return remainder[a] > remainder[b] + 1e-12; });
  for (size_t k = 0; assigned < n; ++k, ++assigned) counts[order[k % 3]]++;
  return counts;
}

DatasetSplit make_splits(const Manifest& manifest, const SplitFractions& fractions,
                         uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(manifest.size());
  for (const auto& e : manifest) ids.push_back(e.fire_id);
  std::sort(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the permutation is library-independent.
  for (size_t i = ids.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng() % i);
    std::swap(ids[i - 1], ids[j]);
  }
  const auto counts = split_counts(ids.size(), fractions);
  DatasetSplit split;
  split.train.assign(ids.begin(), ids.begin() + static_cast<long>(counts[0]));
  split.val.assign(ids.begin() + static_cast<long>(counts[0]),
                   ids.begin() + static_cast<long>(counts[0] + counts[1]));
  split.test.assign(ids.begin() + static_cast<long>(counts[0] + counts[1]), ids.end());
  return split;
}

DatasetSplit make_splits(const Manifest& manifest, const DatasetSplit& explicit_lists) {
  explicit_lists.validate();
  std::set<std::string> known;
  for (const auto& e : manifest) known.insert(e.fire_id);
  for (const auto* list : {&explicit_lists.train, &explicit_lists.val, &explicit_lists.test}) {
    for (const auto& id : *list) {
      if (!known.count(id)) {
        fail(ErrorCode::kInvalidArgument, fmt::format("split names unknown fire {}", id));
      }
    }
  }
  return explicit_lists;
}

DatasetSplit split_from_manifest(const Manifest& manifest) {
  DatasetSplit split;
  for (const auto& e : manifest) {
    if (e.split == "train") split.train.push_back(e.fire_id);
    if (e.split == "val") split.val.push_back(e.fire_id);
    if (e.split == "test") split.test.push_back(e.fire_id);
  }
  split.validate();
  return split;
}

Corpus Corpus::load(const fs::path& data_root, const image::TileGeometry& geometry) {
  geometry.validate();
  Corpus corpus;
  corpus.options_.geometry = geometry;
  corpus.manifest_ = read_manifest(data_root / "manifest.csv");
  const fs::path weather_dir = data_root / "weather";
  std::optional<weather::WeatherContext> context;
  if (fs::exists(weather_dir / "stations.csv")) {
    context = weather::load_weather_directory(weather_dir);
  }
  for (const auto& entry : corpus.manifest_) {
    auto seq = load_fire_sequence(entry, data_root);
    PreparedFire fire;
    fire.entry = entry;
    fire.frames.reserve(seq.frames.size());
    for (size_t i = 0; i < seq.frames.size(); ++i) {
      fire.frames.push_back(image::resize_crop(seq.frames[i], geometry));
      fire.masks.push_back(seq.masks[i].empty() ? cv::Mat()
                                                : image::resize_crop_mask(seq.masks[i], geometry));
    }
    if (context) fire.raw_weather = align_weather_to_frames(seq, *context);
    corpus.fires_.push_back(std::move(fire));
  }
  return corpus;
}

std::optional<size_t> Corpus::fire_index(const std::string& fire_id) const {
  for (size_t i = 0; i < fires_.size(); ++i) {
    if (fires_[i].entry.fire_id == fire_id) return i;
  }
  return std::nullopt;
}

std::vector<SampleRef> Corpus::samples(const std::vector<std::string>& fire_ids) const {
  std::vector<SampleRef> out;
  for (const auto& id : fire_ids) {
    const auto idx = fire_index(id);
    if (!idx) fail(ErrorCode::kNotFound, fmt::format("fire {} not in corpus", id));
    for (size_t f = 1; f < fires_[*idx].frames.size(); ++f) out.push_back({*idx, f});
  }
  return out;
}

weather::NormalizationStats Corpus::fit_normalization(
    const std::vector<std::string>& train_ids) const {
  std::vector<weather::WeatherVector> vectors;
  for (const auto& id : train_ids) {
    const auto idx = fire_index(id);
    if (!idx) fail(ErrorCode::kNotFound, fmt::format("fire {} not in corpus", id));
    const auto& raw = fires_[*idx].raw_weather;
    if (raw.empty()) fail(ErrorCode::kNotFound, "corpus has no weather data");
    vectors.insert(vectors.end(), raw.begin(), raw.end());
  }
  return weather::compute_normalization_stats(vectors);
}

void Corpus::set_normalization(const weather::NormalizationStats& stats) {
  stats_ = stats;
  for (auto& fire : fires_) {
    fire.weather.clear();
    for (const auto& v : fire.raw_weather) {
      fire.weather.push_back(weather::normalize_weather(v, stats));
    }
  }
}

AlignedSample Corpus::sample(const SampleRef& ref, const image::AugmentOptions* augment,
                             uint64_t augment_seed) const {
  const auto& fire = fires_.at(ref.fire);
  if (ref.frame == 0 || ref.frame >= fire.frames.size()) {
    fail(ErrorCode::kInvalidArgument, "sample frame index out of range");
  }
  weather::WeatherVector w;
  if (!fire.weather.empty()) {
    w = fire.weather[ref.frame];
  } else if (!fire.raw_weather.empty()) {
    w = fire.raw_weather[ref.frame];
  }
  w.timestamp = add_minutes(fire.entry.ignition, fire.frames[ref.frame].source_offset);
  return make_sample(fire.entry.fire_id, fire.frames[ref.frame - 1], fire.frames[ref.frame],
                     fire.masks[ref.frame], w, options_, augment, augment_seed);
}

}  // namespace smokeynet::dataset
