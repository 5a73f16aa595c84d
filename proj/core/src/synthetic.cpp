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

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <opencv2/imgproc.hpp>

#include "smokeynet/dataset.hpp"
#include "smokeynet/error.hpp"
#include "smokeynet/weather_io.hpp"

namespace smokeynet::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(WeatherCoupling coupling) {
  return coupling == WeatherCoupling::kNone ? "none" : "discriminative";
}

WeatherCoupling parse_coupling(const std::string& text) {
  if (text == "none") return WeatherCoupling::kNone;
  if (text == "discriminative") return WeatherCoupling::kDiscriminative;
  fail(ErrorCode::kInvalidArgument, fmt::format("unknown weather coupling '{}'", text));
}

image::TileGeometry SyntheticSpec::geometry() const {
  return image::TileGeometry::for_grid(grid_rows, grid_cols, tile_size, stride);
}

void SyntheticSpec::validate() const {
  if (n_fires <= 0) fail(ErrorCode::kInvalidArgument, "n_fires must be positive");
  if (grid_rows <= 0 || grid_cols <= 0) fail(ErrorCode::kInvalidArgument, "empty grid");
  geometry();  // throws when not exactly tileable
  if (visibility_delay_min < 0 || visibility_delay_max < visibility_delay_min ||
      visibility_delay_max > kLastOffset + 1) {
    fail(ErrorCode::kInvalidArgument, "visibility delays must satisfy 0 <= min <= max <= 40");
  }
  if (confuser_min_frames < 0 || confuser_max_frames < confuser_min_frames ||
      confuser_last_offset_min > confuser_last_offset_max || confuser_last_offset_max > -2 ||
      confuser_last_offset_min - confuser_max_frames + 1 < kFirstOffset + 1) {
    fail(ErrorCode::kInvalidArgument,
         "confuser window must fit between offset -39 and two minutes before ignition");
  }
  if (weather_cadence_minutes < 1 || 60 % weather_cadence_minutes != 0) {
    fail(ErrorCode::kInvalidArgument, "weather_cadence_minutes must divide 60");
  }
  if (!weather::raw_attribute_index(signal_component) ||
      !weather::component_index(signal_component)) {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("signal_component '{}' is not a weather vector attribute", signal_component));
  }
  if (in_sector_stations < 1 || distractor_stations < 0) {
    fail(ErrorCode::kInvalidArgument, "need at least one in-sector station");
  }
}

SyntheticSpec read_synthetic_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, fmt::format("cannot open synthetic spec '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kDataError, fmt::format("{}: {}", path.string(), e.what()));
  }
  SyntheticSpec s;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("n_fires", s.n_fires);
  get("grid_rows", s.grid_rows);
  get("grid_cols", s.grid_cols);
  get("tile_size", s.tile_size);
  get("stride", s.stride);
  get("plume_initial_radius", s.plume_initial_radius);
  get("plume_growth_per_minute", s.plume_growth_per_minute);
  get("plume_rise_per_minute", s.plume_rise_per_minute);
  get("plume_opacity", s.plume_opacity);
  if (j.contains("coupling")) s.coupling = parse_coupling(j.at("coupling").get<std::string>());
  get("visibility_delay_min", s.visibility_delay_min);
  get("visibility_delay_max", s.visibility_delay_max);
  get("confuser_min_frames", s.confuser_min_frames);
  get("confuser_max_frames", s.confuser_max_frames);
  get("confuser_last_offset_min", s.confuser_last_offset_min);
  get("confuser_last_offset_max", s.confuser_last_offset_max);
  get("weather_cadence_minutes", s.weather_cadence_minutes);
  get("signal_component", s.signal_component);
  get("signal_strength", s.signal_strength);
  get("in_sector_stations", s.in_sector_stations);
  get("distractor_stations", s.distractor_stations);
  get("jpeg_quality", s.jpeg_quality);
  if (j.contains("fractions")) {
    const auto& f = j.at("fractions");
    s.fractions = {f.at(0).get<double>(), f.at(1).get<double>(), f.at(2).get<double>()};
  }
  get("seed", s.seed);
  s.validate();
  return s;
}

void write_synthetic_spec(const fs::path& path, const SyntheticSpec& s) {
  json j{{"n_fires", s.n_fires},
         {"grid_rows", s.grid_rows},
         {"grid_cols", s.grid_cols},
         {"tile_size", s.tile_size},
         {"stride", s.stride},
         {"plume_initial_radius", s.plume_initial_radius},
         {"plume_growth_per_minute", s.plume_growth_per_minute},
         {"plume_rise_per_minute", s.plume_rise_per_minute},
         {"plume_opacity", s.plume_opacity},
         {"coupling", to_string(s.coupling)},
         {"visibility_delay_min", s.visibility_delay_min},
         {"visibility_delay_max", s.visibility_delay_max},
         {"confuser_min_frames", s.confuser_min_frames},
         {"confuser_max_frames", s.confuser_max_frames},
         {"confuser_last_offset_min", s.confuser_last_offset_min},
         {"confuser_last_offset_max", s.confuser_last_offset_max},
         {"weather_cadence_minutes", s.weather_cadence_minutes},
         {"signal_component", s.signal_component},
         {"signal_strength", s.signal_strength},
         {"in_sector_stations", s.in_sector_stations},
         {"distractor_stations", s.distractor_stations},
         {"jpeg_quality", s.jpeg_quality},
         {"fractions", {s.fractions.train, s.fractions.val, s.fractions.test}},
         {"seed", s.seed}};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::kIo, fmt::format("cannot write '{}'", path.string()));
}

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct AttributeModel {
  double lo;
  double hi;
  double station_sd;
  double noise_sd;
};

// Plausible ranges for the retained attributes, in kSelectedAttributes order.
constexpr AttributeModel kSelectedModels[] = {
    {12.0, 32.0, 0.4, 0.15},  // air_temperature, C
    {10.0, 60.0, 1.5, 0.5},   // relative_humidity, %
    {0.5, 7.0, 0.3, 0.15},    // wind_speed, m/s
    {2.0, 5.0, 0.3, 0.2},     // wind_gust excess over speed, m/s
    {0.0, 360.0, 8.0, 3.0},   // wind_direction, deg
    {8.0, 18.0, 0.4, 0.15},   // dew_point depression below temperature, C
};

std::array<uint8_t, 3> clamp_rgb(double r, double g, double b) {
  auto c = [](double v) { return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))); };
  return {c(r), c(g), c(b)};
}

// Destination point given a start, bearing and distance on a sphere.
std::pair<double, double> offset_point(double lat, double lon, double bearing_deg, double dist_m) {
  constexpr double kR = 6371008.8;
  const double d = dist_m / kR;
  const double th = bearing_deg * kDegToRad;
  const double p1 = lat * kDegToRad;
  const double l1 = lon * kDegToRad;
  const double p2 = std::asin(std::sin(p1) * std::cos(d) + std::cos(p1) * std::sin(d) * std::cos(th));
  const double l2 = l1 + std::atan2(std::sin(th) * std::sin(d) * std::cos(p1),
                                    std::cos(d) - std::sin(p1) * std::sin(p2));
  return {p2 / kDegToRad, l2 / kDegToRad};
}

struct FireScene {
  int height;
  int width;
  int horizon;
  std::array<double, 3> sky_top;
  std::array<double, 3> sky_bottom;
  std::array<double, 3> ground;
  cv::Mat texture;  // CV_64F, fixed per fire
  double drift_amplitude;
  double drift_phase;
  double exposure_trend;  // intensity change per minute
  double plume_x;
  double plume_y;
  int visibility_delay;
  bool confuser = false;
  double confuser_x = 0.0;
  double confuser_y = 0.0;
  int confuser_first = 0;
  int confuser_last = -1;
};

cv::Mat render_frame(const FireScene& scene, const SyntheticSpec& spec, int offset,
                     std::mt19937_64& rng, cv::Mat* mask) {
  std::normal_distribution<double> noise(0.0, 3.0);
  const double drift =
      scene.drift_amplitude * std::sin(2.0 * std::numbers::pi * (offset + scene.drift_phase) / 45.0) +
      scene.exposure_trend * offset;
  cv::Mat img(scene.height, scene.width, CV_8UC3);
  *mask = cv::Mat::zeros(scene.height, scene.width, CV_8UC1);

  struct Blob {
    double x, y, radius, alpha;
    bool labelled;
  };
  std::vector<Blob> blobs;
  auto blob_at = [&spec](double x, double y, int age, double alpha, bool labelled) {
    return Blob{x, y - spec.plume_rise_per_minute * age,
                spec.plume_initial_radius + spec.plume_growth_per_minute * age, alpha, labelled};
  };
  if (offset >= 0) {
    const double alpha = offset >= scene.visibility_delay ? spec.plume_opacity : 0.0;
    blobs.push_back(blob_at(scene.plume_x, scene.plume_y, offset, alpha, true));
  }
  if (scene.confuser && offset >= scene.confuser_first && offset <= scene.confuser_last) {
    blobs.push_back(blob_at(scene.confuser_x, scene.confuser_y, offset - scene.confuser_first,
                            spec.plume_opacity, false));
  }
  const std::array<double, 3> smoke{218.0, 218.0, 224.0};

  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      std::array<double, 3> px;
      if (y < scene.horizon) {
        const double a = static_cast<double>(y) / std::max(1, scene.horizon - 1);
        for (int c = 0; c < 3; ++c) px[c] = scene.sky_top[c] * (1 - a) + scene.sky_bottom[c] * a;
      } else {
        const double tex = scene.texture.at<double>(y, x);
        for (int c = 0; c < 3; ++c) px[c] = scene.ground[c] + tex;
      }
      for (const auto& b : blobs) {
        const double dx = (x - b.x) / b.radius;
        const double dy = (y - b.y) / (1.4 * b.radius);
        const double shape = std::exp(-(dx * dx + dy * dy));
        if (b.labelled && shape > 0.3) mask->at<uint8_t>(y, x) = 255;
        const double alpha = b.alpha * shape;
        for (int c = 0; c < 3; ++c) px[c] = px[c] * (1.0 - alpha) + smoke[c] * alpha;
      }
      const auto rgb = clamp_rgb(px[0] + drift + noise(rng), px[1] + drift + noise(rng),
                                 px[2] + drift + noise(rng));
      img.at<cv::Vec3b>(y, x) = {rgb[0], rgb[1], rgb[2]};
    }
  }
  return img;
}

}  // namespace

void generate_synthetic_dataset(const SyntheticSpec& spec, const fs::path& out_dir) {
  spec.validate();
  const auto geom = spec.geometry();
  fs::create_directories(out_dir / "weather");

  Manifest manifest;
  std::vector<weather::WeatherStation> stations;
  const UtcInstant epoch = parse_iso8601("2016-06-03T00:00:00Z");
  const auto signal_index = *weather::raw_attribute_index(spec.signal_component);

  for (int f = 0; f < spec.n_fires; ++f) {
    std::seed_seq seq{static_cast<uint64_t>(spec.seed), static_cast<uint64_t>(f), uint64_t{0x5eed}};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    ManifestEntry entry;
    entry.fire_id = fmt::format("fire_{:04d}", f);
    entry.camera_id = fmt::format("cam{:03d}", f);
    const long minutes = static_cast<long>(f) * 7 * 24 * 60 + 600 + 10 * static_cast<long>(uniform(0, 36));
    entry.ignition = add_minutes(epoch, minutes);
    entry.latitude = uniform(32.6, 33.9);
    entry.longitude = uniform(-117.4, -116.2);
    entry.view_azimuth = std::floor(uniform(0.0, 360.0));
    manifest.push_back(entry);

    // Scene.
    FireScene scene;
    scene.height = geom.height;
    scene.width = geom.width;
    scene.horizon = static_cast<int>(std::lround(geom.height * uniform(0.22, 0.38)));
    scene.sky_top = {uniform(90, 150), uniform(140, 185), uniform(200, 245)};
    scene.sky_bottom = {uniform(160, 210), uniform(170, 215), uniform(190, 235)};
    scene.ground = {uniform(55, 140), uniform(60, 140), uniform(35, 100)};
    scene.texture = cv::Mat(geom.height, geom.width, CV_64F);
    std::normal_distribution<double> tex(0.0, 10.0);
    for (int y = 0; y < geom.height; ++y) {
      for (int x = 0; x < geom.width; ++x) scene.texture.at<double>(y, x) = tex(rng);
    }
    cv::GaussianBlur(scene.texture, scene.texture, cv::Size(3, 3), 0.8);
    scene.drift_amplitude = uniform(0.0, 6.0);
    scene.drift_phase = uniform(0.0, 45.0);
    scene.exposure_trend = uniform(-0.3, 0.3);
    const double margin = 3.0;
    scene.plume_x = uniform(margin, geom.width - margin);
    scene.plume_y = uniform(scene.horizon + margin + 2.0, geom.height - margin);
    auto uniform_int = [&rng](int lo, int hi) {
      return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    const bool coupled = spec.coupling == WeatherCoupling::kDiscriminative;
    scene.visibility_delay =
        coupled ? uniform_int(spec.visibility_delay_min, spec.visibility_delay_max) : 0;
    if (coupled && spec.confuser_max_frames > 0) {
      const int length = uniform_int(spec.confuser_min_frames, spec.confuser_max_frames);
      scene.confuser = length > 0;
      scene.confuser_last = uniform_int(spec.confuser_last_offset_min, spec.confuser_last_offset_max);
      scene.confuser_first = scene.confuser_last - length + 1;
      scene.confuser_x = uniform(margin, geom.width - margin);
      scene.confuser_y = uniform(scene.horizon + margin + 2.0, geom.height - margin);
    }

    const fs::path fire_dir = out_dir / entry.fire_id;
    fs::create_directories(fire_dir);
    for (int o = kFirstOffset; o <= kLastOffset; ++o) {
      cv::Mat mask;
      const cv::Mat frame = render_frame(scene, spec, o, rng, &mask);
      image::write_rgb((fire_dir / frame_filename(entry.camera_id, o, ".jpg")).string(), frame,
                       spec.jpeg_quality);
      image::write_mask((fire_dir / mask_filename(entry.camera_id, o)).string(), mask);
    }

    // Weather: in-sector stations see the scene; distractors sit behind the
    // camera and never carry the signal.
    std::array<double, 6> base{};
    for (size_t a = 0; a < base.size(); ++a) {
      base[a] = uniform(kSelectedModels[a].lo, kSelectedModels[a].hi);
    }
    if (coupled && signal_index < base.size()) {
      // A narrow per-fire range keeps the ignition step dominant.
      const auto& m = kSelectedModels[signal_index];
      base[signal_index] = 0.5 * (m.lo + m.hi) + uniform(-1.0, 1.0);
    }
    const int n_stations = spec.in_sector_stations + spec.distractor_stations;
    for (int s = 0; s < n_stations; ++s) {
      const bool in_sector = s < spec.in_sector_stations;
      weather::WeatherStation st;
      st.station_id = fmt::format("{}_S{}", entry.fire_id, s);
      st.network = in_sector ? "HPWREN" : "SDGE";
      const double bearing = in_sector ? entry.view_azimuth + uniform(-50.0, 50.0)
                                       : entry.view_azimuth + 180.0 + uniform(-40.0, 40.0);
      const double dist = in_sector ? uniform(2000.0, 15000.0) : uniform(800.0, 6000.0);
      std::tie(st.latitude, st.longitude) =
          offset_point(entry.latitude, entry.longitude, std::fmod(bearing + 360.0, 360.0), dist);
      st.elevation = uniform(200.0, 1800.0);
      stations.push_back(st);

      std::normal_distribution<double> normal(0.0, 1.0);
      std::array<double, 6> station_offset{};
      for (size_t a = 0; a < 6; ++a) station_offset[a] = kSelectedModels[a].station_sd * normal(rng);
      std::array<double, weather::kRawAttributes.size()> missing_rate{};
      for (size_t a = 6; a < missing_rate.size(); ++a) missing_rate[a] = uniform(0.1, 0.6);

      weather::WeatherSeries series;
      series.station_id = st.station_id;
      for (int m = -60; m <= 60; m += spec.weather_cadence_minutes) {
        weather::RawWeatherRecord rec;
        rec.station_id = st.station_id;
        rec.timestamp = add_minutes(entry.ignition, m);
        std::array<double, 6> v{};
        for (size_t a = 0; a < 6; ++a) {
          v[a] = base[a] + station_offset[a] + kSelectedModels[a].noise_sd * normal(rng);
        }
        if (coupled && in_sector && m >= 0 && signal_index < 6) {
          v[signal_index] += spec.signal_strength;
        }
        const double temp = v[0];
        const double speed = std::max(0.0, v[2]);
        rec.attributes[0] = temp;
        rec.attributes[1] = std::clamp(v[1], 1.0, 100.0);
        rec.attributes[2] = speed;
        rec.attributes[3] = speed + std::max(0.0, v[3]);
        rec.attributes[4] = std::fmod(std::fmod(v[4], 360.0) + 360.0, 360.0);
        rec.attributes[5] = temp - v[5];
        for (size_t a = 6; a < weather::kRawAttributes.size(); ++a) {
          const double draw = normal(rng);
          if (unit(rng) >= missing_rate[a]) rec.attributes[a] = 100.0 + 10.0 * draw;
        }
        series.records.push_back(std::move(rec));
      }
      weather::write_weather_series(out_dir / "weather" / (st.station_id + ".csv"), series);
    }
  }

  const auto split = make_splits(manifest, spec.fractions, spec.seed);
  for (auto& e : manifest) {
    if (std::find(split.train.begin(), split.train.end(), e.fire_id) != split.train.end()) {
      e.split = "train";
    } else if (std::find(split.val.begin(), split.val.end(), e.fire_id) != split.val.end()) {
      e.split = "val";
    } else {
      e.split = "test";
    }
  }
  write_manifest(out_dir / "manifest.csv", manifest);
  weather::write_station_registry(out_dir / "weather" / "stations.csv", stations);
  write_synthetic_spec(out_dir / "synthetic_spec.json", spec);
}

}  // namespace smokeynet::dataset
