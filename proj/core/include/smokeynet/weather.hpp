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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smokeynet/time.hpp"

namespace smokeynet::weather {

// Raw attributes served per station record. The first six are the ones
// retained for the model; the rest are carried through ingest and filtered.
inline constexpr std::array<std::string_view, 23> kRawAttributes = {
    "air_temperature",      "relative_humidity",   "wind_speed",
    "wind_gust",            "wind_direction",      "dew_point",
    "pressure",             "sea_level_pressure",  "altimeter",
    "solar_radiation",      "precip_accum",        "precip_accum_one_hour",
    "peak_wind_speed",      "peak_wind_direction", "fuel_temp",
    "fuel_moisture",        "soil_temp",           "snow_depth",
    "visibility",           "heat_index",          "wind_chill",
    "wet_bulb_temp",        "volt",
};

inline constexpr std::array<std::string_view, 6> kSelectedAttributes = {
    "air_temperature", "relative_humidity", "wind_speed",
    "wind_gust",       "wind_direction",    "dew_point",
};

inline constexpr size_t kWeatherDim = 8;

// Canonical component order of a WeatherVector.
inline constexpr std::array<std::string_view, kWeatherDim> kWeatherComponents = {
    "air_temperature", "relative_humidity", "wind_speed", "wind_gust",
    "wind_direction",  "dew_point",         "u",          "v",
};

std::optional<size_t> raw_attribute_index(std::string_view name);
std::optional<size_t> component_index(std::string_view name);

struct WeatherStation {
  std::string station_id;
  double latitude = 0.0;
  double longitude = 0.0;
  std::optional<double> elevation;
  std::string network;

  void validate() const;
};

struct RawWeatherRecord {
  std::string station_id;
  UtcInstant timestamp;
  // Indexed like kRawAttributes; nullopt marks a missing cell.
  std::array<std::optional<double>, kRawAttributes.size()> attributes{};

  std::optional<double> value(std::string_view attribute) const;
};

struct SeriesGap {
  UtcInstant after;
  UtcInstant before;
};

struct WeatherSeries {
  std::string station_id;
  std::vector<RawWeatherRecord> records;
  std::chrono::seconds cadence{600};

  // Throws kDataError unless timestamps are strictly increasing.
  void validate() const;
  // Spacings larger than the nominal cadence.
  std::vector<SeriesGap> gaps() const;
};

struct CameraPose {
  std::string camera_id;
  double latitude = 0.0;
  double longitude = 0.0;
  double view_azimuth = 0.0;  // clockwise from north
  std::optional<double> field_of_view;

  void validate() const;
};

struct WeatherVector {
  std::array<double, kWeatherDim> values{};
  UtcInstant timestamp;
  bool normalized = false;
};

using AttributeValues = std::map<std::string, double>;

/// Attributes whose missing fraction within `window` is strictly below
/// `max_missing_fraction`, in schema order.
std::vector<std::string> filter_attributes(const WeatherSeries& series, TimeRange window,
                                           double max_missing_fraction);

struct WindComponents {
  double u = 0.0;
  double v = 0.0;
};

enum class WindConvention {
  kMeteorological,  // direction the wind blows from
  kMathematical,    // plain polar to cartesian with the angle from north
};

WindComponents wind_to_uv(double speed, double direction_deg,
                          WindConvention convention = WindConvention::kMeteorological);

/// Linear interpolation of the named attributes at `t` between the two
/// records bracketing it. Exact at record timestamps; never extrapolates.
std::vector<double> interpolate_series(const WeatherSeries& series,
                                       std::span<const std::string> attributes, UtcInstant t);

struct StationSelection {
  std::vector<std::string> station_ids;
  bool fallback = false;
};

double haversine_distance_m(double lat1, double lon1, double lat2, double lon2);
// Initial great-circle bearing from point 1 to point 2, degrees in [0, 360).
double initial_bearing_deg(double lat1, double lon1, double lat2, double lon2);

/// Nearest `k` stations inside the camera's view sector (±FOV/2 around the
/// view azimuth, ±90° when no FOV is set). Ties on distance go to the
/// lexicographically smaller id. Shortfalls are filled from the nearest
/// remaining stations and flagged as fallback.
StationSelection select_stations(const CameraPose& camera,
                                 std::span<const WeatherStation> registry, size_t k);

/// Element-wise mean over stations, with wind_direction combined as the
/// circular mean of unit vectors.
AttributeValues aggregate_stations(std::span<const AttributeValues> readings);

struct ComponentStats {
  double mean = 0.0;
  double sd = 1.0;
};

// Keyed by component name (see kWeatherComponents).
using NormalizationStats = std::map<std::string, ComponentStats>;

NormalizationStats compute_normalization_stats(std::span<const WeatherVector> raw_vectors);
WeatherVector normalize_weather(const WeatherVector& vector, const NormalizationStats& stats);
WeatherVector denormalize_weather(const WeatherVector& vector, const NormalizationStats& stats);

using SeriesStore = std::map<std::string, WeatherSeries>;

struct WeatherContext {
  std::vector<WeatherStation> registry;
  SeriesStore series;
  size_t stations_per_camera = 3;
  WindConvention wind_convention = WindConvention::kMeteorological;
};

/// Select among stations whose series spans `t`, interpolate and aggregate;
/// returns the unnormalized 8-vector.
WeatherVector build_raw_weather_vector(const CameraPose& camera, const WeatherContext& context,
                                       UtcInstant t);

WeatherVector build_weather_vector(const CameraPose& camera, const WeatherContext& context,
                                   UtcInstant t, const NormalizationStats& stats);

/// Eight independent standard-normal draws, deterministic in `seed`.
WeatherVector random_weather_vector(uint64_t seed, UtcInstant t);

}  // namespace smokeynet::weather
