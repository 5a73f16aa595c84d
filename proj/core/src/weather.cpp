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

#include "smokeynet/weather.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "smokeynet/error.hpp"

namespace smokeynet::weather {
namespace {

constexpr double kEarthRadiusM = 6371008.8;
constexpr double kDegToRad = std::numbers::pi / 180.0;

double wrap_degrees(double deg) {
  double wrapped = std::fmod(deg, 360.0);
  if (wrapped < 0.0) wrapped += 360.0;
  return wrapped;
}

// Signed smallest difference a - b in (-180, 180].
double angular_difference(double a, double b) {
  double d = wrap_degrees(a - b);
  if (d > 180.0) d -= 360.0;
  return d;
}

}  // namespace

std::optional<size_t> raw_attribute_index(std::string_view name) {
  for (size_t i = 0; i < kRawAttributes.size(); ++i) {
    if (kRawAttributes[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<size_t> component_index(std::string_view name) {
  for (size_t i = 0; i < kWeatherComponents.size(); ++i) {
    if (kWeatherComponents[i] == name) return i;
  }
  return std::nullopt;
}

void WeatherStation::validate() const {
  if (station_id.empty()) fail(ErrorCode::kDataError, "station with empty id");
  if (!(latitude >= -90.0 && latitude <= 90.0) || !(longitude >= -180.0 && longitude <= 180.0)) {
    fail(ErrorCode::kDataError,
         fmt::format("station {} has invalid coordinates ({}, {})", station_id, latitude,
                     longitude));
  }
}

std::optional<double> RawWeatherRecord::value(std::string_view attribute) const {
  const auto idx = raw_attribute_index(attribute);
  if (!idx) fail(ErrorCode::kInvalidArgument, fmt::format("unknown attribute '{}'", attribute));
  return attributes[*idx];
}

void WeatherSeries::validate() const {
  for (size_t i = 1; i < records.size(); ++i) {
    if (records[i].timestamp <= records[i - 1].timestamp) {
      fail(ErrorCode::kDataError,
           fmt::format("station {}: timestamps not strictly increasing at {}", station_id,
                       format_iso8601(records[i].timestamp)));
    }
  }
}

std::vector<SeriesGap> WeatherSeries::gaps() const {
  std::vector<SeriesGap> out;
  for (size_t i = 1; i < records.size(); ++i) {
    if (records[i].timestamp - records[i - 1].timestamp > cadence) {
      out.push_back({records[i - 1].timestamp, records[i].timestamp});
    }
  }
  return out;
}

void CameraPose::validate() const {
  if (!(view_azimuth >= 0.0 && view_azimuth < 360.0)) {
    fail(ErrorCode::kDataError,
         fmt::format("camera {}: view_azimuth {} outside [0, 360)", camera_id, view_azimuth));
  }
  if (field_of_view && !(*field_of_view > 0.0 && *field_of_view <= 360.0)) {
    fail(ErrorCode::kDataError,
         fmt::format("camera {}: field_of_view {} outside (0, 360]", camera_id, *field_of_view));
  }
}

std::vector<std::string> filter_attributes(const WeatherSeries& series, TimeRange window,
                                           double max_missing_fraction) {
  if (window.empty()) fail(ErrorCode::kInvalidArgument, "empty filter window");
  if (!(max_missing_fraction >= 0.0 && max_missing_fraction <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "max_missing_fraction must lie in [0, 1]");
  }
  std::array<size_t, kRawAttributes.size()> missing{};
  size_t total = 0;
  for (const auto& record : series.records) {
    if (!window.contains(record.timestamp)) continue;
    ++total;
    for (size_t a = 0; a < kRawAttributes.size(); ++a) {
      if (!record.attributes[a]) ++missing[a];
    }
  }
  if (total == 0) fail(ErrorCode::kDataError, "no records in window");
  std::vector<std::string> kept;
  for (size_t a = 0; a < kRawAttributes.size(); ++a) {
    // Integer comparison avoids rounding at the boundary (5 of 100 is not < 0.05).
    if (static_cast<double>(missing[a]) < max_missing_fraction * static_cast<double>(total)) {
      kept.emplace_back(kRawAttributes[a]);
    }
  }
  return kept;
}

WindComponents wind_to_uv(double speed, double direction_deg, WindConvention convention) {
  if (std::isnan(speed) || std::isnan(direction_deg)) {
    fail(ErrorCode::kInvalidArgument, "wind_to_uv: NaN input");
  }
  if (speed < 0.0) fail(ErrorCode::kInvalidArgument, "wind_to_uv: negative speed");
  if (!(direction_deg >= 0.0 && direction_deg < 360.0)) {
    fail(ErrorCode::kInvalidArgument, "wind_to_uv: direction outside [0, 360)");
  }
  const double theta = direction_deg * kDegToRad;
  const double sign = convention == WindConvention::kMeteorological ? -1.0 : 1.0;
  return {sign * speed * std::sin(theta), sign * speed * std::cos(theta)};
}

std::vector<double> interpolate_series(const WeatherSeries& series,
                                       std::span<const std::string> attributes, UtcInstant t) {
  const auto& recs = series.records;
  if (recs.empty() || t < recs.front().timestamp || t > recs.back().timestamp) {
    fail(ErrorCode::kDataError,
         fmt::format("station {}: extrapolation not supported at {}", series.station_id,
                     format_iso8601(t)));
  }
  std::vector<size_t> index;
  index.reserve(attributes.size());
  for (const auto& name : attributes) {
    const auto idx = raw_attribute_index(name);
    if (!idx) fail(ErrorCode::kInvalidArgument, fmt::format("unknown attribute '{}'", name));
    index.push_back(*idx);
  }
  auto upper = std::lower_bound(recs.begin(), recs.end(), t,
                                [](const RawWeatherRecord& r, UtcInstant x) {
                                  return r.timestamp < x;
                                });
  std::vector<double> out(attributes.size());
  if (upper->timestamp == t) {
    for (size_t i = 0; i < index.size(); ++i) {
      const auto& v = upper->attributes[index[i]];
      if (!v) {
        fail(ErrorCode::kDataError,
             fmt::format("station {}: missing {} at {}", series.station_id, attributes[i],
                         format_iso8601(t)));
      }
      out[i] = *v;
    }
    return out;
  }
  const auto lower = std::prev(upper);
  const double span = static_cast<double>((upper->timestamp - lower->timestamp).count());
  const double w = static_cast<double>((t - lower->timestamp).count()) / span;
  for (size_t i = 0; i < index.size(); ++i) {
    const auto& a = lower->attributes[index[i]];
    const auto& b = upper->attributes[index[i]];
    if (!a || !b) {
      fail(ErrorCode::kDataError,
           fmt::format("station {}: missing {} between {} and {}", series.station_id,
                       attributes[i], format_iso8601(lower->timestamp),
                       format_iso8601(upper->timestamp)));
    }
    out[i] = *a + w * (*b - *a);
  }
  return out;
}

double haversine_distance_m(double lat1, double lon1, double lat2, double lon2) {
  const double p1 = lat1 * kDegToRad;
  const double p2 = lat2 * kDegToRad;
  const double dphi = (lat2 - lat1) * kDegToRad;
  const double dlambda = (lon2 - lon1) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(p1) * std::cos(p2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

double initial_bearing_deg(double lat1, double lon1, double lat2, double lon2) {
  const double p1 = lat1 * kDegToRad;
  const double p2 = lat2 * kDegToRad;
  const double dlambda = (lon2 - lon1) * kDegToRad;
  const double y = std::sin(dlambda) * std::cos(p2);
  const double x = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dlambda);
  return wrap_degrees(std::atan2(y, x) / kDegToRad);
}

StationSelection select_stations(const CameraPose& camera,
                                 std::span<const WeatherStation> registry, size_t k) {
  if (registry.empty()) fail(ErrorCode::kInvalidArgument, "select_stations: empty registry");
  if (k == 0) fail(ErrorCode::kInvalidArgument, "select_stations: k must be >= 1");

  struct Candidate {
    double distance;
    const WeatherStation* station;
    bool in_sector;
  };
  const double half_width = camera.field_of_view ? *camera.field_of_view / 2.0 : 90.0;
  std::vector<Candidate> candidates;
  candidates.reserve(registry.size());
  for (const auto& s : registry) {
    const double d =
        haversine_distance_m(camera.latitude, camera.longitude, s.latitude, s.longitude);
    const double bearing =
        initial_bearing_deg(camera.latitude, camera.longitude, s.latitude, s.longitude);
    const bool in_sector =
        d > 0.0 ? std::abs(angular_difference(bearing, camera.view_azimuth)) <= half_width
                : true;
    candidates.push_back({d, &s, in_sector});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.station->station_id < b.station->station_id;
  });

  StationSelection result;
  for (const auto& c : candidates) {
    if (result.station_ids.size() == k) break;
    if (c.in_sector) result.station_ids.push_back(c.station->station_id);
  }
  if (result.station_ids.size() < k) {
    result.fallback = true;
    for (const auto& c : candidates) {
      if (result.station_ids.size() == k) break;
      if (!c.in_sector) result.station_ids.push_back(c.station->station_id);
    }
  }
  return result;
}

AttributeValues aggregate_stations(std::span<const AttributeValues> readings) {
  if (readings.empty()) fail(ErrorCode::kInvalidArgument, "aggregate_stations: no stations");
  const auto& first = readings.front();
  for (const auto& r : readings) {
    if (r.size() != first.size() ||
        !std::equal(r.begin(), r.end(), first.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      fail(ErrorCode::kDataError, "aggregate_stations: inconsistent attribute sets");
    }
  }
  const double n = static_cast<double>(readings.size());
  AttributeValues out;
  for (const auto& [name, unused] : first) {
    if (name == "wind_direction") {
      double sx = 0.0;
      double sy = 0.0;
      for (const auto& r : readings) {
        const double theta = r.at(name) * kDegToRad;
        sx += std::sin(theta);
        sy += std::cos(theta);
      }
      double deg = std::atan2(sx, sy) / kDegToRad;
      // Values within rounding of a full turn collapse to 0.
      deg = wrap_degrees(deg);
      if (deg >= 360.0 - 1e-12) deg = 0.0;
      out[name] = deg;
    } else {
      double sum = 0.0;
      for (const auto& r : readings) sum += r.at(name);
      out[name] = sum / n;
    }
  }
  return out;
}

NormalizationStats compute_normalization_stats(std::span<const WeatherVector> raw_vectors) {
  if (raw_vectors.empty()) {
    fail(ErrorCode::kInvalidArgument, "normalization stats need at least one vector");
  }
  NormalizationStats stats;
  const double n = static_cast<double>(raw_vectors.size());
  for (size_t c = 0; c < kWeatherDim; ++c) {
    double mean = 0.0;
    for (const auto& v : raw_vectors) mean += v.values[c];
    mean /= n;
    double ss = 0.0;
    for (const auto& v : raw_vectors) ss += (v.values[c] - mean) * (v.values[c] - mean);
    stats[std::string(kWeatherComponents[c])] = {mean, std::sqrt(ss / n)};
  }
  return stats;
}

namespace {

const ComponentStats& lookup_stats(const NormalizationStats& stats, size_t c) {
  const auto it = stats.find(std::string(kWeatherComponents[c]));
  if (it == stats.end()) {
    fail(ErrorCode::kDataError,
         fmt::format("normalization stats missing component '{}'", kWeatherComponents[c]));
  }
  return it->second;
}

}  // namespace

WeatherVector normalize_weather(const WeatherVector& vector, const NormalizationStats& stats) {
  if (vector.normalized) fail(ErrorCode::kInvalidArgument, "weather vector already normalized");
  WeatherVector out = vector;
  for (size_t c = 0; c < kWeatherDim; ++c) {
    const auto& s = lookup_stats(stats, c);
    out.values[c] = s.sd > 0.0 ? (vector.values[c] - s.mean) / s.sd : 0.0;
  }
  out.normalized = true;
  return out;
}

WeatherVector denormalize_weather(const WeatherVector& vector, const NormalizationStats& stats) {
  if (!vector.normalized) fail(ErrorCode::kInvalidArgument, "weather vector is not normalized");
  WeatherVector out = vector;
  for (size_t c = 0; c < kWeatherDim; ++c) {
    const auto& s = lookup_stats(stats, c);
    out.values[c] = s.sd > 0.0 ? vector.values[c] * s.sd + s.mean : s.mean;
  }
  out.normalized = false;
  return out;
}

WeatherVector build_raw_weather_vector(const CameraPose& camera, const WeatherContext& context,
                                       UtcInstant t) {
  std::vector<WeatherStation> reporting;
  for (const auto& st : context.registry) {
    const auto it = context.series.find(st.station_id);
    if (it != context.series.end() && !it->second.records.empty() &&
        it->second.records.front().timestamp <= t && t <= it->second.records.back().timestamp) {
      reporting.push_back(st);
    }
  }
  if (reporting.empty()) {
    fail(ErrorCode::kNotFound, fmt::format("camera {}: no station reports at {}", camera.camera_id,
                                           format_iso8601(t)));
  }
  const auto selection = select_stations(camera, reporting, context.stations_per_camera);
  const std::vector<std::string> attributes(kSelectedAttributes.begin(),
                                            kSelectedAttributes.end());
  std::vector<AttributeValues> readings;
  readings.reserve(selection.station_ids.size());
  for (const auto& id : selection.station_ids) {
    const auto it = context.series.find(id);
    if (it == context.series.end()) {
      fail(ErrorCode::kNotFound,
           fmt::format("camera {}: no series for station {}", camera.camera_id, id));
    }
    std::vector<double> values;
    try {
      values = interpolate_series(it->second, attributes, t);
    } catch (const Error& e) {
      rethrow_with_context(e, fmt::format("camera {} at {}", camera.camera_id,
                                          format_iso8601(t)));
    }
    AttributeValues reading;
    for (size_t i = 0; i < attributes.size(); ++i) reading[attributes[i]] = values[i];
    readings.push_back(std::move(reading));
  }
  const auto agg = aggregate_stations(readings);

  WeatherVector out;
  out.timestamp = t;
  for (size_t i = 0; i < kSelectedAttributes.size(); ++i) {
    out.values[i] = agg.at(std::string(kSelectedAttributes[i]));
  }
  const auto uv = wind_to_uv(std::max(0.0, out.values[2]), out.values[4], context.wind_convention);
  out.values[6] = uv.u;
  out.values[7] = uv.v;
  for (double v : out.values) {
    if (!std::isfinite(v)) {
      fail(ErrorCode::kNumeric,
           fmt::format("camera {}: non-finite weather at {}", camera.camera_id,
                       format_iso8601(t)));
    }
  }
  return out;
}

WeatherVector build_weather_vector(const CameraPose& camera, const WeatherContext& context,
                                   UtcInstant t, const NormalizationStats& stats) {
  return normalize_weather(build_raw_weather_vector(camera, context, t), stats);
}

WeatherVector random_weather_vector(uint64_t seed, UtcInstant t) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  WeatherVector out;
  out.timestamp = t;
  for (auto& v : out.values) v = normal(rng);
  out.normalized = true;
  return out;
}

}  // namespace smokeynet::weather
