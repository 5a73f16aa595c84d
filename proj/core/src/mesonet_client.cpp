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

#include "smokeynet/mesonet_client.hpp"

#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "smokeynet/error.hpp"
#include "smokeynet/weather_io.hpp"

namespace smokeynet::weather {
namespace {

using nlohmann::json;

std::string compact_time(UtcInstant t) {
  // YYYYmmddHHMM, as expected by the start/end query parameters.
  const std::string iso = format_iso8601(t);
  return iso.substr(0, 4) + iso.substr(5, 2) + iso.substr(8, 2) + iso.substr(11, 2) +
         iso.substr(14, 2);
}

double json_number(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return std::stod(v.get<std::string>());
  fail(ErrorCode::kDataError, "expected a numeric field in Synoptic payload");
}

}  // namespace

std::string_view synoptic_variable(std::string_view attribute) {
  static const std::pair<std::string_view, std::string_view> kMap[] = {
      {"air_temperature", "air_temp"},
      {"relative_humidity", "relative_humidity"},
      {"wind_speed", "wind_speed"},
      {"wind_gust", "wind_gust"},
      {"wind_direction", "wind_direction"},
      {"dew_point", "dew_point_temperature"},
      {"pressure", "pressure"},
      {"sea_level_pressure", "sea_level_pressure"},
      {"altimeter", "altimeter"},
      {"solar_radiation", "solar_radiation"},
      {"precip_accum", "precip_accum"},
      {"precip_accum_one_hour", "precip_accum_one_hour"},
      {"peak_wind_speed", "peak_wind_speed"},
      {"peak_wind_direction", "peak_wind_direction"},
      {"fuel_temp", "fuel_temp"},
      {"fuel_moisture", "fuel_moisture"},
      {"soil_temp", "soil_temp"},
      {"snow_depth", "snow_depth"},
      {"visibility", "visibility"},
      {"heat_index", "heat_index"},
      {"wind_chill", "wind_chill"},
      {"wet_bulb_temp", "wet_bulb_temp"},
      {"volt", "volt"},
  };
  for (const auto& [ours, theirs] : kMap) {
    if (ours == attribute) return theirs;
  }
  fail(ErrorCode::kInvalidArgument, fmt::format("unknown attribute '{}'", attribute));
}

ReplayMesonetClient::ReplayMesonetClient(std::filesystem::path fixture_dir)
    : dir_(std::move(fixture_dir)), registry_(read_station_registry(dir_ / "stations.csv")) {}

std::vector<WeatherStation> ReplayMesonetClient::stations() { return registry_; }

WeatherSeries ReplayMesonetClient::timeseries(const std::string& station_id, TimeRange range) {
  const auto file = dir_ / (station_id + ".csv");
  if (!std::filesystem::exists(file)) {
    fail(ErrorCode::kNotFound, fmt::format("no fixture for station {}", station_id));
  }
  auto series = read_weather_series(file, station_id);
  std::erase_if(series.records,
                [&](const RawWeatherRecord& r) { return !range.contains(r.timestamp); });
  return series;
}

LiveMesonetClient::LiveMesonetClient(LiveClientOptions options) : options_(std::move(options)) {
  const char* token = std::getenv(options_.token_env.c_str());
  if (token == nullptr || *token == '\0') {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("live mode requires the {} environment variable", options_.token_env));
  }
  token_ = token;
}

std::string LiveMesonetClient::get(const std::string& path_and_query) {
  httplib::SSLClient client(options_.host);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  const auto res = client.Get(path_and_query);
  if (!res) {
    fail(ErrorCode::kIo, fmt::format("request to {} failed: {}", options_.host,
                                     httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    fail(ErrorCode::kIo, fmt::format("{} returned HTTP {}", options_.host, res->status));
  }
  return res->body;
}

std::vector<WeatherStation> LiveMesonetClient::stations() {
  std::string ids;
  for (const auto& id : options_.station_ids) ids += (ids.empty() ? "" : ",") + id;
  return parse_synoptic_metadata(
      get(fmt::format("/v2/stations/metadata?stid={}&token={}", ids, token_)));
}

WeatherSeries LiveMesonetClient::timeseries(const std::string& station_id, TimeRange range) {
  std::string vars;
  for (auto a : kRawAttributes) {
    vars += (vars.empty() ? "" : ",") + std::string(synoptic_variable(a));
  }
  return parse_synoptic_timeseries(
      get(fmt::format("/v2/stations/timeseries?stid={}&start={}&end={}&vars={}&obtimezone=UTC"
                      "&token={}",
                      station_id, compact_time(range.begin), compact_time(range.end), vars,
                      token_)),
      station_id);
}

WeatherSeries parse_synoptic_timeseries(std::string_view json_text,
                                        const std::string& station_id) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kDataError, fmt::format("malformed Synoptic payload: {}", e.what()));
  }
  if (!doc.contains("STATION") || doc["STATION"].empty()) {
    fail(ErrorCode::kNotFound, fmt::format("no STATION entry for {}", station_id));
  }
  const json* station = nullptr;
  for (const auto& s : doc["STATION"]) {
    if (s.value("STID", std::string()) == station_id) station = &s;
  }
  if (station == nullptr) station = &doc["STATION"][0];
  const auto& obs = station->at("OBSERVATIONS");
  const auto& times = obs.at("date_time");

  WeatherSeries series;
  series.station_id = station_id;
  series.records.resize(times.size());
  for (size_t i = 0; i < times.size(); ++i) {
    series.records[i].station_id = station_id;
    series.records[i].timestamp = parse_iso8601(times[i].get<std::string>());
  }
  for (size_t a = 0; a < kRawAttributes.size(); ++a) {
    const std::string key = std::string(synoptic_variable(kRawAttributes[a])) + "_set_1";
    if (!obs.contains(key)) continue;
    const auto& values = obs[key];
    if (values.size() != times.size()) {
      fail(ErrorCode::kDataError, fmt::format("{}: {} has {} values for {} timestamps",
                                              station_id, key, values.size(), times.size()));
    }
    for (size_t i = 0; i < values.size(); ++i) {
      if (!values[i].is_null()) series.records[i].attributes[a] = json_number(values[i]);
    }
  }
  series.validate();
  return series;
}

std::vector<WeatherStation> parse_synoptic_metadata(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kDataError, fmt::format("malformed Synoptic payload: {}", e.what()));
  }
  std::vector<WeatherStation> out;
  for (const auto& s : doc.value("STATION", json::array())) {
    WeatherStation st;
    st.station_id = s.at("STID").get<std::string>();
    st.latitude = json_number(s.at("LATITUDE"));
    st.longitude = json_number(s.at("LONGITUDE"));
    if (s.contains("ELEVATION") && !s["ELEVATION"].is_null()) {
      // Synoptic reports elevation in feet.
      st.elevation = json_number(s["ELEVATION"]) * 0.3048;
    }
    st.network = s.contains("MNET_SHORTNAME") ? s["MNET_SHORTNAME"].get<std::string>()
                                              : s.value("MNET_ID", std::string());
    st.validate();
    out.push_back(std::move(st));
  }
  return out;
}

}  // namespace smokeynet::weather
