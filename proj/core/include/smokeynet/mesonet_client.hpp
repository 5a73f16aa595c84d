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

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "smokeynet/weather.hpp"

namespace smokeynet::weather {

// Mesonet-style timeseries source.
class MesonetClient {
 public:
  virtual ~MesonetClient() = default;

  virtual std::vector<WeatherStation> stations() = 0;
  virtual WeatherSeries timeseries(const std::string& station_id, TimeRange range) = 0;
};

// Serves previously captured fixtures (see weather_io.hpp for the layout).
class ReplayMesonetClient final : public MesonetClient {
 public:
  explicit ReplayMesonetClient(std::filesystem::path fixture_dir);

  std::vector<WeatherStation> stations() override;
  WeatherSeries timeseries(const std::string& station_id, TimeRange range) override;

 private:
  std::filesystem::path dir_;
  std::vector<WeatherStation> registry_;
};

struct LiveClientOptions {
  std::string host = "api.synopticdata.com";
  std::string token_env = "SYNOPTIC_TOKEN";
  std::vector<std::string> station_ids;  // restricts stations()
};

// HTTPS client for the Synoptic timeseries endpoint. The token is read from
// the environment variable named in the options.
class LiveMesonetClient final : public MesonetClient {
 public:
  explicit LiveMesonetClient(LiveClientOptions options);

  std::vector<WeatherStation> stations() override;
  WeatherSeries timeseries(const std::string& station_id, TimeRange range) override;

 private:
  std::string get(const std::string& path_and_query);

  LiveClientOptions options_;
  std::string token_;
};

// Parses a Synoptic timeseries JSON payload for one station.
WeatherSeries parse_synoptic_timeseries(std::string_view json_text,
                                        const std::string& station_id);
std::vector<WeatherStation> parse_synoptic_metadata(std::string_view json_text);

// Synoptic variable name for a schema attribute, e.g. air_temperature -> air_temp.
std::string_view synoptic_variable(std::string_view attribute);

}  // namespace smokeynet::weather
