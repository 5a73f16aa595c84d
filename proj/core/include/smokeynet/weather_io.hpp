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
#include <vector>

#include "smokeynet/weather.hpp"

namespace smokeynet::weather {

// Registry file columns: station_id,latitude,longitude,network[,elevation]
std::vector<WeatherStation> read_station_registry(const std::filesystem::path& path);
void write_station_registry(const std::filesystem::path& path,
                            const std::vector<WeatherStation>& stations);

// Station file columns: timestamp followed by the 23 raw attributes, empty
// cell = missing.
WeatherSeries read_weather_series(const std::filesystem::path& path,
                                  const std::string& station_id);
void write_weather_series(const std::filesystem::path& path, const WeatherSeries& series);

// Loads `<dir>/stations.csv` and `<dir>/<station_id>.csv` for every station.
WeatherContext load_weather_directory(const std::filesystem::path& dir);

void write_normalization_stats(const std::filesystem::path& path, const NormalizationStats& stats);
NormalizationStats read_normalization_stats(const std::filesystem::path& path);

}  // namespace smokeynet::weather
