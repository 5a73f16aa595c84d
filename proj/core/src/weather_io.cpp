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

#include "smokeynet/weather_io.hpp"

#include <fmt/format.h>

#include "smokeynet/csv.hpp"
#include "smokeynet/error.hpp"

namespace smokeynet::weather {

std::vector<WeatherStation> read_station_registry(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const size_t c_id = table.column("station_id");
  const size_t c_lat = table.column("latitude");
  const size_t c_lon = table.column("longitude");
  const size_t c_net = table.column("network");
  const bool has_elev = table.has_column("elevation");
  std::vector<WeatherStation> out;
  for (const auto& row : table.rows) {
    WeatherStation s;
    s.station_id = row[c_id];
    s.latitude = csv::parse_double(row[c_lat], "latitude");
    s.longitude = csv::parse_double(row[c_lon], "longitude");
    s.network = row[c_net];
    if (has_elev && !row[table.column("elevation")].empty()) {
      s.elevation = csv::parse_double(row[table.column("elevation")], "elevation");
    }
    s.validate();
    for (const auto& existing : out) {
      if (existing.station_id == s.station_id) {
        fail(ErrorCode::kDataError,
             fmt::format("{}: duplicate station_id {}", path.string(), s.station_id));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_station_registry(const std::filesystem::path& path,
                            const std::vector<WeatherStation>& stations) {
  csv::Table table;
  table.header = {"station_id", "latitude", "longitude", "network", "elevation"};
  for (const auto& s : stations) {
    table.rows.push_back({s.station_id, csv::format_double(s.latitude),
                          csv::format_double(s.longitude), s.network,
                          s.elevation ? csv::format_double(*s.elevation) : ""});
  }
  csv::write(path, table);
}

WeatherSeries read_weather_series(const std::filesystem::path& path,
                                  const std::string& station_id) {
  const auto table = csv::read(path);
  const size_t c_time = table.column("timestamp");
  std::vector<std::pair<size_t, size_t>> columns;  // table column -> schema index
  for (size_t c = 0; c < table.header.size(); ++c) {
    if (c == c_time) continue;
    const auto idx = raw_attribute_index(table.header[c]);
    if (!idx) {
      fail(ErrorCode::kDataError,
           fmt::format("{}: attribute '{}' not in schema", path.string(), table.header[c]));
    }
    columns.emplace_back(c, *idx);
  }
  WeatherSeries series;
  series.station_id = station_id;
  series.records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    RawWeatherRecord rec;
    rec.station_id = station_id;
    rec.timestamp = parse_iso8601(row[c_time]);
    for (const auto& [c, idx] : columns) {
      if (!row[c].empty()) rec.attributes[idx] = csv::parse_double(row[c], table.header[c]);
    }
    series.records.push_back(std::move(rec));
  }
  try {
    series.validate();
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
  return series;
}

void write_weather_series(const std::filesystem::path& path, const WeatherSeries& series) {
  csv::Table table;
  table.header.push_back("timestamp");
  for (auto name : kRawAttributes) table.header.emplace_back(name);
  for (const auto& rec : series.records) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    row.push_back(format_iso8601(rec.timestamp));
    for (const auto& v : rec.attributes) row.push_back(v ? csv::format_double(*v) : "");
    table.rows.push_back(std::move(row));
  }
  csv::write(path, table);
}

WeatherContext load_weather_directory(const std::filesystem::path& dir) {
  WeatherContext ctx;
  ctx.registry = read_station_registry(dir / "stations.csv");
  for (const auto& s : ctx.registry) {
    const auto file = dir / (s.station_id + ".csv");
    if (!std::filesystem::exists(file)) {
      fail(ErrorCode::kNotFound, fmt::format("missing weather series {}", file.string()));
    }
    ctx.series.emplace(s.station_id, read_weather_series(file, s.station_id));
  }
  return ctx;
}

void write_normalization_stats(const std::filesystem::path& path, const NormalizationStats& stats) {
  csv::Table table;
  table.header = {"component", "mean", "sd"};
  for (auto name : kWeatherComponents) {
    const auto it = stats.find(std::string(name));
    if (it == stats.end()) continue;
    table.rows.push_back({std::string(name), csv::format_double(it->second.mean),
                          csv::format_double(it->second.sd)});
  }
  csv::write(path, table);
}

NormalizationStats read_normalization_stats(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  NormalizationStats stats;
  for (const auto& row : table.rows) {
    stats[row[table.column("component")]] = {
        csv::parse_double(row[table.column("mean")], "mean"),
        csv::parse_double(row[table.column("sd")], "sd")};
  }
  return stats;
}

}  // namespace smokeynet::weather
