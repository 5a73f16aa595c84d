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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "smokeynet/error.hpp"
#include "smokeynet/mesonet_client.hpp"
#include "smokeynet/weather.hpp"
#include "smokeynet/weather_io.hpp"
#include "test_support.hpp"

using namespace smokeynet;
using namespace smokeynet::weather;

namespace {

const UtcInstant kT0 = parse_iso8601("2019-07-01T12:00:00Z");

WeatherSeries full_series(const std::string& id, int n, double value = 1.0) {
  WeatherSeries s;
  s.station_id = id;
  for (int i = 0; i < n; ++i) {
    RawWeatherRecord r;
    r.station_id = id;
    r.timestamp = add_minutes(kT0, 10 * i);
    for (auto& a : r.attributes) a = value;
    s.records.push_back(r);
  }
  return s;
}

// Station at `km` kilometres from (33, -117) along `bearing`.
WeatherStation station_at(const std::string& id, double bearing, double km) {
  const double lat = 33.0 * std::numbers::pi / 180.0;
  const double d = km * 1000.0 / 6371008.8;
  const double th = bearing * std::numbers::pi / 180.0;
  const double lat2 = std::asin(std::sin(lat) * std::cos(d) + std::cos(lat) * std::sin(d) * std::cos(th));
  const double lon2 = -117.0 * std::numbers::pi / 180.0 +
                      std::atan2(std::sin(th) * std::sin(d) * std::cos(lat),
                                 std::cos(d) - std::sin(lat) * std::sin(lat2));
  WeatherStation s;
  s.station_id = id;
  s.latitude = lat2 * 180.0 / std::numbers::pi;
  s.longitude = lon2 * 180.0 / std::numbers::pi;
  return s;
}

CameraPose east_camera() {
  CameraPose c;
  c.camera_id = "cam";
  c.latitude = 33.0;
  c.longitude = -117.0;
  c.view_azimuth = 90.0;
  c.field_of_view = 180.0;
  return c;
}

}  // namespace

TEST_CASE("filter_attributes keeps everything when nothing is missing") {
  const auto s = full_series("A", 20);
  const auto names = filter_attributes(s, {kT0, add_minutes(kT0, 200)}, 0.05);
  CHECK(names.size() == 23);
}

TEST_CASE("filter_attributes retains the six complete attributes") {
  auto s = full_series("A", 100);
  for (size_t i = 0; i < s.records.size(); ++i) {
    for (size_t a = 6; a < kRawAttributes.size(); ++a) {
      if (i % 4 == 0) s.records[i].attributes[a].reset();
    }
  }
  const auto names = filter_attributes(s, {kT0, add_minutes(kT0, 2000)}, 0.05);
  const std::vector<std::string> expected(kSelectedAttributes.begin(), kSelectedAttributes.end());
  CHECK(names == expected);
}

TEST_CASE("filter_attributes threshold is strict") {
  auto s = full_series("A", 100);
  for (int i = 0; i < 5; ++i) s.records[static_cast<size_t>(i * 20)].attributes[0].reset();
  auto names = filter_attributes(s, {kT0, add_minutes(kT0, 2000)}, 0.05);
  CHECK(std::find(names.begin(), names.end(), "air_temperature") == names.end());
  s.records[0].attributes[0] = 1.0;
  names = filter_attributes(s, {kT0, add_minutes(kT0, 2000)}, 0.05);
  CHECK(std::find(names.begin(), names.end(), "air_temperature") != names.end());
}

TEST_CASE("filter_attributes matches a brute-force count") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = full_series("A", 60);
    std::array<double, 23> rate{};
    for (auto& r : rate) r = u(rng) * 0.2;
    for (auto& rec : s.records) {
      for (size_t a = 0; a < rate.size(); ++a) {
        if (u(rng) < rate[a]) rec.attributes[a].reset();
      }
    }
    const TimeRange window{add_minutes(kT0, 50), add_minutes(kT0, 400)};
    std::vector<std::string> expected;
    for (size_t a = 0; a < kRawAttributes.size(); ++a) {
      int total = 0, missing = 0;
      for (const auto& rec : s.records) {
        if (!window.contains(rec.timestamp)) continue;
        ++total;
        missing += rec.attributes[a] ? 0 : 1;
      }
      if (static_cast<double>(missing) / total < 0.05) expected.emplace_back(kRawAttributes[a]);
    }
    CHECK(filter_attributes(s, window, 0.05) == expected);
  }
}

TEST_CASE("wind_to_uv examples") {
  auto uv = wind_to_uv(0.0, 137.0);
  CHECK(uv.u == doctest::Approx(0.0));
  CHECK(uv.v == doctest::Approx(0.0));
  uv = wind_to_uv(10.0, 270.0);
  CHECK(uv.u == doctest::Approx(10.0));
  CHECK(std::abs(uv.v) < 1e-9);
  uv = wind_to_uv(10.0, 0.0);
  CHECK(std::abs(uv.u) < 1e-9);
  CHECK(uv.v == doctest::Approx(-10.0));
}

TEST_CASE("wind_to_uv preserves magnitude") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> speed(0.0, 40.0), dir(0.0, 360.0);
  for (int i = 0; i < 1000; ++i) {
    const double s = speed(rng);
    const auto uv = wind_to_uv(s, dir(rng));
    CHECK(std::abs(std::hypot(uv.u, uv.v) - s) < 1e-9);
  }
}

TEST_CASE("interpolate_series examples") {
  WeatherSeries s;
  s.station_id = "A";
  for (int m : {0, 10}) {
    RawWeatherRecord r;
    r.station_id = "A";
    r.timestamp = add_minutes(kT0, m);
    r.attributes[0] = m == 0 ? 10.0 : 20.0;
    s.records.push_back(r);
  }
  const std::vector<std::string> attr{"air_temperature"};
  CHECK(interpolate_series(s, attr, kT0)[0] == 10.0);
  CHECK(interpolate_series(s, attr, add_minutes(kT0, 10))[0] == 20.0);
  CHECK(interpolate_series(s, attr, add_minutes(kT0, 5))[0] == doctest::Approx(15.0));
  CHECK(interpolate_series(s, attr, add_minutes(kT0, 3))[0] == doctest::Approx(13.0));
  CHECK_THROWS_AS(interpolate_series(s, attr, add_minutes(kT0, 11)), Error);
  CHECK_THROWS_AS(interpolate_series(s, attr, add_minutes(kT0, -1)), Error);
  s.records[1].attributes[0].reset();
  CHECK_THROWS_AS(interpolate_series(s, attr, add_minutes(kT0, 5)), Error);
}

TEST_CASE("interpolate_series matches the two-point formula") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> val(-50.0, 50.0);
  std::uniform_int_distribution<int> gap(1, 30), pos(0, 1800);
  const std::vector<std::string> attr{"wind_speed"};
  for (int trial = 0; trial < 200; ++trial) {
    const int g = gap(rng);
    const double a = val(rng), b = val(rng);
    WeatherSeries s;
    s.station_id = "A";
    RawWeatherRecord r0, r1;
    r0.timestamp = kT0;
    r1.timestamp = add_minutes(kT0, g);
    r0.attributes[2] = a;
    r1.attributes[2] = b;
    s.records = {r0, r1};
    const int sec = pos(rng) % (g * 60 + 1);
    const UtcInstant t = kT0 + std::chrono::seconds(sec);
    const double w = static_cast<double>(sec) / (g * 60.0);
    const double expected = a + w * (b - a);
    CHECK(std::abs(interpolate_series(s, attr, t)[0] - expected) < 1e-12 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("select_stations prefers the viewing sector") {
  const std::vector<WeatherStation> reg{station_at("E1", 90, 1), station_at("E5", 90, 5),
                                        station_at("E10", 90, 10), station_at("W1", 270, 1)};
  const auto sel = select_stations(east_camera(), reg, 3);
  CHECK(sel.station_ids == std::vector<std::string>{"E1", "E5", "E10"});
  CHECK_FALSE(sel.fallback);

  const std::vector<WeatherStation> single{station_at("E5", 80, 5), station_at("W1", 260, 1)};
  CHECK(select_stations(east_camera(), single, 1).station_ids == std::vector<std::string>{"E5"});
}

TEST_CASE("select_stations falls back to the nearest overall") {
  const std::vector<WeatherStation> reg{station_at("W1", 270, 1), station_at("W3", 250, 3),
                                        station_at("W2", 290, 2), station_at("W9", 270, 9)};
  const auto sel = select_stations(east_camera(), reg, 3);
  CHECK(sel.fallback);
  std::vector<std::pair<double, std::string>> brute;
  for (const auto& s : reg) {
    brute.emplace_back(haversine_distance_m(33.0, -117.0, s.latitude, s.longitude), s.station_id);
  }
  std::sort(brute.begin(), brute.end());
  CHECK(sel.station_ids == std::vector<std::string>{brute[0].second, brute[1].second, brute[2].second});
}

TEST_CASE("select_stations is invariant to registry order") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> bearing(0.0, 360.0), dist(0.5, 20.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<WeatherStation> reg;
    for (int i = 0; i < 8; ++i) reg.push_back(station_at("S" + std::to_string(i), bearing(rng), dist(rng)));
    reg.push_back(reg[2]);
    reg.back().station_id = "T2";  // exact distance tie with S2
    const auto a = select_stations(east_camera(), reg, 3);
    std::shuffle(reg.begin(), reg.end(), rng);
    const auto b = select_stations(east_camera(), reg, 3);
    CHECK(a.station_ids == b.station_ids);
    CHECK(a.fallback == b.fallback);
  }
}

TEST_CASE("haversine and bearing on known points") {
  CHECK(haversine_distance_m(0, 0, 0, 1) == doctest::Approx(111195.08).epsilon(1e-6));
  CHECK(initial_bearing_deg(0, 0, 0, 1) == doctest::Approx(90.0));
  CHECK(initial_bearing_deg(0, 0, 1, 0) == doctest::Approx(0.0));
  CHECK(initial_bearing_deg(0, 0, 0, -1) == doctest::Approx(270.0));
}

TEST_CASE("aggregate_stations means and circular direction") {
  AttributeValues one{{"air_temperature", 12.5}, {"wind_direction", 33.0}};
  const std::vector<AttributeValues> single{one};
  CHECK(aggregate_stations(single) == one);

  std::vector<AttributeValues> temps{{{"air_temperature", 10.0}}, {{"air_temperature", 20.0}},
                                     {{"air_temperature", 30.0}}};
  CHECK(aggregate_stations(temps).at("air_temperature") == doctest::Approx(20.0));

  std::vector<AttributeValues> dirs{{{"wind_direction", 350.0}}, {{"wind_direction", 10.0}}};
  const double d = aggregate_stations(dirs).at("wind_direction");
  CHECK(std::min(d, 360.0 - d) < 1e-9);
  std::reverse(temps.begin(), temps.end());
  CHECK(aggregate_stations(temps).at("air_temperature") == doctest::Approx(20.0));
}

TEST_CASE("normalization examples and inverse") {
  NormalizationStats stats;
  for (size_t i = 0; i < kWeatherDim; ++i) {
    stats[std::string(kWeatherComponents[i])] = {static_cast<double>(i) - 3.0, 0.5 + i};
  }
  WeatherVector v;
  for (size_t i = 0; i < kWeatherDim; ++i) v.values[i] = stats[std::string(kWeatherComponents[i])].mean;
  v.values[1] += 2.0 * stats["relative_humidity"].sd;
  const auto n = normalize_weather(v, stats);
  CHECK(n.normalized);
  CHECK(n.values[0] == 0.0);
  CHECK(n.values[1] == doctest::Approx(2.0));

  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    WeatherVector x;
    for (auto& c : x.values) c = normal(rng);
    const auto z = normalize_weather(x, stats);
    for (size_t i = 0; i < kWeatherDim; ++i) {
      const auto& s = stats[std::string(kWeatherComponents[i])];
      CHECK(std::abs(z.values[i] - (x.values[i] - s.mean) / s.sd) < 1e-12);
    }
    const auto back = denormalize_weather(z, stats);
    for (size_t i = 0; i < kWeatherDim; ++i) CHECK(std::abs(back.values[i] - x.values[i]) < 1e-9);
  }
  stats.erase("u");
  CHECK_THROWS_AS(normalize_weather(v, stats), Error);
}

TEST_CASE("normalization statistics use population moments") {
  std::vector<WeatherVector> xs(4);
  for (size_t k = 0; k < xs.size(); ++k) {
    for (auto& c : xs[k].values) c = static_cast<double>(k);
  }
  xs[0].values[7] = xs[1].values[7] = xs[2].values[7] = xs[3].values[7] = 5.0;
  const auto stats = compute_normalization_stats(xs);
  CHECK(stats.at("air_temperature").mean == doctest::Approx(1.5));
  CHECK(stats.at("air_temperature").sd == doctest::Approx(std::sqrt(1.25)));
  WeatherVector probe;
  probe.values[7] = 9.0;
  CHECK(normalize_weather(probe, stats).values[7] == 0.0);
}

TEST_CASE("build_weather_vector on a constant fixture") {
  WeatherContext ctx;
  ctx.registry = {station_at("E1", 90, 1), station_at("E5", 80, 5), station_at("E9", 100, 9)};
  for (const auto& st : ctx.registry) ctx.series[st.station_id] = full_series(st.station_id, 10, 4.0);
  const auto raw = build_raw_weather_vector(east_camera(), ctx, add_minutes(kT0, 33));
  CHECK(raw.values.size() == 8);
  for (size_t i = 0; i < 6; ++i) CHECK(raw.values[i] == doctest::Approx(4.0));
  const auto uv = wind_to_uv(4.0, 4.0);
  CHECK(raw.values[6] == doctest::Approx(uv.u));
  CHECK(raw.values[7] == doctest::Approx(uv.v));
}

TEST_CASE("build_weather_vector equals the composed pipeline") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> val(0.0, 30.0), dir(0.0, 360.0);
  WeatherContext ctx;
  ctx.registry = {station_at("A", 60, 2), station_at("B", 120, 4), station_at("C", 95, 7),
                  station_at("D", 270, 1)};
  for (const auto& st : ctx.registry) {
    auto s = full_series(st.station_id, 6);
    for (auto& r : s.records) {
      for (auto& a : r.attributes) a = val(rng);
      r.attributes[4] = dir(rng);
    }
    ctx.series[st.station_id] = s;
  }
  const UtcInstant t = add_minutes(kT0, 17);
  const auto got = build_raw_weather_vector(east_camera(), ctx, t);

  const std::vector<std::string> attrs(kSelectedAttributes.begin(), kSelectedAttributes.end());
  std::vector<AttributeValues> readings;
  for (const char* id : {"A", "B", "C"}) {
    const auto v = interpolate_series(ctx.series.at(id), attrs, t);
    AttributeValues r;
    for (size_t i = 0; i < attrs.size(); ++i) r[attrs[i]] = v[i];
    readings.push_back(r);
  }
  double sx = 0, sy = 0;
  for (const auto& r : readings) {
    sx += std::sin(r.at("wind_direction") * std::numbers::pi / 180.0);
    sy += std::cos(r.at("wind_direction") * std::numbers::pi / 180.0);
  }
  double mean_dir = std::atan2(sx, sy) * 180.0 / std::numbers::pi;
  if (mean_dir < 0) mean_dir += 360.0;
  for (size_t i = 0; i < 6; ++i) {
    if (attrs[i] == "wind_direction") {
      CHECK(got.values[i] == doctest::Approx(mean_dir).epsilon(1e-9));
      continue;
    }
    double m = 0;
    for (const auto& r : readings) m += r.at(attrs[i]);
    CHECK(got.values[i] == doctest::Approx(m / 3.0).epsilon(1e-12));
  }
  const auto uv = wind_to_uv(got.values[2], got.values[4]);
  CHECK(got.values[6] == doctest::Approx(uv.u));
  CHECK(got.values[7] == doctest::Approx(uv.v));
  for (double v : got.values) CHECK(std::isfinite(v));
}

TEST_CASE("random_weather_vector statistics") {
  CHECK(random_weather_vector(42, kT0).values == random_weather_vector(42, kT0).values);
  CHECK(random_weather_vector(42, kT0).values.size() == 8);
  std::array<double, 8> sum{}, sq{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto v = random_weather_vector(static_cast<uint64_t>(i) * 7919 + 1, kT0);
    for (size_t c = 0; c < 8; ++c) {
      sum[c] += v.values[c];
      sq[c] += v.values[c] * v.values[c];
    }
  }
  for (size_t c = 0; c < 8; ++c) {
    const double mean = sum[c] / n;
    const double sd = std::sqrt(sq[c] / n - mean * mean);
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(sd - 1.0) < 0.05);
  }
}

TEST_CASE("fixture io and replay client") {
  testing::TempDir dir("weather_io");
  std::vector<WeatherStation> reg{station_at("A", 90, 2), station_at("B", 80, 3)};
  reg[0].network = "HPWREN";
  reg[0].elevation = 512.5;
  write_station_registry(dir / "stations.csv", reg);
  auto s = full_series("A", 12, 2.5);
  s.records[3].attributes[9].reset();
  write_weather_series(dir / "A.csv", s);
  write_weather_series(dir / "B.csv", full_series("B", 12, 1.0));

  const auto back = read_station_registry(dir / "stations.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].station_id == "A");
  CHECK(back[0].latitude == reg[0].latitude);
  CHECK(back[0].elevation == 512.5);

  ReplayMesonetClient client(dir.path());
  CHECK(client.stations().size() == 2);
  const auto ts = client.timeseries("A", {add_minutes(kT0, 20), add_minutes(kT0, 50)});
  REQUIRE(ts.records.size() == 4);
  CHECK_FALSE(ts.records[1].attributes[9].has_value());
  CHECK(ts.records[0].attributes[0] == 2.5);
  CHECK_THROWS_AS(client.timeseries("Z", {kT0, kT0}), Error);

  const auto ctx = load_weather_directory(dir.path());
  CHECK(ctx.series.size() == 2);

  NormalizationStats stats{{"air_temperature", {1.25, 0.1}}, {"u", {-3.0, 2.0}}};
  write_normalization_stats(dir / "stats.csv", stats);
  const auto stats_back = read_normalization_stats(dir / "stats.csv");
  CHECK(stats_back.at("air_temperature").mean == 1.25);
  CHECK(stats_back.at("u").sd == 2.0);
}

TEST_CASE("synoptic payload parsing") {
  const std::string payload = R"({
    "STATION": [{
      "STID": "HPWR1",
      "OBSERVATIONS": {
        "date_time": ["2019-07-01T12:00:00Z", "2019-07-01T12:10:00Z"],
        "air_temp_set_1": [21.5, null],
        "wind_speed_set_1": [3.0, 4.0],
        "dew_point_temperature_set_1d": [10.0, 11.0]
      }
    }]
  })";
  const auto s = parse_synoptic_timeseries(payload, "HPWR1");
  REQUIRE(s.records.size() == 2);
  CHECK(s.records[0].value("air_temperature") == 21.5);
  CHECK_FALSE(s.records[1].value("air_temperature").has_value());
  CHECK(s.records[1].value("wind_speed") == 4.0);
  CHECK(synoptic_variable("air_temperature") == "air_temp");
  CHECK_THROWS_AS(parse_synoptic_timeseries("{\"STATION\": []}", "X"), Error);

  const std::string meta = R"({"STATION": [{"STID": "HPWR1", "LATITUDE": "33.1",
      "LONGITUDE": "-116.9", "ELEVATION": "1000", "MNET_SHORTNAME": "HPWREN"}]})";
  const auto stations = parse_synoptic_metadata(meta);
  REQUIRE(stations.size() == 1);
  CHECK(stations[0].latitude == doctest::Approx(33.1));
  CHECK(*stations[0].elevation == doctest::Approx(304.8));
}
