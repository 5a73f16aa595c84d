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

#include <benchmark/benchmark.h>

#include <random>

#include "smokeynet/image.hpp"
#include "smokeynet/metrics.hpp"
#include "smokeynet/weather.hpp"

using namespace smokeynet;

namespace {

image::PreparedImage random_image(const image::TileGeometry& g) {
  image::PreparedImage img;
  img.pixels = cv::Mat(g.height, g.width, CV_32FC3);
  cv::RNG rng(1);
  rng.fill(img.pixels, cv::RNG::UNIFORM, 0.0, 255.0);
  return img;
}

void BM_TileFullScale(benchmark::State& state) {
  const auto g = image::kFullScaleGeometry;
  const auto img = random_image(g);
  for (auto _ : state) benchmark::DoNotOptimize(image::tile_image(img, g));
}
BENCHMARK(BM_TileFullScale)->Unit(benchmark::kMillisecond);

void BM_ResizeCrop(benchmark::State& state) {
  image::RawFrame raw{"cam", 0, cv::Mat(1536, 2048, CV_8UC3, cv::Scalar(90, 120, 150)), true};
  for (auto _ : state) benchmark::DoNotOptimize(image::resize_crop(raw, image::kFullScaleGeometry));
}
BENCHMARK(BM_ResizeCrop)->Unit(benchmark::kMillisecond);

void BM_InterpolateSeries(benchmark::State& state) {
  const auto t0 = parse_iso8601("2019-07-01T00:00:00Z");
  weather::WeatherSeries s;
  s.station_id = "S";
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  for (int i = 0; i < state.range(0); ++i) {
    weather::RawWeatherRecord r;
    r.station_id = "S";
    r.timestamp = add_minutes(t0, 10L * i);
    for (size_t a = 0; a < 6; ++a) r.attributes[a] = u(rng);
    s.records.push_back(r);
  }
  const std::vector<std::string> attrs(weather::kSelectedAttributes.begin(), weather::kSelectedAttributes.end());
  const auto t = add_minutes(t0, 5L * state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(weather::interpolate_series(s, attrs, t));
}
BENCHMARK(BM_InterpolateSeries)->Arg(16)->Arg(1024);

void BM_TimeToDetection(benchmark::State& state) {
  eval::PredictionLog log;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int f = 0; f < state.range(0); ++f) {
    for (int o = -40; o <= 39; ++o) log.rows.push_back({"f" + std::to_string(f), o, u(rng), o >= 0});
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::time_to_detection(log));
}
BENCHMARK(BM_TimeToDetection)->Arg(61);

}  // namespace

BENCHMARK_MAIN();
