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

#include "smokeynet/model.hpp"
#include "smokeynet/training.hpp"

using namespace smokeynet;
using model::Matrix;

namespace {

model::ModelInput toy_input(const model::ModelConfig& c) {
  const Eigen::Index rows = static_cast<Eigen::Index>(c.tile_count()) * c.tile_size * c.tile_size;
  model::ModelInput in;
  in.previous_tiles = Matrix::Random(rows, 3);
  in.current_tiles = Matrix::Random(rows, 3);
  if (c.fusion_enabled) in.weather = std::array<double, 8>{0.1, -0.2, 0.3, 0.0, 1.0, -1.0, 0.5, 0.2};
  return in;
}

model::ModelConfig toy(bool fusion) {
  auto c = model::ModelConfig::toy();
  c.fusion_enabled = fusion;
  return c;
}

void BM_ToyForward(benchmark::State& state) {
  const auto c = toy(state.range(0) != 0);
  model::SmokeyNet net(c, 1);
  const auto in = toy_input(c);
  for (auto _ : state) benchmark::DoNotOptimize(net.predict(in));
}
BENCHMARK(BM_ToyForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ToyForwardBackward(benchmark::State& state) {
  const auto c = toy(true);
  model::SmokeyNet net(c, 1);
  const auto in = toy_input(c);
  const std::vector<uint8_t> labels{0, 1, 0, 0, 1, 1};
  const training::LossConfig loss;
  for (auto _ : state) {
    net.parameters().zero_grad();
    nn::Tape tape;
    tape.backward(training::compute_losses(tape, net.forward(tape, in), labels, true, loss));
  }
}
BENCHMARK(BM_ToyForwardBackward)->Unit(benchmark::kMillisecond);

}  // namespace
