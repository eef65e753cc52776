// Copyright 2026 The AWA Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "awa/kernels.hpp"
#include "awa/rng.hpp"

namespace {

using namespace awa::kernels;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  awa::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1, 1);
  return v;
}

// The cnn_small second conv at batch 4; the argument is the image side.
ConvGeometry geometry(std::size_t side) {
  ConvGeometry g;
  g.batch = 4;
  g.in_channels = 8;
  g.height = g.width = side;
  g.out_channels = 8;
  g.kernel_h = g.kernel_w = 3;
  g.padding = 1;
  return g;
}

template <auto Kernel>
void BM_Matmul(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(n * n, 1), b = random_vector(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Kernel(a, b, c, n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * n * n * n));
}

template <auto Kernel>
void BM_Conv(benchmark::State& state) {
  const ConvGeometry g = geometry(static_cast<std::size_t>(state.range(0)));
  const auto x = random_vector(g.input_size(), 3), w = random_vector(g.weight_size(), 4);
  std::vector<double> y(g.output_size());
  for (auto _ : state) {
    Kernel(g, x, w, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto Kernel>
void BM_ConvInputGrad(benchmark::State& state) {
  const ConvGeometry g = geometry(static_cast<std::size_t>(state.range(0)));
  const auto gy = random_vector(g.output_size(), 5), w = random_vector(g.weight_size(), 6);
  std::vector<double> gx(g.input_size());
  for (auto _ : state) {
    Kernel(g, gy, w, gx);
    benchmark::DoNotOptimize(gx.data());
  }
}

template <auto Kernel>
void BM_ConvWeightGrad(benchmark::State& state) {
  const ConvGeometry g = geometry(static_cast<std::size_t>(state.range(0)));
  const auto x = random_vector(g.input_size(), 7), gy = random_vector(g.output_size(), 8);
  std::vector<double> gw(g.weight_size());
  for (auto _ : state) {
    Kernel(g, x, gy, gw);
    benchmark::DoNotOptimize(gw.data());
  }
}

BENCHMARK(BM_Matmul<serial::matmul>)->Name("matmul/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<parallel::matmul>)->Name("matmul/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_Conv<serial::conv2d>)->Name("conv2d/serial")->Arg(8)->Arg(32);
BENCHMARK(BM_Conv<parallel::conv2d>)->Name("conv2d/parallel")->Arg(8)->Arg(32);
BENCHMARK(BM_ConvInputGrad<serial::conv2d_input_grad>)
    ->Name("conv2d_input_grad/serial")->Arg(8)->Arg(32);
BENCHMARK(BM_ConvInputGrad<parallel::conv2d_input_grad>)
    ->Name("conv2d_input_grad/parallel")->Arg(8)->Arg(32);
BENCHMARK(BM_ConvWeightGrad<serial::conv2d_weight_grad>)
    ->Name("conv2d_weight_grad/serial")->Arg(8)->Arg(32);
BENCHMARK(BM_ConvWeightGrad<parallel::conv2d_weight_grad>)
    ->Name("conv2d_weight_grad/parallel")->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
