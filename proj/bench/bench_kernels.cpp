// Copyright 2026 The Anyword Authors
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

#include <random>
#include <vector>

#include "anyword/kernels.hpp"
#include "anyword/rng.hpp"

namespace ref = anyword::kernels::reference;
namespace par = anyword::kernels::parallel;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  anyword::Rng rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

template <bool Parallel>
void BM_MeanOfGrids(benchmark::State& state) {
  const auto cells = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<double>> grids;
  std::vector<const double*> ptrs;
  for (std::uint64_t g = 0; g < 50; ++g) grids.push_back(normals(cells, g));
  for (auto& g : grids) ptrs.push_back(g.data());
  std::vector<double> out(cells);
  for (auto _ : state) {
    if constexpr (Parallel) par::mean_of_grids(ptrs, cells, out);
    else ref::mean_of_grids(ptrs, cells, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cells * grids.size()));
}

template <bool Parallel>
void BM_Threshold(benchmark::State& state) {
  const auto cells = static_cast<std::size_t>(state.range(0));
  const auto values = normals(cells, 1);
  std::vector<std::uint8_t> out(cells);
  for (auto _ : state) {
    if constexpr (Parallel) par::threshold(values, 0.3, out);
    else ref::threshold(values, 0.3, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cells));
}

template <bool Parallel>
void BM_Overlap(benchmark::State& state) {
  const auto cells = static_cast<std::size_t>(state.range(0));
  const auto va = normals(cells, 2), vb = normals(cells, 3);
  std::vector<std::uint8_t> a(cells), b(cells);
  ref::threshold(va, 0.0, a);
  ref::threshold(vb, 0.0, b);
  for (auto _ : state) {
    auto r = Parallel ? par::overlap(a, b) : ref::overlap(a, b);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cells));
}

template <bool Parallel>
void BM_TokenSoftmax(benchmark::State& state) {
  const auto cells = static_cast<std::size_t>(state.range(0));
  const std::size_t tokens = 8;
  const auto logits = normals(tokens * cells, 4);
  std::vector<double> out(tokens * cells);
  for (auto _ : state) {
    if constexpr (Parallel) par::token_softmax(logits, tokens, cells, out);
    else ref::token_softmax(logits, tokens, cells, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tokens * cells));
}

template <bool Parallel>
void BM_AffineNoise(benchmark::State& state) {
  const auto cells = static_cast<std::size_t>(state.range(0));
  const std::size_t channels = 4, tokens = 6;
  const auto mix = normals(channels * channels, 5), lat = normals(channels * cells, 6);
  const auto bias = normals(channels * cells, 7), weight = normals(tokens * cells, 8);
  const auto pv = normals(tokens * channels, 9);
  const anyword::kernels::AffineNoiseArgs args{channels, cells, tokens, mix, lat, bias, weight, pv};
  std::vector<double> eps(channels * cells);
  for (auto _ : state) {
    if constexpr (Parallel) par::affine_noise(args, eps);
    else ref::affine_noise(args, eps);
    benchmark::DoNotOptimize(eps.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(channels * cells));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (std::int64_t n : {256, 4096, 65536, 1 << 20}) b->Arg(n);
}

}  // namespace

BENCHMARK(BM_MeanOfGrids<false>)->Name("mean_of_grids/reference")->Apply(sizes);
BENCHMARK(BM_MeanOfGrids<true>)->Name("mean_of_grids/parallel")->Apply(sizes)->UseRealTime();
BENCHMARK(BM_Threshold<false>)->Name("threshold/reference")->Apply(sizes);
BENCHMARK(BM_Threshold<true>)->Name("threshold/parallel")->Apply(sizes)->UseRealTime();
BENCHMARK(BM_Overlap<false>)->Name("overlap/reference")->Apply(sizes);
BENCHMARK(BM_Overlap<true>)->Name("overlap/parallel")->Apply(sizes)->UseRealTime();
BENCHMARK(BM_TokenSoftmax<false>)->Name("token_softmax/reference")->Apply(sizes);
BENCHMARK(BM_TokenSoftmax<true>)->Name("token_softmax/parallel")->Apply(sizes)->UseRealTime();
BENCHMARK(BM_AffineNoise<false>)->Name("affine_noise/reference")->Apply(sizes);
BENCHMARK(BM_AffineNoise<true>)->Name("affine_noise/parallel")->Apply(sizes)->UseRealTime();

BENCHMARK_MAIN();
