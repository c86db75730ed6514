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

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "anyword/kernels.hpp"

namespace anyword::kernels::parallel {

namespace {
// Below this many cells thread start-up dominates.
constexpr std::int64_t kMinParallelCells = 2048;
}  // namespace

void mean_of_grids(std::span<const double* const> grids, std::size_t cells, std::span<double> out) {
  const double n = static_cast<double>(grids.size());
  const auto total = static_cast<std::int64_t>(cells);
#pragma omp parallel for schedule(static) if (total >= kMinParallelCells)
  for (std::int64_t i = 0; i < total; ++i) {
    double sum = 0.0;
    for (const double* g : grids) sum += g[i];
    out[i] = sum / n;
  }
}

void threshold(std::span<const double> values, double level, std::span<std::uint8_t> out) {
  const auto total = static_cast<std::int64_t>(values.size());
#pragma omp parallel for schedule(static) if (total >= kMinParallelCells)
  for (std::int64_t i = 0; i < total; ++i) out[i] = values[i] >= level ? 1 : 0;
}

OverlapCount overlap(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  const auto total = static_cast<std::int64_t>(a.size());
  std::size_t inter = 0;
  std::size_t uni = 0;
#pragma omp parallel for schedule(static) reduction(+ : inter, uni) if (total >= kMinParallelCells)
  for (std::int64_t i = 0; i < total; ++i) {
    const bool x = a[i] != 0;
    const bool y = b[i] != 0;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return {inter, uni};
}

void affine_noise(const AffineNoiseArgs& args, std::span<double> eps) {
  const std::size_t C = args.channels;
  const std::size_t N = args.cells;
  const auto channels = static_cast<std::int64_t>(C);
#pragma omp parallel for schedule(static) if (C * N >= kMinParallelCells)
  for (std::int64_t ci = 0; ci < channels; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    double* out = eps.data() + c * N;
    const double* bias = args.bias.data() + c * N;
    for (std::size_t p = 0; p < N; ++p) out[p] = bias[p];
    for (std::size_t j = 0; j < C; ++j) {
      const double m = args.mix[c * C + j];
      const double* lat = args.latent.data() + j * N;
      for (std::size_t p = 0; p < N; ++p) out[p] += m * lat[p];
    }
    for (std::size_t k = 0; k < args.tokens; ++k) {
      const double v = args.proj_v[k * C + c];
      const double* w = args.weight.data() + k * N;
      for (std::size_t p = 0; p < N; ++p) out[p] += w[p] * v;
    }
  }
}

void token_softmax(std::span<const double> logits, std::size_t tokens, std::size_t cells,
                   std::span<double> out) {
  const auto total = static_cast<std::int64_t>(cells);
#pragma omp parallel for schedule(static) if (total * static_cast<std::int64_t>(tokens) >= kMinParallelCells)
  for (std::int64_t pi = 0; pi < total; ++pi) {
    const auto p = static_cast<std::size_t>(pi);
    double peak = -INFINITY;
    for (std::size_t k = 0; k < tokens; ++k) peak = std::max(peak, logits[k * cells + p]);
    double sum = 0.0;
    for (std::size_t k = 0; k < tokens; ++k) {
      const double e = std::exp(logits[k * cells + p] - peak);
      out[k * cells + p] = e;
      sum += e;
    }
    for (std::size_t k = 0; k < tokens; ++k) out[k * cells + p] /= sum;
  }
}

}  // namespace anyword::kernels::parallel
