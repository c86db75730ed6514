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

#include <algorithm>
#include <cmath>

#include "anyword/kernels.hpp"

namespace anyword::kernels::reference {

void mean_of_grids(std::span<const double* const> grids, std::size_t cells, std::span<double> out) {
  const double n = static_cast<double>(grids.size());
  for (std::size_t i = 0; i < cells; ++i) {
    double sum = 0.0;
    for (const double* g : grids) sum += g[i];
    out[i] = sum / n;
  }
}

void threshold(std::span<const double> values, double level, std::span<std::uint8_t> out) {
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] >= level ? 1 : 0;
}

OverlapCount overlap(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  OverlapCount count;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0;
    const bool y = b[i] != 0;
    if (x && y) ++count.intersection;
    if (x || y) ++count.union_;
  }
  return count;
}

void affine_noise(const AffineNoiseArgs& args, std::span<double> eps) {
  const std::size_t C = args.channels;
  const std::size_t N = args.cells;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t p = 0; p < N; ++p) {
      double acc = args.bias[c * N + p];
      for (std::size_t j = 0; j < C; ++j) acc += args.mix[c * C + j] * args.latent[j * N + p];
      for (std::size_t k = 0; k < args.tokens; ++k) {
        acc += args.weight[k * N + p] * args.proj_v[k * C + c];
      }
      eps[c * N + p] = acc;
    }
  }
}

void token_softmax(std::span<const double> logits, std::size_t tokens, std::size_t cells,
                   std::span<double> out) {
  for (std::size_t p = 0; p < cells; ++p) {
    double peak = -INFINITY;
    for (std::size_t k = 0; k < tokens; ++k) peak = std::max(peak, logits[k * cells + p]);
    double total = 0.0;
    for (std::size_t k = 0; k < tokens; ++k) {
      const double e = std::exp(logits[k * cells + p] - peak);
      out[k * cells + p] = e;
      total += e;
    }
    for (std::size_t k = 0; k < tokens; ++k) out[k * cells + p] /= total;
  }
}

}  // namespace anyword::kernels::reference
