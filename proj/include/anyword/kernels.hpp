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

#pragma once

// Data-parallel inner loops. Each kernel exists twice: `reference` is the
// plain serial version kept as the testing oracle, `parallel` is the OpenMP
// version the library calls. Both produce bit-identical results: the parallel
// versions only split independent cells across threads and never reorder a
// floating-point reduction.

#include <cstddef>
#include <cstdint>
#include <span>

namespace anyword::kernels {

struct OverlapCount {
  std::size_t intersection = 0;
  std::size_t union_ = 0;
  bool operator==(const OverlapCount&) const = default;
};

// Arguments of the affine toy noise predictor
//   eps[c, p] = sum_j mix[c, j] * z[j, p] + bias[c, p] + sum_k weight[k, p] * proj_v[k, c]
// where proj_v[k, :] = proj * v_k was precomputed by the caller.
struct AffineNoiseArgs {
  std::size_t channels = 0;
  std::size_t cells = 0;
  std::size_t tokens = 0;
  std::span<const double> mix;     // channels x channels
  std::span<const double> latent;  // channels x cells
  std::span<const double> bias;    // channels x cells
  std::span<const double> weight;  // tokens x cells
  std::span<const double> proj_v;  // tokens x channels
};

namespace reference {

void mean_of_grids(std::span<const double* const> grids, std::size_t cells, std::span<double> out);
void threshold(std::span<const double> values, double level, std::span<std::uint8_t> out);
OverlapCount overlap(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
void affine_noise(const AffineNoiseArgs& args, std::span<double> eps);
// logits/out are tokens x cells; softmax runs over tokens independently per cell.
void token_softmax(std::span<const double> logits, std::size_t tokens, std::size_t cells,
                   std::span<double> out);

}  // namespace reference

namespace parallel {

void mean_of_grids(std::span<const double* const> grids, std::size_t cells, std::span<double> out);
void threshold(std::span<const double> values, double level, std::span<std::uint8_t> out);
OverlapCount overlap(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
void affine_noise(const AffineNoiseArgs& args, std::span<double> eps);
void token_softmax(std::span<const double> logits, std::size_t tokens, std::size_t cells,
                   std::span<double> out);

}  // namespace parallel

}  // namespace anyword::kernels
