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

// Denoiser backend contract, the deterministic inversion recursion, the
// direct-inversion correction, the denoise-and-collect loop, and time
// averaging of cross-attention maps.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anyword/embedding.hpp"
#include "anyword/grid.hpp"
#include "anyword/latent.hpp"

namespace anyword::diffusion {

// alpha(t) is the cumulative signal level: z_t = sqrt(alpha_t) z_0 + sigma_t eps.
struct NoiseSchedule {
  double alpha0 = 1.0;
  std::vector<double> alphas;  // alpha_1 .. alpha_T
  std::vector<double> sigmas;  // sigma_1 .. sigma_T

  std::size_t steps() const { return alphas.size(); }
  double alpha(std::size_t t) const { return t == 0 ? alpha0 : alphas.at(t - 1); }
  double sigma(std::size_t t) const { return t == 0 ? 0.0 : sigmas.at(t - 1); }

  // Throws kInvalidArgument unless lengths agree, every alpha lies in (0, 1],
  // alpha is non-increasing from alpha0 and every sigma is >= 0.
  void validate() const;

  // sigma_t = sqrt(1 - alpha_t).
  static NoiseSchedule from_alphas(std::vector<double> alphas, double alpha0 = 1.0);
  // Latent-diffusion v1 "scaled linear" beta schedule over `train_steps`,
  // subsampled to `steps` evenly spaced timesteps.
  static NoiseSchedule scaled_linear(std::size_t steps, std::size_t train_steps = 1000,
                                     double beta_start = 0.00085, double beta_end = 0.012);
};

struct DenoiserOutput {
  Latent noise;
  // One grid per token of the embedding set, optionally followed by grids for
  // special tokens (end-of-text, padding) that downstream code ignores.
  std::vector<RealGrid> attention;
};

class DenoiserBackend {
 public:
  virtual ~DenoiserBackend() = default;

  // Deterministic in (z, t, v).
  virtual DenoiserOutput predict(const Latent& z, std::size_t t, const EmbeddingSet& v) const = 0;
  virtual Latent predict_noise(const Latent& z, std::size_t t, const EmbeddingSet& v) const {
    return predict(z, t, v).noise;
  }
  // Gradient of ||target - eps(z, t, v)||^2 with respect to every embedding
  // vector, or nullopt when the backend is not differentiable.
  virtual std::optional<std::vector<std::vector<double>>> noise_loss_gradient(
      const Latent& z, std::size_t t, const EmbeddingSet& v, const Latent& target) const {
    (void)z, (void)t, (void)v, (void)target;
    return std::nullopt;
  }

  virtual GridShape attention_resolution() const { return {16, 16}; }
  // Number of timesteps the backend was configured for, if it cares.
  virtual std::optional<std::size_t> timesteps() const { return std::nullopt; }
  // Whether one handle may be used from several threads at once.
  virtual bool shareable() const { return true; }
  virtual std::string name() const = 0;
};

// Coefficients of one inversion step t-1 -> t:
//   z_t = scale * z_{t-1} + noise * eps
struct StepCoefficients {
  double scale = 1.0;
  double noise = 0.0;
};

StepCoefficients inversion_coefficients(double alpha_prev, double alpha_t);

Latent inversion_step(const Latent& z_prev, const Latent& eps, double alpha_prev, double alpha_t);
// Exact algebraic inverse of inversion_step for a fixed eps.
Latent ddim_step(const Latent& z_t, const Latent& eps, double alpha_t, double alpha_prev);

// z*_1 .. z*_T with z*_0 = z0.
std::vector<Latent> invert(const Latent& z0, const NoiseSchedule& schedule, const EmbeddingSet& v,
                           const DenoiserBackend& backend);

// [z0, z*_1, ..., z*_{T-1}]: the latent each denoising step should land on.
std::vector<Latent> inversion_targets(const Latent& z0, const std::vector<Latent>& inverted);

// One DDIM step from every inverted latent: element t-1 is the step t -> t-1
// applied to z*_t. These are the uncorrected landings the offsets fix up.
std::vector<Latent> single_step_predictions(const Latent& z0, const std::vector<Latent>& inverted,
                                            const NoiseSchedule& schedule, const EmbeddingSet& v,
                                            const DenoiserBackend& backend);

// d_t = inverted_t - denoised_t. Each offset is nudged by at most a few ulps so
// that denoised_t + d_t reproduces inverted_t exactly in floating point.
std::vector<Latent> direct_inversion_offsets(const std::vector<Latent>& inverted,
                                             const std::vector<Latent>& denoised);

struct AttentionStack {
  std::size_t timesteps = 0;
  std::size_t token_count = 0;
  GridShape shape;
  std::vector<RealGrid> maps;  // [step * token_count + token], step 0 = first call (t = T)

  const RealGrid& at(std::size_t step, std::size_t token) const {
    return maps.at(step * token_count + token);
  }
};

// Elementwise sum of two stacks of identical layout.
AttentionStack operator+(const AttentionStack& a, const AttentionStack& b);

struct DenoiseResult {
  Latent reconstruction;
  AttentionStack stack;
  // trajectory[t] is the running latent at timestep t; trajectory[T] = zT.
  std::vector<Latent> trajectory;
};

// Runs t = T .. 1, recording every token's attention at every step. When
// `offsets` is non-null, offsets[t-1] is added after the step t -> t-1.
DenoiseResult denoise_collect(const Latent& zT, const EmbeddingSet& v, const NoiseSchedule& schedule,
                              const DenoiserBackend& backend,
                              const std::vector<Latent>* offsets = nullptr);

enum class Normalization { kRaw, kMinMax };

struct AveragedAttentionMap {
  std::size_t token_index = 0;
  RealGrid grid;
  Normalization normalization = Normalization::kMinMax;
};

// Constant grids map to all zeros.
RealGrid minmax_normalize(const RealGrid& grid);

AveragedAttentionMap average_attention(const AttentionStack& stack, std::size_t token_index,
                                       Normalization normalization = Normalization::kMinMax);

// Mean-pool attention from several layers at the same resolution.
// layers[l][token] -> pooled[token].
std::vector<RealGrid> mean_pool_layers(const std::vector<std::vector<RealGrid>>& layers);

}  // namespace anyword::diffusion
