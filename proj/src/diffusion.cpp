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

#include "anyword/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace anyword::diffusion {
namespace {

double tail_coefficient(double alpha) { return std::sqrt(std::max(0.0, 1.0 / alpha - 1.0)); }

void check_schedule(const NoiseSchedule& schedule, const DenoiserBackend& backend) {
  schedule.validate();
  if (auto t = backend.timesteps(); t && *t != schedule.steps()) {
    throw Error(ErrorCode::kScheduleMismatch, "backend configured for " + std::to_string(*t) +
                                                  " steps, schedule has " +
                                                  std::to_string(schedule.steps()));
  }
}

void check_finite(const Latent& z, const char* what) {
  if (!z.all_finite()) throw Error(ErrorCode::kNonFiniteLatent, what);
}

DenoiserOutput call_backend(const DenoiserBackend& backend, const Latent& z, std::size_t t,
                            const EmbeddingSet& v) {
  DenoiserOutput out;
  try {
    out = backend.predict(z, t, v);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kBackendFailure, backend.name() + ": " + e.what());
  }
  if (!out.noise.same_shape(z)) {
    throw Error(ErrorCode::kBackendFailure, backend.name() + ": noise shape differs from latent");
  }
  check_finite(out.noise, "backend returned a non-finite noise prediction");
  return out;
}

Latent call_noise(const DenoiserBackend& backend, const Latent& z, std::size_t t,
                  const EmbeddingSet& v) {
  Latent eps;
  try {
    eps = backend.predict_noise(z, t, v);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kBackendFailure, backend.name() + ": " + e.what());
  }
  if (!eps.same_shape(z)) {
    throw Error(ErrorCode::kBackendFailure, backend.name() + ": noise shape differs from latent");
  }
  check_finite(eps, "backend returned a non-finite noise prediction");
  return eps;
}

// Smallest-magnitude change to d (in ulps) such that base + d == target.
double exact_offset(double base, double target) {
  double d = target - base;
  if (base + d == target) return d;
  double lo = d;
  double hi = d;
  for (int i = 0; i < 64; ++i) {
    lo = std::nextafter(lo, -INFINITY);
    hi = std::nextafter(hi, INFINITY);
    if (base + lo == target) return lo;
    if (base + hi == target) return hi;
  }
  return d;
}

}  // namespace

void NoiseSchedule::validate() const {
  if (alphas.size() != sigmas.size()) {
    throw Error(ErrorCode::kInvalidArgument, "alphas and sigmas differ in length");
  }
  if (!(alpha0 > 0.0 && alpha0 <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha_0 outside (0,1]");
  double prev = alpha0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    double a = alphas[i];
    if (!(a > 0.0 && a <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "alpha_" + std::to_string(i + 1) + " outside (0,1]");
    }
    if (a > prev) throw Error(ErrorCode::kInvalidArgument, "alphas must be non-increasing");
    if (!(sigmas[i] >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative sigma");
    prev = a;
  }
}

NoiseSchedule NoiseSchedule::from_alphas(std::vector<double> alphas, double alpha0) {
  NoiseSchedule s;
  s.alpha0 = alpha0;
  s.sigmas.reserve(alphas.size());
  for (double a : alphas) s.sigmas.push_back(std::sqrt(std::max(0.0, 1.0 - a)));
  s.alphas = std::move(alphas);
  s.validate();
  return s;
}

NoiseSchedule NoiseSchedule::scaled_linear(std::size_t steps, std::size_t train_steps,
                                           double beta_start, double beta_end) {
  if (steps == 0 || train_steps < steps) {
    throw Error(ErrorCode::kInvalidArgument, "scaled_linear: need 0 < steps <= train_steps");
  }
  std::vector<double> cumulative(train_steps);
  double lo = std::sqrt(beta_start);
  double hi = std::sqrt(beta_end);
  double prod = 1.0;
  for (std::size_t i = 0; i < train_steps; ++i) {
    double f = train_steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(train_steps - 1);
    double root = lo + (hi - lo) * f;
    prod *= 1.0 - root * root;
    cumulative[i] = prod;
  }
  std::size_t stride = train_steps / steps;
  std::vector<double> alphas;
  alphas.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) alphas.push_back(cumulative[k * stride]);
  return from_alphas(std::move(alphas), 1.0);
}

StepCoefficients inversion_coefficients(double alpha_prev, double alpha_t) {
  StepCoefficients c;
  c.scale = std::sqrt(alpha_t) / std::sqrt(alpha_prev);
  c.noise = std::sqrt(alpha_t) * (tail_coefficient(alpha_t) - tail_coefficient(alpha_prev));
  return c;
}

Latent inversion_step(const Latent& z_prev, const Latent& eps, double alpha_prev, double alpha_t) {
  require_same_shape(z_prev, eps, "inversion_step: noise shape differs from latent");
  StepCoefficients c = inversion_coefficients(alpha_prev, alpha_t);
  Latent out = z_prev;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = c.scale * z_prev.values[i] + c.noise * eps.values[i];
  return out;
}

Latent ddim_step(const Latent& z_t, const Latent& eps, double alpha_t, double alpha_prev) {
  require_same_shape(z_t, eps, "ddim_step: noise shape differs from latent");
  StepCoefficients c = inversion_coefficients(alpha_prev, alpha_t);
  Latent out = z_t;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = (z_t.values[i] - c.noise * eps.values[i]) / c.scale;
  return out;
}

std::vector<Latent> invert(const Latent& z0, const NoiseSchedule& schedule, const EmbeddingSet& v,
                           const DenoiserBackend& backend) {
  check_schedule(schedule, backend);
  check_finite(z0, "initial latent is not finite");
  std::vector<Latent> chain;
  chain.reserve(schedule.steps());
  const Latent* prev = &z0;
  for (std::size_t t = 1; t <= schedule.steps(); ++t) {
    Latent eps = call_noise(backend, *prev, t - 1, v);
    chain.push_back(inversion_step(*prev, eps, schedule.alpha(t - 1), schedule.alpha(t)));
    check_finite(chain.back(), "inversion produced a non-finite latent");
    prev = &chain.back();
  }
  return chain;
}

std::vector<Latent> inversion_targets(const Latent& z0, const std::vector<Latent>& inverted) {
  std::vector<Latent> out;
  if (inverted.empty()) return out;
  out.reserve(inverted.size());
  out.push_back(z0);
  for (std::size_t i = 0; i + 1 < inverted.size(); ++i) out.push_back(inverted[i]);
  return out;
}

std::vector<Latent> single_step_predictions(const Latent& z0, const std::vector<Latent>& inverted,
                                            const NoiseSchedule& schedule, const EmbeddingSet& v,
                                            const DenoiserBackend& backend) {
  check_schedule(schedule, backend);
  if (inverted.size() != schedule.steps()) {
    throw Error(ErrorCode::kLengthMismatch, "inverted chain length differs from schedule");
  }
  std::vector<Latent> out;
  out.reserve(inverted.size());
  for (std::size_t t = 1; t <= schedule.steps(); ++t) {
    const Latent& zt = inverted[t - 1];
    require_same_shape(zt, z0, "inverted latent shape differs from z0");
    Latent eps = call_noise(backend, zt, t, v);
    out.push_back(ddim_step(zt, eps, schedule.alpha(t), schedule.alpha(t - 1)));
  }
  return out;
}

std::vector<Latent> direct_inversion_offsets(const std::vector<Latent>& inverted,
                                             const std::vector<Latent>& denoised) {
  if (inverted.size() != denoised.size()) {
    throw Error(ErrorCode::kShapeMismatch, "offset chains differ in length");
  }
  std::vector<Latent> out;
  out.reserve(inverted.size());
  for (std::size_t t = 0; t < inverted.size(); ++t) {
    require_same_shape(inverted[t], denoised[t], "offset chain latents differ in shape");
    Latent d = inverted[t];
    for (std::size_t i = 0; i < d.size(); ++i) {
      d.values[i] = exact_offset(denoised[t].values[i], inverted[t].values[i]);
    }
    out.push_back(std::move(d));
  }
  return out;
}

AttentionStack operator+(const AttentionStack& a, const AttentionStack& b) {
  if (a.timesteps != b.timesteps || a.token_count != b.token_count || a.shape != b.shape ||
      a.maps.size() != b.maps.size()) {
    throw Error(ErrorCode::kShapeMismatch, "attention stacks differ in layout");
  }
  AttentionStack out = a;
  for (std::size_t m = 0; m < out.maps.size(); ++m) {
    if (b.maps[m].shape() != out.maps[m].shape()) {
      throw Error(ErrorCode::kShapeMismatch, "attention grids differ in shape");
    }
    for (std::size_t i = 0; i < out.maps[m].size(); ++i) out.maps[m][i] += b.maps[m][i];
  }
  return out;
}

DenoiseResult denoise_collect(const Latent& zT, const EmbeddingSet& v, const NoiseSchedule& schedule,
                              const DenoiserBackend& backend, const std::vector<Latent>* offsets) {
  check_schedule(schedule, backend);
  check_finite(zT, "starting latent is not finite");
  const std::size_t T = schedule.steps();
  if (offsets && offsets->size() != T) {
    throw Error(ErrorCode::kLengthMismatch, "offset count differs from schedule length");
  }
  DenoiseResult result;
  result.stack.timesteps = T;
  result.stack.token_count = v.size();
  result.stack.shape = backend.attention_resolution();
  result.stack.maps.reserve(T * v.size());
  result.trajectory.assign(T + 1, Latent{});
  result.trajectory[T] = zT;

  Latent z = zT;
  for (std::size_t t = T; t >= 1; --t) {
    DenoiserOutput out = call_backend(backend, z, t, v);
    if (out.attention.size() < v.size()) {
      throw Error(ErrorCode::kBackendFailure, backend.name() + ": fewer attention grids than tokens");
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (out.attention[k].shape() != result.stack.shape) {
        throw Error(ErrorCode::kBackendFailure, backend.name() + ": attention grid has wrong shape");
      }
      result.stack.maps.push_back(std::move(out.attention[k]));
    }
    z = ddim_step(z, out.noise, schedule.alpha(t), schedule.alpha(t - 1));
    if (offsets) {
      const Latent& d = (*offsets)[t - 1];
      require_same_shape(z, d, "offset shape differs from latent");
      for (std::size_t i = 0; i < z.size(); ++i) z.values[i] += d.values[i];
    }
    check_finite(z, "denoising produced a non-finite latent");
    result.trajectory[t - 1] = z;
  }
  result.reconstruction = std::move(z);
  return result;
}

RealGrid minmax_normalize(const RealGrid& grid) {
  RealGrid out(grid.rows(), grid.cols(), 0.0);
  if (grid.size() == 0) return out;
  auto [lo_it, hi_it] = std::minmax_element(grid.begin(), grid.end());
  double lo = *lo_it;
  double range = *hi_it - lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = (grid[i] - lo) / range;
  return out;
}

AveragedAttentionMap average_attention(const AttentionStack& stack, std::size_t token_index,
                                       Normalization normalization) {
  if (token_index >= stack.token_count) {
    throw Error(ErrorCode::kIndexOutOfRange, "token index " + std::to_string(token_index) +
                                                 " outside stack of " +
                                                 std::to_string(stack.token_count) + " tokens");
  }
  if (stack.timesteps == 0) throw Error(ErrorCode::kInvalidArgument, "empty attention stack");
  RealGrid sum(stack.shape.rows, stack.shape.cols, 0.0);
  for (std::size_t s = 0; s < stack.timesteps; ++s) {
    const RealGrid& g = stack.at(s, token_index);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += g[i];
  }
  const double n = static_cast<double>(stack.timesteps);
  for (auto& x : sum) x /= n;

  AveragedAttentionMap map;
  map.token_index = token_index;
  map.normalization = normalization;
  map.grid = normalization == Normalization::kMinMax ? minmax_normalize(sum) : std::move(sum);
  return map;
}

std::vector<RealGrid> mean_pool_layers(const std::vector<std::vector<RealGrid>>& layers) {
  if (layers.empty()) return {};
  std::vector<RealGrid> pooled = layers.front();
  for (std::size_t l = 1; l < layers.size(); ++l) {
    if (layers[l].size() != pooled.size()) {
      throw Error(ErrorCode::kShapeMismatch, "layers carry different token counts");
    }
    for (std::size_t k = 0; k < pooled.size(); ++k) {
      if (layers[l][k].shape() != pooled[k].shape()) {
        throw Error(ErrorCode::kShapeMismatch, "layer attention resolutions differ");
      }
      for (std::size_t i = 0; i < pooled[k].size(); ++i) pooled[k][i] += layers[l][k][i];
    }
  }
  const double n = static_cast<double>(layers.size());
  for (auto& g : pooled) {
    for (auto& x : g) x /= n;
  }
  return pooled;
}

}  // namespace anyword::diffusion
