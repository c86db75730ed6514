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

// Checkpoint-free stand-ins: an affine noise predictor with blob-shaped
// cross-attention, Gaussian-blob scenes that double as their own ground
// truth, and a pooled-colour image encoder.

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anyword/diffusion.hpp"
#include "anyword/embedopt.hpp"
#include "anyword/image.hpp"
#include "anyword/mask.hpp"
#include "anyword/textgraph.hpp"

namespace anyword::toy {

// eps[c, p] = sum_j mix[c, j] z[j, p] + bias[c, p] + sum_k weight[k, p] (P v_k)[c]
//
// Attention for token k at cell p is the softmax over tokens plus a trailing
// end-of-text slot of
//   logit_scale * gate_k * weight[k, p] + jitter * u(seed, t, k, p)
// with gate_k = max(0, cos(v_k, concept_k)), or 1 when concept_k is empty.
struct AffineToyConfig {
  std::size_t channels = 8;
  std::size_t rows = 16;
  std::size_t cols = 16;
  std::size_t width = 8;
  std::vector<double> mix;         // channels x channels
  std::vector<double> bias;        // channels x cells
  std::vector<double> projection;  // channels x width
  std::vector<double> weights;     // tokens x cells
  std::vector<std::vector<double>> concepts;
  // When non-empty, returned verbatim as the attention of every call.
  std::vector<RealGrid> fixed_attention;
  double logit_scale = 6.0;
  double sink_logit = 0.0;
  double jitter = 0.3;
  std::uint64_t seed = 0;
  std::optional<std::size_t> timesteps;

  std::size_t cells() const { return rows * cols; }
  std::size_t tokens() const { return cells() == 0 ? 0 : weights.size() / cells(); }
  // Throws kShapeMismatch when the arrays disagree with the dimensions.
  void validate() const;
};

class AffineToyDenoiser : public diffusion::DenoiserBackend {
 public:
  explicit AffineToyDenoiser(AffineToyConfig config);

  diffusion::DenoiserOutput predict(const Latent& z, std::size_t t, const EmbeddingSet& v) const override;
  Latent predict_noise(const Latent& z, std::size_t t, const EmbeddingSet& v) const override;
  std::optional<std::vector<std::vector<double>>> noise_loss_gradient(
      const Latent& z, std::size_t t, const EmbeddingSet& v, const Latent& target) const override;
  GridShape attention_resolution() const override { return {config_.rows, config_.cols}; }
  std::optional<std::size_t> timesteps() const override { return config_.timesteps; }
  std::string name() const override { return "affine-toy"; }

  const AffineToyConfig& config() const { return config_; }
  // Number of predict/predict_noise/gradient calls served so far.
  std::size_t calls() const { return calls_.load(); }
  Latent zero_latent() const { return Latent(config_.channels, config_.rows, config_.cols); }

 private:
  void check_inputs(const Latent& z, const EmbeddingSet& v) const;
  std::vector<double> projected(const EmbeddingSet& v) const;
  Latent noise(const Latent& z, const std::vector<double>& proj_v) const;

  AffineToyConfig config_;
  mutable std::atomic<std::size_t> calls_{0};
};

// Random well-conditioned configuration for property tests: small mix,
// Gaussian-blob weights, random projection and bias.
AffineToyConfig random_affine_config(std::uint64_t seed, std::size_t channels, std::size_t rows,
                                     std::size_t cols, std::size_t width, std::size_t tokens);

// Random embedding set matching a configuration; every vector trainable.
EmbeddingSet random_embeddings(std::uint64_t seed, std::size_t tokens, std::size_t width);

// Softmax-normalised attention fixture: one Gaussian blob per token plus an
// end-of-text slot, so every cell's column sums to one.
std::vector<RealGrid> blob_attention_fixture(std::size_t rows, std::size_t cols,
                                             const std::vector<std::array<double, 3>>& blobs);

// Gaussian-shaped object with flat colour, rendered out to 2 standard
// deviations along each axis.
struct SceneObject {
  std::string noun;
  std::vector<std::string> aliases;
  std::string adjective;
  std::array<float, 3> color{};
  double cx = 0.0;
  double cy = 0.0;
  double sx = 1.0;
  double sy = 1.0;
};

struct Scene {
  ImageSize size{128, 128};
  std::array<float, 3> background{0.5f, 0.5f, 0.5f};
  std::vector<SceneObject> objects;
};

constexpr double kObjectExtent = 2.0;

// exp(-d^2 / 2) where d is the axis-scaled distance from the object centre.
double object_profile(const SceneObject& o, double x, double y);
// Pixels with d <= kObjectExtent not covered by a later object.
BinaryMask object_mask(const Scene& scene, std::size_t index);
Image render_scene(const Scene& scene);

// Which object (if any) each parsed entity refers to: the first object whose
// noun or alias matches the entity root, ignoring plural endings.
std::vector<std::optional<std::size_t>> match_entities(const Scene& scene,
                                                       const textgraph::ParsedExpression& parsed);

struct SceneDenoiserOptions {
  std::size_t channels = 8;
  std::size_t rows = 16;
  std::size_t cols = 16;
  double mix = 0.02;
  double projection_scale = 1.0;
  double logit_scale = 6.0;
  double jitter = 0.3;
  std::uint64_t seed = 0;
};

// Affine toy whose token weights are the matched objects' profiles sampled at
// attention cell centres (roots and attribute nouns linearly, adjectives
// squared) and whose concepts are the encoder's visual concepts. Tokens of
// unmatched entities and function words carry zero weight.
AffineToyConfig scene_config(const Scene& scene, const textgraph::ParsedExpression& parsed,
                             const embedopt::ToyTextEncoder& encoder,
                             const SceneDenoiserOptions& options = {});

// Average-pools an image to rows x cols and lifts RGB to `channels` with a
// fixed seeded linear map.
Latent encode_image(const Image& image, std::size_t channels = 8, std::size_t rows = 16,
                    std::size_t cols = 16);

}  // namespace anyword::toy
