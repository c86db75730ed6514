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

// Test-time optimisation of concept-token embeddings under the denoising
// objective, plus the low-rank fast-adapt path for the text encoder.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anyword/diffusion.hpp"
#include "anyword/embedding.hpp"
#include "anyword/latent.hpp"
#include "anyword/textgraph.hpp"

namespace anyword::embedopt {

struct LoraAdapter {
  std::uint32_t version = 1;
  std::size_t rank = 0;
  std::size_t vocab = 0;
  std::size_t width = 0;
  std::string encoder_fingerprint;
  std::vector<float> a;  // vocab x rank
  std::vector<float> b;  // rank x width

  bool operator==(const LoraAdapter&) const = default;
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual bool available() const { return true; }
  virtual std::size_t width() const = 0;
  // nullopt for out-of-vocabulary words.
  virtual std::optional<std::vector<double>> embed(std::string_view word) const = 0;
  // Per-coordinate standard deviation of in-vocabulary embeddings.
  virtual double embedding_scale() const = 0;
  virtual std::string fingerprint() const = 0;
  virtual bool has_adapter() const { return false; }
};

// Seeded lookup-table encoder over the parser lexicon, with an optional
// low-rank additive correction: E'(w) = E(w) + A[w] * B.
class ToyTextEncoder : public TextEncoder {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x5eed'e4c0'de00ULL;

  explicit ToyTextEncoder(std::size_t width = 8, double scale = 0.5,
                          std::uint64_t seed = kDefaultSeed);

  std::size_t width() const override { return width_; }
  std::optional<std::vector<double>> embed(std::string_view word) const override;
  double embedding_scale() const override { return scale_; }
  std::string fingerprint() const override;
  bool has_adapter() const override { return adapter_.has_value(); }

  std::size_t vocab_size() const { return vocab_.size(); }
  // Row of `word` in the table, after lower-casing and plural stripping.
  std::optional<std::size_t> vocab_index(std::string_view word) const;
  const std::string& vocab_word(std::size_t index) const { return vocab_.at(index); }
  // Embedding without the adapter correction.
  std::vector<double> base_row(std::size_t index) const;
  // Fingerprint of the table alone; adapters are keyed to it.
  std::string base_fingerprint() const;

  // The toy world's appearance-side vector for a word: the table row plus a
  // fixed per-word domain shift, or a seeded draw for unknown words. Scene
  // denoisers align attention with these; adapters learn the shift.
  std::vector<double> visual_concept(std::string_view word) const;

  // Throws kAdapterMismatch when the adapter was trained for another encoder.
  void install_adapter(LoraAdapter adapter);
  void remove_adapter() { adapter_.reset(); }
  const std::optional<LoraAdapter>& adapter() const;

 private:
  std::size_t width_;
  double scale_;
  std::uint64_t seed_;
  std::vector<std::string> vocab_;
  std::vector<double> table_;  // vocab x width
  std::optional<LoraAdapter> adapter_;
};

// Atomic: writes to a sibling temporary file and renames it into place.
void save_adapter(const LoraAdapter& adapter, const std::filesystem::path& path);
LoraAdapter load_adapter(const std::filesystem::path& path);

struct AdaptSample {
  std::filesystem::path image;
  std::string text;
};

struct AdaptConfig {
  std::size_t rank = 16;
  std::size_t steps = 1100;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
};

// Trains a low-rank correction pulling the encoder's rows for the words of
// the sample captions toward the toy world's visual concept vectors.
// Errors: kEmptySampleSet, kBackendUnavailable, kIoError.
LoraAdapter fast_adapt_text_encoder(const ToyTextEncoder& encoder,
                                    const std::vector<AdaptSample>& samples,
                                    const AdaptConfig& config = {});

// In-vocabulary tokens take the encoder row; out-of-vocabulary tokens take a
// Gaussian draw at the encoder's scale seeded by (seed, word). Trainable
// exactly for the expression's concept tokens.
EmbeddingSet init_embeddings(const textgraph::ParsedExpression& parsed, const TextEncoder& encoder,
                             std::uint64_t seed = 0);

struct OptimizerConfig {
  double learning_rate = 0.005;
  std::size_t steps = 1100;
  std::size_t fast_steps = 50;
  std::size_t batch_size = 8;
  // Passed through untouched to backends with auxiliary losses.
  double tau = 0.3;
  double gamma = 0.00075;
  double momentum = 0.0;
  bool adam = false;
  double finite_difference_step = 1e-4;
  std::uint64_t seed = 0;

  // Throws kInvalidArgument unless steps >= 1, learning_rate > 0, batch >= 1.
  void validate() const;
};

// cfg.fast_steps when the encoder carries an adapter, cfg.steps otherwise.
std::size_t effective_steps(const OptimizerConfig& cfg, const TextEncoder& encoder);

struct OptimizeResult {
  EmbeddingSet embeddings;
  // Mean mini-batch loss of every step, evaluated before its update.
  std::vector<double> loss_history;
  std::size_t backend_calls = 0;
};

class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(std::size_t step, EmbeddingSet checkpoint)
      : Error(ErrorCode::kNonFiniteLoss, "loss not finite at step " + std::to_string(step)),
        step_(step),
        checkpoint_(std::move(checkpoint)) {}
  std::size_t step() const { return step_; }
  // Embeddings as of the last step whose loss was finite.
  const EmbeddingSet& checkpoint() const { return checkpoint_; }

 private:
  std::size_t step_;
  EmbeddingSet checkpoint_;
};

// ||target - eps(z, t, v)||^2 summed over every latent entry.
double noise_loss(const Latent& z, std::size_t t, const EmbeddingSet& v, const Latent& target,
                  const diffusion::DenoiserBackend& backend);

// Central finite differences of noise_loss for every trainable vector;
// frozen rows are zero.
std::vector<std::vector<double>> finite_difference_gradient(
    const Latent& z, std::size_t t, const EmbeddingSet& v, const Latent& target,
    const diffusion::DenoiserBackend& backend, double h);

// Called after every step with the current embeddings.
using StepObserver = std::function<void(std::size_t step, const EmbeddingSet& current)>;

// Runs `steps` SGD iterations (cfg.steps when unset) on
//   E_{t, eps} ||eps - eps_hat(sqrt(alpha_t) z0 + sigma_t eps, t, V)||^2
// updating trainable rows only. Falls back to finite differences when the
// backend offers no gradient. Throws NonFiniteLossError after three
// consecutive non-finite evaluations.
OptimizeResult optimize_embeddings(const Latent& z0, const EmbeddingSet& v,
                                   const diffusion::NoiseSchedule& schedule,
                                   const diffusion::DenoiserBackend& backend,
                                   const OptimizerConfig& cfg,
                                   std::optional<std::size_t> steps = std::nullopt,
                                   const StepObserver& observer = {});

}  // namespace anyword::embedopt
