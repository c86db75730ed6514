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

// End-to-end orchestration: parse, embedding optimisation, inversion,
// attention collection, prompt mining, segmentation and assembly; plus the
// benchmark runner, configuration, caches and overlay rendering.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "anyword/dataset.hpp"
#include "anyword/diffusion.hpp"
#include "anyword/embedopt.hpp"
#include "anyword/evalharness.hpp"
#include "anyword/promptmine.hpp"
#include "anyword/segmentor.hpp"
#include "anyword/textgraph.hpp"
#include "anyword/toy.hpp"

namespace anyword::pipeline {

struct BackendSelection {
  // "toy" or "tcp://host:port".
  std::string denoiser = "toy";
  // "mock" or "tcp://host:port".
  std::string segmentor = "mock";
  // "rules" or "llm:<chat-completions url>".
  std::string parser = "rules";
  std::string llm_model = "gpt-4o-mini";
  // "toy" or "none".
  std::string encoder = "toy";
  // Optional low-rank adapter file for the encoder.
  std::string adapter;
  bool operator==(const BackendSelection&) const = default;
};

struct PipelineConfig {
  BackendSelection backends;
  embedopt::OptimizerConfig optimizer;
  std::size_t timesteps = 50;
  double threshold = promptmine::kDefaultThreshold;
  diffusion::Normalization normalization = diffusion::Normalization::kMinMax;
  std::uint64_t seed = 0;
  bool use_pl = true;
  bool use_r1 = true;
  bool use_r2 = true;
  bool use_segmentor = true;
  bool fresh_negatives = false;
  promptmine::NegativeRange background_negatives;
  double segmentor_tolerance = 0.1;
  toy::SceneDenoiserOptions toy;
  // "{labels}" is replaced by the comma-joined label list.
  std::string open_vocab_template = "a photo of {labels}";
  std::size_t stability_variants = 3;
  // Empty keeps the caches in memory only.
  std::string cache_dir;
  // Benchmark workers; 0 uses the OpenMP default.
  std::size_t workers = 0;

  // Throws kInvalidArgument.
  void validate() const;
};

nlohmann::json config_to_json(const PipelineConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);
// ANYWORD_BACKEND_URI, when set, replaces every remote-capable endpoint.
void apply_environment(PipelineConfig& cfg);

// Everything run_pipeline talks to. The denoiser is built per input because
// the checkpoint-free toy is derived from the scene and the parse; remote
// backends ignore both.
struct Backends {
  using DenoiserFactory = std::function<std::shared_ptr<const diffusion::DenoiserBackend>(
      const Image&, const toy::Scene*, const textgraph::ParsedExpression&)>;

  std::shared_ptr<const textgraph::ParserBackend> parser;
  std::shared_ptr<const embedopt::TextEncoder> encoder;
  DenoiserFactory denoiser;
  std::shared_ptr<const segmentor::PromptableSegmentor> segmentor;
};

// Throws kBackendUnavailable, kEncoderUnavailable, kAdapterMismatch,
// kInvalidArgument.
Backends make_backends(const PipelineConfig& cfg);

// Toy denoiser factory: uses the given scene, otherwise estimates one from the
// image and names its objects after the parsed entities.
Backends::DenoiserFactory toy_denoiser_factory(std::shared_ptr<const embedopt::ToyTextEncoder> encoder,
                                               toy::SceneDenoiserOptions options);

// Wraps a segmentor so that at most `limit` calls run at once.
std::shared_ptr<const segmentor::PromptableSegmentor> limit_concurrency(
    std::shared_ptr<const segmentor::PromptableSegmentor> inner, std::size_t limit);

// Content-addressed store for optimised embeddings and attention stacks, in
// memory and optionally on disk as little-endian float64 grids.
class PipelineCache {
 public:
  explicit PipelineCache(std::filesystem::path dir = {});

  std::optional<diffusion::AttentionStack> find_attention(const std::string& key);
  void store_attention(const std::string& key, const diffusion::AttentionStack& stack);
  std::optional<EmbeddingSet> find_embeddings(const std::string& key);
  void store_embeddings(const std::string& key, const EmbeddingSet& embeddings);
  void clear_memory();

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::string, diffusion::AttentionStack> attention_;
  std::map<std::string, EmbeddingSet> embeddings_;
};

void write_attention(const diffusion::AttentionStack& stack, const std::filesystem::path& path);
diffusion::AttentionStack read_attention(const std::filesystem::path& path);

struct PipelineInput {
  Image image;
  std::string text;
  std::optional<toy::Scene> scene;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct Diagnostics {
  std::vector<StageTiming> timings;
  std::string attention_cache_key;
  bool attention_cache_hit = false;
  bool embedding_cache_hit = false;
  std::size_t optimizer_steps = 0;
  std::vector<double> loss_history;
  // Denoiser calls made by this run.
  std::size_t denoiser_calls = 0;
  double reconstruction_error = 0.0;
  std::string denoiser;
  std::string segmentor;
};

struct PipelineResult {
  textgraph::ParsedExpression parsed;
  segmentor::GroundedSegmentation segmentation;
  promptmine::TokenMaps maps;
  Diagnostics diagnostics;
};

// An Error raised inside a named stage, keeping the original code.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), stage + ": " + cause.what(), cause.detail()), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

PipelineResult run_pipeline(const PipelineInput& input, const PipelineConfig& cfg, const Backends& backends,
                            PipelineCache* cache = nullptr);

enum class Task { kGrounded, kReference, kOpenVocab, kStability };
std::string task_name(Task task);
// grounded, reference, openvocab, stability (case-insensitive).
Task parse_task(const std::string& name);

std::string open_vocab_expression(const std::vector<std::string>& labels, const std::string& pattern);

// Per-record outcome retained for inspection.
struct RecordTrace {
  std::string id;
  bool failed = false;
  std::string error;
  std::vector<eval::ScoredPrediction> predictions;
  std::size_t ground_truths = 0;
  std::vector<eval::EvalPair> pairs;
  std::vector<eval::StabilitySample> samples;
};

struct BenchmarkTrace {
  std::vector<RecordTrace> records;
  std::vector<eval::StabilitySample> samples;
};

// Throws kEmptyDataset. Record failures are counted, never fatal.
eval::EvalReport run_benchmark(const std::vector<dataset::DatasetRecord>& records, const PipelineConfig& cfg,
                               Task task, const Backends& backends, PipelineCache* cache = nullptr,
                               BenchmarkTrace* trace = nullptr);

// Per-entity masks in palette order with labels and prompt points (filled
// positives, hollow negatives).
Image render_overlay(const Image& image, const segmentor::GroundedSegmentation& seg);

// JSON of every record: entity id, label, token indices, score, mask size and
// compressed RLE; plus the skip reports.
std::string dump_segmentation(const segmentor::GroundedSegmentation& seg);

}  // namespace anyword::pipeline
