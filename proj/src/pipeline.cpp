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

#include "anyword/pipeline.hpp"

#include <bit>
#include <chrono>
#include <condition_variable>
#include <fstream>

#include "anyword/hash.hpp"
#include "anyword/protocol.hpp"
#include "anyword/rle.hpp"

namespace anyword::pipeline {
namespace {

class CountingDenoiser : public diffusion::DenoiserBackend {
 public:
  explicit CountingDenoiser(std::shared_ptr<const diffusion::DenoiserBackend> inner) : inner_(std::move(inner)) {}
  diffusion::DenoiserOutput predict(const Latent& z, std::size_t t, const EmbeddingSet& v) const override {
    ++calls_;
    return inner_->predict(z, t, v);
  }
  Latent predict_noise(const Latent& z, std::size_t t, const EmbeddingSet& v) const override {
    ++calls_;
    return inner_->predict_noise(z, t, v);
  }
  std::optional<std::vector<std::vector<double>>> noise_loss_gradient(const Latent& z, std::size_t t,
                                                                      const EmbeddingSet& v,
                                                                      const Latent& target) const override {
    ++calls_;
    return inner_->noise_loss_gradient(z, t, v, target);
  }
  GridShape attention_resolution() const override { return inner_->attention_resolution(); }
  std::optional<std::size_t> timesteps() const override { return inner_->timesteps(); }
  bool shareable() const override { return inner_->shareable(); }
  std::string name() const override { return inner_->name(); }
  std::size_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<const diffusion::DenoiserBackend> inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

class LimitedSegmentor : public segmentor::PromptableSegmentor {
 public:
  LimitedSegmentor(std::shared_ptr<const segmentor::PromptableSegmentor> inner, std::size_t limit)
      : inner_(std::move(inner)), limit_(limit) {}
  segmentor::ScoredMask run(const Image& image, const promptmine::MaskPrompt& prompt) const override {
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return active_ < limit_; });
      ++active_;
    }
    struct Release {
      const LimitedSegmentor* self;
      ~Release() {
        std::lock_guard lock(self->mutex_);
        --self->active_;
        self->cv_.notify_one();
      }
    } release{this};
    return inner_->run(image, prompt);
  }
  segmentor::SegmentorInfo info() const override {
    auto i = inner_->info();
    i.max_concurrency = limit_;
    return i;
  }

 private:
  std::shared_ptr<const segmentor::PromptableSegmentor> inner_;
  std::size_t limit_;
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  mutable std::size_t active_ = 0;
};

class UnavailableEncoder : public embedopt::TextEncoder {
 public:
  bool available() const override { return false; }
  std::size_t width() const override { return 0; }
  std::optional<std::vector<double>> embed(std::string_view) const override { return std::nullopt; }
  double embedding_scale() const override { return 0.0; }
  std::string fingerprint() const override { return "none"; }
};

constexpr char kAttentionMagic[8] = {'A', 'W', 'A', 'T', 'T', 'N', '\0', '\1'};
constexpr char kEmbeddingMagic[8] = {'A', 'W', 'E', 'M', 'B', 'D', '\0', '\1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorCode::kIoError, "cache file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void check_magic(std::istream& in, const char (&magic)[8], const std::filesystem::path& path) {
  char m[8];
  if (!in.read(m, 8) || !std::equal(m, m + 8, magic)) throw Error(ErrorCode::kIoError, "bad cache file " + path.string());
}

template <typename Fn>
void write_atomically(const std::filesystem::path& path, Fn&& body) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp);
    body(out);
    if (!out) throw Error(ErrorCode::kIoError, "write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void write_embeddings(const EmbeddingSet& v, const std::filesystem::path& path) {
  write_atomically(path, [&](std::ostream& out) {
    out.write(kEmbeddingMagic, 8);
    put_u64(out, v.width);
    put_u64(out, v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      put_u64(out, k < v.trainable.size() && v.trainable[k] ? 1 : 0);
      put_u64(out, v.vectors[k].size());
      for (double x : v.vectors[k]) put_f64(out, x);
    }
  });
}

EmbeddingSet read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  check_magic(in, kEmbeddingMagic, path);
  EmbeddingSet v;
  v.width = get_u64(in);
  const std::uint64_t n = get_u64(in);
  for (std::uint64_t k = 0; k < n; ++k) {
    v.trainable.push_back(get_u64(in) != 0);
    std::vector<double> row(get_u64(in));
    for (auto& x : row) x = get_f64(in);
    v.vectors.push_back(std::move(row));
  }
  return v;
}

std::string input_digest(const PipelineInput& input, const std::string& denoiser, const PipelineConfig& cfg,
                         const embedopt::TextEncoder& encoder) {
  Sha256 h;
  h.update("input");
  h.update_u64(input.image.width).update_u64(input.image.height).update_u64(input.image.channels);
  for (float p : input.image.pixels) h.update_f64(p);
  h.update(textgraph::normalize_whitespace(input.text));
  h.update(input.scene ? dataset::scene_to_json(*input.scene).dump() : std::string());
  h.update(denoiser);
  h.update(encoder.fingerprint());
  h.update(config_to_json(cfg)["toy"].dump());
  h.update_u64(cfg.seed);
  return h.hex_digest();
}

class StageClock {
 public:
  explicit StageClock(Diagnostics& d) : diagnostics_(d) {}

  template <typename Fn>
  auto run(const char* stage, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto record = [&] {
      diagnostics_.timings.push_back(
          {stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    };
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record();
      } else {
        auto out = fn();
        record();
        return out;
      }
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(stage, e);
    } catch (const std::exception& e) {
      throw StageError(stage, Error(ErrorCode::kBackendFailure, e.what()));
    }
  }

 private:
  Diagnostics& diagnostics_;
};

}  // namespace

Backends::DenoiserFactory toy_denoiser_factory(std::shared_ptr<const embedopt::ToyTextEncoder> encoder,
                                               toy::SceneDenoiserOptions options) {
  return [encoder, options](const Image& image, const toy::Scene* scene,
                            const textgraph::ParsedExpression& parsed) -> std::shared_ptr<const diffusion::DenoiserBackend> {
    toy::Scene s;
    if (scene) {
      s = *scene;
    } else {
      s = dataset::estimate_scene(image);
      dataset::bind_scene_nouns(s, parsed);
    }
    return std::make_shared<toy::AffineToyDenoiser>(toy::scene_config(s, parsed, *encoder, options));
  };
}

std::shared_ptr<const segmentor::PromptableSegmentor> limit_concurrency(
    std::shared_ptr<const segmentor::PromptableSegmentor> inner, std::size_t limit) {
  if (limit == 0) return inner;
  return std::make_shared<LimitedSegmentor>(std::move(inner), limit);
}

Backends make_backends(const PipelineConfig& cfg) {
  cfg.validate();
  Backends b;
  const auto& sel = cfg.backends;
  if (sel.parser == "rules") {
    b.parser = std::make_shared<textgraph::RuleParser>();
  } else {
    b.parser = std::make_shared<textgraph::LlmParser>(textgraph::make_http_llm_transport(sel.parser.substr(4), sel.llm_model));
  }

  auto toy_encoder = std::make_shared<embedopt::ToyTextEncoder>();
  if (!sel.adapter.empty()) toy_encoder->install_adapter(embedopt::load_adapter(sel.adapter));
  if (sel.encoder == "toy") {
    b.encoder = toy_encoder;
  } else {
    b.encoder = std::make_shared<UnavailableEncoder>();
  }

  if (sel.denoiser == "toy") {
    toy::SceneDenoiserOptions opt = cfg.toy;
    opt.seed = cfg.seed;
    b.denoiser = toy_denoiser_factory(toy_encoder, opt);
  } else {
    const auto [host, port] = protocol::parse_tcp_uri(sel.denoiser);
    std::shared_ptr<const diffusion::DenoiserBackend> remote = std::make_shared<protocol::RemoteDenoiser>(
        std::make_shared<protocol::TcpTransport>(host, port), GridShape{cfg.toy.rows, cfg.toy.cols});
    b.denoiser = [remote](const Image&, const toy::Scene*, const textgraph::ParsedExpression&) { return remote; };
  }

  std::shared_ptr<const segmentor::PromptableSegmentor> seg;
  if (sel.segmentor == "mock") {
    seg = std::make_shared<segmentor::MockSegmentor>(cfg.segmentor_tolerance);
  } else {
    const auto [host, port] = protocol::parse_tcp_uri(sel.segmentor);
    seg = std::make_shared<protocol::RemoteSegmentor>(std::make_shared<protocol::TcpTransport>(host, port));
  }
  b.segmentor = limit_concurrency(seg, seg->info().max_concurrency);
  return b;
}

PipelineCache::PipelineCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::optional<diffusion::AttentionStack> PipelineCache::find_attention(const std::string& key) {
  {
    std::lock_guard lock(mutex_);
    auto it = attention_.find(key);
    if (it != attention_.end()) return it->second;
  }
  if (dir_.empty()) return std::nullopt;
  const auto path = dir_ / (key + ".att");
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto stack = read_attention(path);
  std::lock_guard lock(mutex_);
  attention_.emplace(key, stack);
  return stack;
}

void PipelineCache::store_attention(const std::string& key, const diffusion::AttentionStack& stack) {
  {
    std::lock_guard lock(mutex_);
    attention_[key] = stack;
  }
  if (!dir_.empty()) write_attention(stack, dir_ / (key + ".att"));
}

std::optional<EmbeddingSet> PipelineCache::find_embeddings(const std::string& key) {
  {
    std::lock_guard lock(mutex_);
    auto it = embeddings_.find(key);
    if (it != embeddings_.end()) return it->second;
  }
  if (dir_.empty()) return std::nullopt;
  const auto path = dir_ / (key + ".emb");
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto v = read_embeddings(path);
  std::lock_guard lock(mutex_);
  embeddings_.emplace(key, v);
  return v;
}

void PipelineCache::store_embeddings(const std::string& key, const EmbeddingSet& embeddings) {
  {
    std::lock_guard lock(mutex_);
    embeddings_[key] = embeddings;
  }
  if (!dir_.empty()) write_embeddings(embeddings, dir_ / (key + ".emb"));
}

void PipelineCache::clear_memory() {
  std::lock_guard lock(mutex_);
  attention_.clear();
  embeddings_.clear();
}

void write_attention(const diffusion::AttentionStack& stack, const std::filesystem::path& path) {
  write_atomically(path, [&](std::ostream& out) {
    out.write(kAttentionMagic, 8);
    put_u64(out, stack.timesteps);
    put_u64(out, stack.token_count);
    put_u64(out, stack.shape.rows);
    put_u64(out, stack.shape.cols);
    put_u64(out, stack.maps.size());
    for (const auto& g : stack.maps) {
      if (g.shape() != stack.shape) throw Error(ErrorCode::kShapeMismatch, "attention grid shape differs from stack");
      for (double x : g) put_f64(out, x);
    }
  });
}

diffusion::AttentionStack read_attention(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  check_magic(in, kAttentionMagic, path);
  diffusion::AttentionStack s;
  s.timesteps = get_u64(in);
  s.token_count = get_u64(in);
  s.shape.rows = get_u64(in);
  s.shape.cols = get_u64(in);
  const std::uint64_t n = get_u64(in);
  if (n != s.timesteps * s.token_count) throw Error(ErrorCode::kIoError, "bad attention cache " + path.string());
  for (std::uint64_t i = 0; i < n; ++i) {
    RealGrid g(s.shape.rows, s.shape.cols);
    for (auto& x : g) x = get_f64(in);
    s.maps.push_back(std::move(g));
  }
  return s;
}

PipelineResult run_pipeline(const PipelineInput& input, const PipelineConfig& cfg, const Backends& backends,
                            PipelineCache* cache) {
  PipelineResult result;
  Diagnostics& diag = result.diagnostics;
  StageClock clock(diag);

  clock.run("config", [&] {
    cfg.validate();
    if (!backends.parser || !backends.encoder || !backends.denoiser || !backends.segmentor) {
      throw Error(ErrorCode::kBackendUnavailable, "backend set is incomplete");
    }
    if (input.image.empty()) throw Error(ErrorCode::kInvalidArgument, "empty image");
  });
  result.parsed = clock.run("parse", [&] { return textgraph::parse_expression(input.text, *backends.parser); });
  const auto& parsed = result.parsed;
  EmbeddingSet v = clock.run("embed", [&] { return embedopt::init_embeddings(parsed, *backends.encoder, cfg.seed); });
  const Latent z0 =
      clock.run("encode", [&] { return toy::encode_image(input.image, cfg.toy.channels, cfg.toy.rows, cfg.toy.cols); });
  auto backend = clock.run("denoiser", [&] {
    auto d = backends.denoiser(input.image, input.scene ? &*input.scene : nullptr, parsed);
    if (!d) throw Error(ErrorCode::kBackendUnavailable, "denoiser factory returned nothing");
    return std::make_shared<CountingDenoiser>(std::move(d));
  });
  diag.denoiser = backend->name();
  diag.segmentor = backends.segmentor->info().name;
  const auto schedule = diffusion::NoiseSchedule::scaled_linear(cfg.timesteps);
  const std::string digest = input_digest(input, backend->name(), cfg, *backends.encoder);

  if (cfg.use_pl) {
    v = clock.run("optimize", [&] {
      embedopt::OptimizerConfig opt = cfg.optimizer;
      opt.seed = derive_seed(cfg.seed, 0x0e0);
      const std::size_t steps = embedopt::effective_steps(opt, *backends.encoder);
      diag.optimizer_steps = steps;
      Sha256 h;
      h.update("embeddings").update(digest).update(v.fingerprint());
      h.update(config_to_json(cfg)["optimizer"].dump()).update_u64(steps).update_u64(opt.seed);
      for (double a : schedule.alphas) h.update_f64(a);
      const std::string key = h.hex_digest();
      if (cache) {
        if (auto hit = cache->find_embeddings(key)) {
          diag.embedding_cache_hit = true;
          return *hit;
        }
      }
      auto out = embedopt::optimize_embeddings(z0, v, schedule, *backend, opt, steps);
      diag.loss_history = std::move(out.loss_history);
      if (cache) cache->store_embeddings(key, out.embeddings);
      return out.embeddings;
    });
  }

  {
    Sha256 h;
    h.update("attention").update(digest).update(v.fingerprint());
    for (double a : schedule.alphas) h.update_f64(a);
    diag.attention_cache_key = h.hex_digest();
  }
  std::optional<diffusion::AttentionStack> stack;
  if (cache) {
    stack = cache->find_attention(diag.attention_cache_key);
    diag.attention_cache_hit = stack.has_value();
  }
  if (!stack) {
    const auto chain = clock.run("invert", [&] {
      auto inv = diffusion::invert(z0, schedule, v, *backend);
      const auto targets = diffusion::inversion_targets(z0, inv);
      const auto landed = diffusion::single_step_predictions(z0, inv, schedule, v, *backend);
      return std::make_pair(std::move(inv), diffusion::direct_inversion_offsets(targets, landed));
    });
    auto denoised = clock.run("denoise", [&] {
      return diffusion::denoise_collect(chain.first.back(), v, schedule, *backend, &chain.second);
    });
    diag.reconstruction_error = max_abs_diff(denoised.reconstruction, z0);
    stack = std::move(denoised.stack);
    if (cache) cache->store_attention(diag.attention_cache_key, *stack);
  }

  result.maps = clock.run("attention", [&] {
    promptmine::TokenMaps maps;
    for (std::size_t token : parsed.concept_tokens()) {
      maps.emplace(token, diffusion::average_attention(*stack, token, cfg.normalization));
    }
    return maps;
  });

  auto mining = clock.run("prompts", [&] {
    Rng rng(derive_seed(cfg.seed, 0x9a0));
    promptmine::MiningOptions opt;
    opt.threshold = cfg.threshold;
    opt.use_r1 = cfg.use_r1;
    opt.use_r2 = cfg.use_r2;
    opt.fresh_negatives = cfg.fresh_negatives;
    opt.background = cfg.background_negatives;
    return promptmine::build_mask_prompts(parsed, result.maps, input.image.size(), rng, opt);
  });

  std::map<std::size_t, segmentor::ScoredMask> masks;
  std::vector<promptmine::MaskPrompt> prompted;
  clock.run("segment", [&] {
    for (const auto& p : mining.prompts) {
      if (!cfg.use_segmentor) {
        masks[p.entity_id] = {upscale_to_image(mining.root_masks.at(p.entity_id), input.image.size()), 1.0};
        prompted.push_back(p);
        continue;
      }
      try {
        masks[p.entity_id] = segmentor::segment(input.image, p, *backends.segmentor);
        prompted.push_back(p);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInvalidPrompt) throw;
        mining.skipped.push_back({p.entity_id, p.label, e.code(), e.what()});
      }
    }
  });
  result.segmentation = clock.run("assemble", [&] {
    auto skipped = mining.skipped;
    std::stable_sort(skipped.begin(), skipped.end(),
                     [](const auto& a, const auto& b) { return a.entity_id < b.entity_id; });
    return segmentor::assemble_grounded(masks, prompted, parsed, std::move(skipped));
  });
  diag.denoiser_calls = backend->calls();
  return result;
}

std::string dump_segmentation(const segmentor::GroundedSegmentation& seg) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : seg.records) {
    records.push_back({{"entity_id", r.entity_id},
                       {"label", r.label},
                       {"token_indices", r.token_indices},
                       {"score", r.score},
                       {"size", {r.mask.rows(), r.mask.cols()}},
                       {"counts", rle::compress(rle::encode(r.mask))}});
  }
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : seg.skipped) {
    skipped.push_back({{"entity_id", s.entity_id},
                       {"label", s.label},
                       {"code", std::string(error_code_name(s.code))},
                       {"message", s.message}});
  }
  return nlohmann::json{{"records", records}, {"skipped", skipped}}.dump(2);
}

}  // namespace anyword::pipeline
