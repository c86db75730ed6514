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

#include <cstdlib>
#include <fstream>
#include <set>

#include "anyword/pipeline.hpp"
#include "anyword/protocol.hpp"

namespace anyword::pipeline {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw Error(ErrorCode::kInvalidArgument, "unknown config key " + where + "." + key);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "config key " + where + "." + key + ": " + e.what());
  }
}

bool remote(const std::string& s) { return s.rfind("tcp://", 0) == 0; }

}  // namespace

void PipelineConfig::validate() const {
  optimizer.validate();
  if (timesteps < 1) throw Error(ErrorCode::kInvalidArgument, "timesteps must be positive");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must lie in (0, 1]");
  if (background_negatives.min > background_negatives.max) {
    throw Error(ErrorCode::kInvalidArgument, "background negative range is empty");
  }
  if (!(segmentor_tolerance >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "segmentor tolerance must be >= 0");
  if (stability_variants < 1) throw Error(ErrorCode::kInvalidArgument, "stability needs at least one caption");
  if (open_vocab_template.find("{labels}") == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "open-vocabulary template lacks {labels}");
  }
  if (toy.channels == 0 || toy.rows == 0 || toy.cols == 0) {
    throw Error(ErrorCode::kInvalidArgument, "latent dimensions must be positive");
  }
  if (backends.denoiser != "toy" && !remote(backends.denoiser)) {
    throw Error(ErrorCode::kInvalidArgument, "unknown denoiser backend " + backends.denoiser);
  }
  if (backends.segmentor != "mock" && !remote(backends.segmentor)) {
    throw Error(ErrorCode::kInvalidArgument, "unknown segmentor backend " + backends.segmentor);
  }
  if (backends.parser != "rules" && backends.parser.rfind("llm:", 0) != 0) {
    throw Error(ErrorCode::kInvalidArgument, "unknown parser backend " + backends.parser);
  }
  if (backends.encoder != "toy" && backends.encoder != "none") {
    throw Error(ErrorCode::kInvalidArgument, "unknown encoder backend " + backends.encoder);
  }
}

json config_to_json(const PipelineConfig& cfg) {
  const auto& o = cfg.optimizer;
  const auto& b = cfg.backends;
  return {
      {"backends",
       {{"denoiser", b.denoiser},
        {"segmentor", b.segmentor},
        {"parser", b.parser},
        {"llm_model", b.llm_model},
        {"encoder", b.encoder},
        {"adapter", b.adapter}}},
      {"optimizer",
       {{"learning_rate", o.learning_rate},
        {"steps", o.steps},
        {"fast_steps", o.fast_steps},
        {"batch_size", o.batch_size},
        {"tau", o.tau},
        {"gamma", o.gamma},
        {"momentum", o.momentum},
        {"adam", o.adam},
        {"finite_difference_step", o.finite_difference_step}}},
      {"timesteps", cfg.timesteps},
      {"threshold", cfg.threshold},
      {"normalization", cfg.normalization == diffusion::Normalization::kMinMax ? "minmax" : "raw"},
      {"seed", cfg.seed},
      {"ablation", {{"pl", cfg.use_pl}, {"r1", cfg.use_r1}, {"r2", cfg.use_r2}, {"segmentor", cfg.use_segmentor}}},
      {"fresh_negatives", cfg.fresh_negatives},
      {"background_negatives", {cfg.background_negatives.min, cfg.background_negatives.max}},
      {"segmentor_tolerance", cfg.segmentor_tolerance},
      {"toy",
       {{"channels", cfg.toy.channels},
        {"rows", cfg.toy.rows},
        {"cols", cfg.toy.cols},
        {"mix", cfg.toy.mix},
        {"projection_scale", cfg.toy.projection_scale},
        {"logit_scale", cfg.toy.logit_scale},
        {"jitter", cfg.toy.jitter}}},
      {"open_vocab_template", cfg.open_vocab_template},
      {"stability_variants", cfg.stability_variants},
      {"cache_dir", cfg.cache_dir},
      {"workers", cfg.workers},
  };
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig cfg;
  reject_unknown(j,
                 {"backends", "optimizer", "timesteps", "threshold", "normalization", "seed", "ablation",
                  "fresh_negatives", "background_negatives", "segmentor_tolerance", "toy", "open_vocab_template",
                  "stability_variants", "cache_dir", "workers"},
                 "config");
  if (j.contains("backends")) {
    const auto& b = j["backends"];
    reject_unknown(b, {"denoiser", "segmentor", "parser", "llm_model", "encoder", "adapter"}, "backends");
    read(b, "denoiser", cfg.backends.denoiser, "backends");
    read(b, "segmentor", cfg.backends.segmentor, "backends");
    read(b, "parser", cfg.backends.parser, "backends");
    read(b, "llm_model", cfg.backends.llm_model, "backends");
    read(b, "encoder", cfg.backends.encoder, "backends");
    read(b, "adapter", cfg.backends.adapter, "backends");
  }
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    reject_unknown(o,
                   {"learning_rate", "steps", "fast_steps", "batch_size", "tau", "gamma", "momentum", "adam",
                    "finite_difference_step"},
                   "optimizer");
    read(o, "learning_rate", cfg.optimizer.learning_rate, "optimizer");
    read(o, "steps", cfg.optimizer.steps, "optimizer");
    read(o, "fast_steps", cfg.optimizer.fast_steps, "optimizer");
    read(o, "batch_size", cfg.optimizer.batch_size, "optimizer");
    read(o, "tau", cfg.optimizer.tau, "optimizer");
    read(o, "gamma", cfg.optimizer.gamma, "optimizer");
    read(o, "momentum", cfg.optimizer.momentum, "optimizer");
    read(o, "adam", cfg.optimizer.adam, "optimizer");
    read(o, "finite_difference_step", cfg.optimizer.finite_difference_step, "optimizer");
  }
  read(j, "timesteps", cfg.timesteps, "config");
  read(j, "threshold", cfg.threshold, "config");
  if (j.contains("normalization")) {
    std::string n;
    read(j, "normalization", n, "config");
    if (n == "minmax") {
      cfg.normalization = diffusion::Normalization::kMinMax;
    } else if (n == "raw") {
      cfg.normalization = diffusion::Normalization::kRaw;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "normalization must be minmax or raw");
    }
  }
  read(j, "seed", cfg.seed, "config");
  if (j.contains("ablation")) {
    const auto& a = j["ablation"];
    reject_unknown(a, {"pl", "r1", "r2", "segmentor"}, "ablation");
    read(a, "pl", cfg.use_pl, "ablation");
    read(a, "r1", cfg.use_r1, "ablation");
    read(a, "r2", cfg.use_r2, "ablation");
    read(a, "segmentor", cfg.use_segmentor, "ablation");
  }
  read(j, "fresh_negatives", cfg.fresh_negatives, "config");
  if (j.contains("background_negatives")) {
    std::vector<std::size_t> range;
    read(j, "background_negatives", range, "config");
    if (range.size() != 2) throw Error(ErrorCode::kInvalidArgument, "background_negatives must be [min, max]");
    cfg.background_negatives = {range[0], range[1]};
  }
  read(j, "segmentor_tolerance", cfg.segmentor_tolerance, "config");
  if (j.contains("toy")) {
    const auto& t = j["toy"];
    reject_unknown(t, {"channels", "rows", "cols", "mix", "projection_scale", "logit_scale", "jitter"}, "toy");
    read(t, "channels", cfg.toy.channels, "toy");
    read(t, "rows", cfg.toy.rows, "toy");
    read(t, "cols", cfg.toy.cols, "toy");
    read(t, "mix", cfg.toy.mix, "toy");
    read(t, "projection_scale", cfg.toy.projection_scale, "toy");
    read(t, "logit_scale", cfg.toy.logit_scale, "toy");
    read(t, "jitter", cfg.toy.jitter, "toy");
  }
  read(j, "open_vocab_template", cfg.open_vocab_template, "config");
  read(j, "stability_variants", cfg.stability_variants, "config");
  read(j, "cache_dir", cfg.cache_dir, "config");
  read(j, "workers", cfg.workers, "config");
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_environment(PipelineConfig& cfg) {
  const char* uri = std::getenv("ANYWORD_BACKEND_URI");
  if (!uri || !*uri) return;
  protocol::parse_tcp_uri(uri);
  cfg.backends.denoiser = uri;
  cfg.backends.segmentor = uri;
}

}  // namespace anyword::pipeline
