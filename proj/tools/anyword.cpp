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

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "anyword/dataset.hpp"
#include "anyword/pipeline.hpp"
#include "anyword/protocol.hpp"

namespace {

using namespace anyword;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool no_pl = false;
  bool no_r1 = false;
  bool no_r2 = false;
  bool no_segmentor = false;
  std::optional<std::size_t> steps;
  bool fast = false;
  std::optional<double> lr;
  std::string adapter;
  std::string cache_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_flag("--no-pl", o.no_pl, "Skip prompt learning");
  cmd->add_flag("--no-r1", o.no_r1, "Disable positive adjective clustering");
  cmd->add_flag("--no-r2", o.no_r2, "Disable negative mutual-exclusive binding");
  cmd->add_flag("--no-segmentor", o.no_segmentor, "Use upscaled attention masks as output");
  cmd->add_option("--steps", o.steps, "Optimisation steps");
  cmd->add_flag("--fast", o.fast, "Use the short adapter-assisted schedule");
  cmd->add_option("--lr", o.lr, "Learning rate");
  cmd->add_option("--adapter", o.adapter, "Text-encoder adapter file")->check(CLI::ExistingFile);
  cmd->add_option("--cache-dir", o.cache_dir, "Directory for embedding and attention caches");
}

pipeline::PipelineConfig resolve_config(const CommonOptions& o) {
  pipeline::PipelineConfig cfg = o.config.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(o.config);
  pipeline::apply_environment(cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (o.no_pl) cfg.use_pl = false;
  if (o.no_r1) cfg.use_r1 = false;
  if (o.no_r2) cfg.use_r2 = false;
  if (o.no_segmentor) cfg.use_segmentor = false;
  if (o.steps) cfg.optimizer.steps = *o.steps;
  if (o.fast) cfg.optimizer.steps = cfg.optimizer.fast_steps;
  if (o.lr) cfg.optimizer.learning_rate = *o.lr;
  if (!o.adapter.empty()) cfg.backends.adapter = o.adapter;
  if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
  cfg.validate();
  return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

int cmd_segment(const CommonOptions& common, const std::string& image_path, const std::string& text,
                const std::string& scene_path, const std::string& overlay, const std::string& prompts_out,
                const std::string& masks_out, bool timings) {
  const auto cfg = resolve_config(common);
  const auto backends = pipeline::make_backends(cfg);
  pipeline::PipelineInput input;
  input.image = load_image(image_path);
  input.text = text;
  if (!scene_path.empty()) {
    input.scene = dataset::load_scene(scene_path);
  } else if (std::filesystem::exists(dataset::scene_sidecar(image_path))) {
    input.scene = dataset::load_scene(dataset::scene_sidecar(image_path));
  }
  std::optional<pipeline::PipelineCache> cache;
  if (!cfg.cache_dir.empty()) cache.emplace(cfg.cache_dir);
  const auto result = pipeline::run_pipeline(input, cfg, backends, cache ? &*cache : nullptr);
  const auto& seg = result.segmentation;

  for (const auto& r : seg.records) {
    std::printf("%zu\t%-24s\tarea=%zu\tscore=%.4f\tpos=%zu\tneg=%zu\n", r.entity_id, r.label.c_str(),
                r.mask.count(), r.score, r.prompt.positives.size(), r.prompt.negatives.size());
  }
  for (const auto& s : seg.skipped) std::printf("skipped %zu\t%s\n", s.entity_id, s.message.c_str());

  if (!overlay.empty()) save_image(pipeline::render_overlay(input.image, seg), overlay);
  if (!prompts_out.empty()) {
    std::vector<promptmine::MaskPrompt> prompts;
    for (const auto& r : seg.records) prompts.push_back(r.prompt);
    write_text(prompts_out, promptmine::dump_prompts(prompts, cfg.seed));
  }
  if (!masks_out.empty()) write_text(masks_out, pipeline::dump_segmentation(seg));
  if (timings) {
    const auto& d = result.diagnostics;
    for (const auto& t : d.timings) std::fprintf(stderr, "%-10s %9.4f s\n", t.stage.c_str(), t.seconds);
    std::fprintf(stderr, "denoiser calls %zu, optimiser steps %zu, attention key %s%s\n", d.denoiser_calls,
                 d.optimizer_steps, d.attention_cache_key.c_str(), d.attention_cache_hit ? " (cached)" : "");
  }
  return 0;
}

int cmd_bench(const CommonOptions& common, const std::string& spec, const std::string& task_name,
              const std::string& report_out, const std::string& per_image_out, std::size_t workers, bool quiet) {
  auto cfg = resolve_config(common);
  if (workers) cfg.workers = workers;
  const auto records = dataset::load_dataset(spec);
  const auto task = pipeline::parse_task(task_name);
  const auto backends = pipeline::make_backends(cfg);
  pipeline::PipelineCache cache(cfg.cache_dir);
  const auto report = pipeline::run_benchmark(records, cfg, task, backends, &cache);
  if (!quiet) std::cout << eval::report_table(report);
  for (const auto& m : report.failure_messages) std::cerr << "failed " << m << "\n";
  if (!report_out.empty()) write_text(report_out, eval::report_json(report));
  if (!per_image_out.empty()) write_text(per_image_out, eval::per_image_csv(report));
  return 0;
}

int cmd_adapt(const std::string& spec, std::size_t rank, std::size_t steps, double lr, std::uint64_t seed,
              const std::string& out) {
  const auto records = dataset::load_dataset(spec);
  std::vector<embedopt::AdaptSample> samples;
  for (const auto& r : records) {
    const std::filesystem::path image = r.image ? std::filesystem::path{} : r.image_path;
    for (const auto& e : r.expressions) samples.push_back({image, e});
    for (const auto& g : r.gt) samples.push_back({image, g.phrase});
  }
  embedopt::ToyTextEncoder encoder;
  embedopt::AdaptConfig cfg;
  cfg.rank = rank;
  cfg.steps = steps;
  cfg.learning_rate = lr;
  cfg.seed = seed;
  embedopt::save_adapter(embedopt::fast_adapt_text_encoder(encoder, samples, cfg), out);
  std::printf("adapter rank %zu from %zu samples written to %s\n", rank, samples.size(), out.c_str());
  return 0;
}

int cmd_synth(const dataset::SyntheticOptions& opt, const std::string& dir) {
  const auto index = dataset::export_dataset(dataset::synthetic_dataset(opt), dir);
  std::printf("%s\n", index.string().c_str());
  return 0;
}

std::atomic<protocol::TcpServer*> g_server{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

int cmd_serve(const std::string& host, std::uint16_t port, double tolerance, const std::string& scene_path,
              const std::string& text, const std::string& image_path, std::uint64_t seed) {
  const auto seg_handler = protocol::make_segmentor_handler(std::make_shared<segmentor::MockSegmentor>(tolerance));
  protocol::Handler den_handler;
  if (!text.empty()) {
    auto encoder = std::make_shared<embedopt::ToyTextEncoder>();
    const textgraph::RuleParser parser;
    const auto parsed = textgraph::parse_expression(text, parser);
    toy::SceneDenoiserOptions opt;
    opt.seed = seed;
    Image image;
    std::optional<toy::Scene> scene;
    if (!scene_path.empty()) scene = dataset::load_scene(scene_path);
    if (!image_path.empty()) image = load_image(image_path);
    if (!scene && image.empty()) throw Error(ErrorCode::kInvalidArgument, "the denoiser needs --scene or --image");
    den_handler = protocol::make_denoiser_handler(
        pipeline::toy_denoiser_factory(encoder, opt)(image, scene ? &*scene : nullptr, parsed));
  }
  protocol::Handler handler = [seg_handler, den_handler](const protocol::Frame& f) {
    if (f.type == protocol::MessageType::kDenoiseRequest) {
      if (!den_handler) throw Error(ErrorCode::kBackendUnavailable, "no denoiser is served here");
      return den_handler(f);
    }
    return seg_handler(f);
  };
  protocol::TcpServer server(handler, port, host);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::printf("listening on tcp://%s:%u\n", host.c_str(), static_cast<unsigned>(server.port()));
  std::fflush(stdout);
  server.serve();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-vocabulary grounded segmentation from diffusion attention"};
  app.require_subcommand(1);

  CommonOptions seg_common;
  std::string image, text, scene, overlay, prompts_out, masks_out;
  bool timings = false;
  auto* seg = app.add_subcommand("segment", "Segment the entities of a caption in one image");
  seg->add_option("--image", image, "Input image")->required()->check(CLI::ExistingFile);
  seg->add_option("--text", text, "Caption or referring expression")->required();
  seg->add_option("--scene", scene, "Scene description for the toy denoiser")->check(CLI::ExistingFile);
  seg->add_option("--overlay", overlay, "Write an overlay PNG");
  seg->add_option("--dump-prompts", prompts_out, "Write the mined point prompts as JSON");
  seg->add_option("--masks", masks_out, "Write the masks as JSON");
  seg->add_flag("--timings", timings, "Print stage timings to stderr");
  add_common(seg, seg_common);

  CommonOptions bench_common;
  std::string spec, task = "grounded", report_out, per_image_out;
  std::size_t workers = 0;
  bool quiet = false;
  auto* bench = app.add_subcommand("bench", "Run a benchmark and report its metrics");
  bench->add_option("--dataset", spec, "synthetic:N[:SEED] or native|coco|refcoco|grounded:PATH[:ROOT]")->required();
  bench->add_option("--task", task, "grounded, reference, openvocab or stability")
      ->check(CLI::IsMember({"grounded", "reference", "openvocab", "stability"}, CLI::ignore_case));
  bench->add_option("--report", report_out, "Write the report as JSON");
  bench->add_option("--per-image", per_image_out, "Write per-image stability rows as CSV");
  bench->add_option("--workers", workers, "Parallel records");
  bench->add_flag("--quiet", quiet, "Do not print the table");
  add_common(bench, bench_common);

  std::string samples, adapter_out;
  std::size_t rank = 16, adapt_steps = 1100;
  double adapt_lr = 0.05;
  std::uint64_t adapt_seed = 0;
  auto* adapt = app.add_subcommand("adapt", "Train a low-rank text-encoder adapter");
  adapt->add_option("--samples", samples, "Dataset spec supplying image-caption pairs")->required();
  adapt->add_option("--rank", rank, "Adapter rank")->check(CLI::PositiveNumber);
  adapt->add_option("--steps", adapt_steps, "Training steps")->check(CLI::PositiveNumber);
  adapt->add_option("--lr", adapt_lr, "Learning rate")->check(CLI::PositiveNumber);
  adapt->add_option("--seed", adapt_seed, "Seed");
  adapt->add_option("--out", adapter_out, "Adapter file")->required();

  dataset::SyntheticOptions synth_opt;
  std::string synth_dir;
  auto* synth = app.add_subcommand("synth", "Export a synthetic dataset with its ground truth");
  synth->add_option("--count", synth_opt.count, "Scenes")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_opt.seed, "Seed");
  synth->add_option("--max-objects", synth_opt.max_objects, "Objects per scene")->check(CLI::Range(1, 8));
  synth->add_option("--variants", synth_opt.variants, "Captions per scene")->check(CLI::PositiveNumber);
  synth->add_option("--out", synth_dir, "Output directory")->required();

  std::string host = "127.0.0.1", serve_scene, serve_text, serve_image;
  std::uint16_t port = 7878;
  double tolerance = 0.1;
  std::uint64_t serve_seed = 0;
  auto* serve = app.add_subcommand("serve", "Serve the mock segmentor and optionally a toy denoiser over TCP");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port, 0 picks one");
  serve->add_option("--tolerance", tolerance, "Mock segmentor colour tolerance");
  serve->add_option("--text", serve_text, "Caption the served denoiser is built for");
  serve->add_option("--scene", serve_scene, "Scene the served denoiser is built from")->check(CLI::ExistingFile);
  serve->add_option("--image", serve_image, "Image to estimate a scene from")->check(CLI::ExistingFile);
  serve->add_option("--seed", serve_seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*seg) return cmd_segment(seg_common, image, text, scene, overlay, prompts_out, masks_out, timings);
    if (*bench) return cmd_bench(bench_common, spec, task, report_out, per_image_out, workers, quiet);
    if (*adapt) return cmd_adapt(samples, rank, adapt_steps, adapt_lr, adapt_seed, adapter_out);
    if (*synth) return cmd_synth(synth_opt, synth_dir);
    if (*serve) return cmd_serve(host, port, tolerance, serve_scene, serve_text, serve_image, serve_seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
