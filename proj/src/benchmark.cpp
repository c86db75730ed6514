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

#include <omp.h>

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "anyword/pipeline.hpp"

namespace anyword::pipeline {
namespace {

std::optional<toy::Scene> record_scene(const dataset::DatasetRecord& rec) {
  if (rec.scene) return rec.scene;
  if (rec.image_path.empty()) return std::nullopt;
  const auto sidecar = dataset::scene_sidecar(rec.image_path);
  if (std::filesystem::exists(sidecar)) return dataset::load_scene(sidecar);
  return std::nullopt;
}

std::vector<std::pair<std::string, BinaryMask>> decode_gt(const dataset::DatasetRecord& rec) {
  std::vector<std::pair<std::string, BinaryMask>> out;
  for (const auto& g : rec.gt) out.emplace_back(g.phrase, g.mask.decode());
  return out;
}

std::vector<std::string> labels_of(const dataset::DatasetRecord& rec) {
  std::vector<std::string> labels;
  for (const auto& g : rec.gt) {
    if (std::find(labels.begin(), labels.end(), g.phrase) == labels.end()) labels.push_back(g.phrase);
  }
  return labels;
}

// Predictions scored against the optimal one-to-one matching.
void score_matched(const segmentor::GroundedSegmentation& seg,
                   const std::vector<std::pair<std::string, BinaryMask>>& gts, RecordTrace& tr) {
  const auto assignment = eval::cross_match(seg, gts);
  std::vector<eval::ScoredPrediction> preds(seg.records.size());
  for (std::size_t i = 0; i < seg.records.size(); ++i) preds[i].score = seg.records[i].score;
  for (const auto& m : assignment.matches) {
    preds[m.prediction].iou = m.iou;
    preds[m.prediction].matched = true;
  }
  tr.predictions.insert(tr.predictions.end(), preds.begin(), preds.end());
  tr.ground_truths += gts.size();
}

// Matched IoU mass shared out over every prediction and ground truth.
double caption_iou(const segmentor::GroundedSegmentation& seg,
                   const std::vector<std::pair<std::string, BinaryMask>>& gts) {
  const std::size_t n = std::max(seg.records.size(), gts.size());
  if (n == 0) return 1.0;
  return eval::cross_match(seg, gts).total_iou() / static_cast<double>(n);
}

void evaluate_record(const dataset::DatasetRecord& rec, const PipelineConfig& cfg, Task task,
                     const Backends& backends, PipelineCache* cache, RecordTrace& tr) {
  PipelineInput input;
  input.image = rec.load_image();
  input.scene = record_scene(rec);
  const auto gts = decode_gt(rec);
  auto run = [&](const std::string& text) {
    input.text = text;
    return run_pipeline(input, cfg, backends, cache);
  };
  auto first_expression = [&] {
    if (!rec.expressions.empty()) return rec.expressions.front();
    return open_vocab_expression(labels_of(rec), cfg.open_vocab_template);
  };

  switch (task) {
    case Task::kGrounded: {
      score_matched(run(first_expression()).segmentation, gts, tr);
      break;
    }
    case Task::kOpenVocab: {
      const auto labels = labels_of(rec);
      if (labels.empty()) throw Error(ErrorCode::kInvalidArgument, "record has no labels");
      score_matched(run(open_vocab_expression(labels, cfg.open_vocab_template)).segmentation, gts, tr);
      break;
    }
    case Task::kReference: {
      if (rec.expressions.empty()) throw Error(ErrorCode::kInvalidArgument, "record has no expressions");
      BinaryMask target(input.image.height, input.image.width, Frame::kImage);
      for (const auto& [_, m] : gts) target = mask_union(target, m);
      for (const auto& text : rec.expressions) {
        const auto result = run(text);
        BinaryMask pred(input.image.height, input.image.width, Frame::kImage);
        for (const auto& r : result.segmentation.records) {
          if (r.entity_id == 0) pred = r.mask;
        }
        tr.pairs.push_back({pred, target, text, rec.id, ""});
      }
      break;
    }
    case Task::kStability: {
      std::vector<std::string> captions;
      if (rec.expressions.size() >= 2) {
        const std::size_t n = std::min(cfg.stability_variants, rec.expressions.size());
        captions.assign(rec.expressions.begin(), rec.expressions.begin() + static_cast<std::ptrdiff_t>(n));
      } else {
        captions.push_back(first_expression());
        if (cfg.stability_variants > 1) {
          Rng rng(derive_seed(cfg.seed, stable_hash(rec.id)));
          const auto extra = textgraph::mutate_expression(captions.front(), cfg.stability_variants - 1,
                                                          *backends.parser, rng);
          captions.insert(captions.end(), extra.begin(), extra.end());
        }
      }
      for (std::size_t k = 0; k < captions.size(); ++k) {
        char id[32];
        std::snprintf(id, sizeof id, "c%03zu", k);
        tr.samples.push_back({rec.id, id, caption_iou(run(captions[k]).segmentation, gts)});
      }
      break;
    }
  }
}

}  // namespace

std::string task_name(Task task) {
  switch (task) {
    case Task::kGrounded: return "GROUNDED";
    case Task::kReference: return "REFERENCE";
    case Task::kOpenVocab: return "OPEN_VOCAB";
    case Task::kStability: return "STABILITY";
  }
  return "GROUNDED";
}

Task parse_task(const std::string& name) {
  std::string n;
  for (char c : name) {
    if (c != '_' && c != '-') n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (n == "grounded") return Task::kGrounded;
  if (n == "reference") return Task::kReference;
  if (n == "openvocab") return Task::kOpenVocab;
  if (n == "stability") return Task::kStability;
  throw Error(ErrorCode::kInvalidArgument, "unknown task " + name);
}

std::string open_vocab_expression(const std::vector<std::string>& labels, const std::string& pattern) {
  std::string joined;
  for (std::size_t i = 0; i < labels.size(); ++i) joined += (i ? ", " : "") + labels[i];
  std::string out = pattern;
  const std::string key = "{labels}";
  for (std::size_t pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + joined.size())) {
    out.replace(pos, key.size(), joined);
  }
  return out;
}

eval::EvalReport run_benchmark(const std::vector<dataset::DatasetRecord>& records, const PipelineConfig& cfg, Task task,
                               const Backends& backends, PipelineCache* cache, BenchmarkTrace* trace) {
  if (records.empty()) throw Error(ErrorCode::kEmptyDataset, "benchmark dataset is empty");
  cfg.validate();
  std::vector<RecordTrace> traces(records.size());
  const int threads = cfg.workers > 0 ? static_cast<int>(cfg.workers) : omp_get_max_threads();
  const auto n = static_cast<std::ptrdiff_t>(records.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& rec = records[static_cast<std::size_t>(i)];
    RecordTrace tr;
    tr.id = rec.id;
    try {
      evaluate_record(rec, cfg, task, backends, cache, tr);
    } catch (const std::exception& e) {
      tr = RecordTrace{};
      tr.id = rec.id;
      tr.failed = true;
      tr.error = e.what();
    }
    traces[static_cast<std::size_t>(i)] = std::move(tr);
  }

  eval::EvalReport report;
  report.task = task_name(task);
  report.records = records.size();
  std::vector<eval::ScoredPrediction> predictions;
  std::size_t ground_truths = 0;
  std::vector<eval::EvalPair> pairs;
  std::vector<eval::StabilitySample> samples;
  for (const auto& tr : traces) {
    if (tr.failed) {
      ++report.failures;
      report.failure_messages.push_back(tr.id + ": " + tr.error);
      continue;
    }
    predictions.insert(predictions.end(), tr.predictions.begin(), tr.predictions.end());
    ground_truths += tr.ground_truths;
    pairs.insert(pairs.end(), tr.pairs.begin(), tr.pairs.end());
    samples.insert(samples.end(), tr.samples.begin(), tr.samples.end());
  }

  switch (task) {
    case Task::kGrounded:
      if (ground_truths > 0) {
        report.ap50 = eval::ap50(predictions, ground_truths);
        report.recall = eval::recall50(predictions, ground_truths);
      }
      if (ground_truths > 0 || !predictions.empty()) report.miou = eval::miou(predictions, ground_truths);
      break;
    case Task::kOpenVocab:
      if (ground_truths > 0 || !predictions.empty()) report.miou = eval::miou(predictions, ground_truths);
      break;
    case Task::kReference:
      if (!pairs.empty()) {
        report.ciou = eval::ciou(pairs);
        report.giou = eval::giou(pairs);
      }
      break;
    case Task::kStability:
      report.per_image = eval::stability_study(samples);
      break;
  }
  if (trace) {
    trace->records = std::move(traces);
    trace->samples = std::move(samples);
  }
  return report;
}

}  // namespace anyword::pipeline
