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

// Mask metrics, optimal IoU matching of predictions to ground truth, and the
// caption-variant stability study.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anyword/mask.hpp"
#include "anyword/segmentor.hpp"

namespace anyword::eval {

struct EvalPair {
  BinaryMask prediction;
  BinaryMask ground_truth;
  std::string phrase;
  std::string image_id;
  std::string caption_id;
};

// |a & b| / |a | b|; two empty masks score 1. Throws kShapeMismatch.
double iou(const BinaryMask& a, const BinaryMask& b);

// Sum of intersections over sum of unions. Throws kEmptyDataset.
double ciou(const std::vector<EvalPair>& pairs);

// Mean per-pair IoU; an empty ground truth scores 1 for an empty prediction
// and 0 otherwise. Throws kEmptyDataset.
double giou(const std::vector<EvalPair>& pairs);

struct Assignment {
  // (prediction index, ground-truth index, IoU), ascending prediction index.
  struct Match {
    std::size_t prediction = 0;
    std::size_t ground_truth = 0;
    double iou = 0.0;
    bool operator==(const Match&) const = default;
  };
  std::vector<Match> matches;
  std::vector<std::size_t> unmatched_predictions;
  std::vector<std::size_t> unmatched_ground_truths;

  // Sum of matched IoUs in prediction order.
  double total_iou() const;
};

// Maximum-total-IoU one-to-one assignment on a predictions x ground-truths
// matrix (Hungarian method). Zero-IoU pairings are reported as unmatched.
Assignment cross_match(const std::vector<std::vector<double>>& iou_matrix);

Assignment cross_match(const segmentor::GroundedSegmentation& predictions,
                       const std::vector<std::pair<std::string, BinaryMask>>& ground_truths);

// One prediction after matching: its IoU with the matched ground truth (0
// when unmatched) and its confidence.
struct ScoredPrediction {
  double iou = 0.0;
  double score = 1.0;
  bool matched = false;
};

constexpr double kMatchThreshold = 0.5;

// All-point interpolated average precision at IoU 0.5, ranking by score.
// Equal scores are consumed as one group so the result does not depend on
// input order. Throws kEmptyDataset when there is no ground truth.
double ap50(const std::vector<ScoredPrediction>& predictions, std::size_t ground_truth_count);
// True positives at IoU >= 0.5 over ground-truth count. Throws kEmptyDataset.
double recall50(const std::vector<ScoredPrediction>& predictions, std::size_t ground_truth_count);
// Mean IoU over matched predictions; 0 when nothing matched. Throws
// kEmptyDataset when there are no predictions and no ground truth.
double miou(const std::vector<ScoredPrediction>& predictions, std::size_t ground_truth_count);

enum class Bucket { kEasy, kMedium, kHard };
std::string bucket_name(Bucket b);

struct BucketThresholds {
  double easy_mean = 0.75;
  double easy_std = 0.10;
  double hard_mean = 0.5;
  double hard_std = 0.25;
};

Bucket assign_bucket(double mean, double stddev, const BucketThresholds& t = {});

struct StabilitySample {
  std::string image_id;
  std::string caption_id;
  double iou = 0.0;
};

struct ImageStability {
  std::string image_id;
  std::size_t captions = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  Bucket bucket = Bucket::kMedium;
  // Set when only one caption was available and stddev was defined as 0.
  bool single_caption = false;
};

// Per image (sorted by image id): mean and population standard deviation of
// IoU across caption variants, plus the bucket.
std::vector<ImageStability> stability_study(const std::vector<StabilitySample>& samples,
                                            const BucketThresholds& thresholds = {});

struct EvalReport {
  std::string task;
  std::optional<double> ciou;
  std::optional<double> giou;
  std::optional<double> miou;
  std::optional<double> ap50;
  std::optional<double> recall;
  std::vector<ImageStability> per_image;
  std::size_t records = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
};

std::string report_json(const EvalReport& report);
// Fixed-column text table.
std::string report_table(const EvalReport& report);
// image_id,captions,mean,std,bucket
std::string per_image_csv(const EvalReport& report);

}  // namespace anyword::eval
