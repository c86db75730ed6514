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

#include "anyword/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <json.hpp>
#include <sstream>

#include "anyword/kernels.hpp"

namespace anyword::eval {
namespace {

kernels::OverlapCount count_overlap(const BinaryMask& a, const BinaryMask& b) {
  if (a.shape() != b.shape()) throw Error(ErrorCode::kShapeMismatch, "masks differ in shape");
  return kernels::parallel::overlap(a.cells().values(), b.cells().values());
}

// Minimum-cost perfect assignment on a square matrix; returns column of each row.
std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace

double iou(const BinaryMask& a, const BinaryMask& b) {
  const auto o = count_overlap(a, b);
  if (o.union_ == 0) return 1.0;
  return static_cast<double>(o.intersection) / static_cast<double>(o.union_);
}

double ciou(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyDataset, "cIoU of an empty dataset");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (const auto& p : pairs) {
    const auto o = count_overlap(p.prediction, p.ground_truth);
    inter += o.intersection;
    uni += o.union_;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double giou(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyDataset, "gIoU of an empty dataset");
  double sum = 0.0;
  for (const auto& p : pairs) {
    if (!p.ground_truth.any()) {
      sum += p.prediction.any() ? 0.0 : 1.0;
    } else {
      sum += iou(p.prediction, p.ground_truth);
    }
  }
  return sum / static_cast<double>(pairs.size());
}

double Assignment::total_iou() const {
  double s = 0.0;
  for (const auto& m : matches) s += m.iou;
  return s;
}

Assignment cross_match(const std::vector<std::vector<double>>& iou_matrix) {
  const std::size_t rows = iou_matrix.size();
  const std::size_t cols = rows == 0 ? 0 : iou_matrix.front().size();
  for (const auto& r : iou_matrix) {
    if (r.size() != cols) throw Error(ErrorCode::kShapeMismatch, "IoU matrix is ragged");
  }
  Assignment out;
  const std::size_t n = std::max(rows, cols);
  std::vector<bool> gt_used(cols, false);
  if (n > 0 && rows > 0 && cols > 0) {
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) cost[i][j] = 1.0 - iou_matrix[i][j];
    }
    const auto col_of = hungarian(cost);
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t j = col_of[i];
      if (j < cols && iou_matrix[i][j] > 0.0) {
        out.matches.push_back({i, j, iou_matrix[i][j]});
        gt_used[j] = true;
      } else {
        out.unmatched_predictions.push_back(i);
      }
    }
  } else {
    for (std::size_t i = 0; i < rows; ++i) out.unmatched_predictions.push_back(i);
  }
  for (std::size_t j = 0; j < cols; ++j) {
    if (!gt_used[j]) out.unmatched_ground_truths.push_back(j);
  }
  return out;
}

Assignment cross_match(const segmentor::GroundedSegmentation& predictions,
                       const std::vector<std::pair<std::string, BinaryMask>>& ground_truths) {
  std::vector<std::vector<double>> m(predictions.records.size(), std::vector<double>(ground_truths.size(), 0.0));
  for (std::size_t i = 0; i < predictions.records.size(); ++i) {
    for (std::size_t j = 0; j < ground_truths.size(); ++j) m[i][j] = iou(predictions.records[i].mask, ground_truths[j].second);
  }
  return cross_match(m);
}

double ap50(const std::vector<ScoredPrediction>& predictions, std::size_t ground_truth_count) {
  if (ground_truth_count == 0) throw Error(ErrorCode::kEmptyDataset, "AP50 without ground truth");
  std::vector<ScoredPrediction> sorted = predictions;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredPrediction& a, const ScoredPrediction& b) { return a.score > b.score; });
  // (recall, precision) after each tie group.
  std::vector<std::pair<double, double>> curve;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      if (sorted[j].matched && sorted[j].iou >= kMatchThreshold) ++tp;
      ++j;
    }
    seen = j;
    curve.emplace_back(static_cast<double>(tp) / static_cast<double>(ground_truth_count),
                       static_cast<double>(tp) / static_cast<double>(seen));
    i = j;
  }
  // Precision envelope from the right, then area under the step curve.
  for (std::size_t k = curve.size(); k-- > 1;) curve[k - 1].second = std::max(curve[k - 1].second, curve[k].second);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const auto& [r, p] : curve) {
    ap += (r - prev_recall) * p;
    prev_recall = r;
  }
  return ap;
}

double recall50(const std::vector<ScoredPrediction>& predictions, std::size_t ground_truth_count) {
  if (ground_truth_count == 0) throw Error(ErrorCode::kEmptyDataset, "recall without ground truth");
  std::size_t tp = 0;
  for (const auto& p : predictions) tp += (p.matched && p.iou >= kMatchThreshold) ? 1 : 0;
  return static_cast<double>(tp) / static_cast<double>(ground_truth_count);
}

double miou(const std::vector<ScoredPrediction>& predictions, std::size_t ground_truth_count) {
  if (predictions.empty() && ground_truth_count == 0) throw Error(ErrorCode::kEmptyDataset, "mIoU of an empty dataset");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : predictions) {
    if (!p.matched) continue;
    sum += p.iou;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::string bucket_name(Bucket b) {
  switch (b) {
    case Bucket::kEasy: return "EASY";
    case Bucket::kMedium: return "MEDIUM";
    case Bucket::kHard: return "HARD";
  }
  return "MEDIUM";
}

Bucket assign_bucket(double mean, double stddev, const BucketThresholds& t) {
  if (mean < t.hard_mean || stddev > t.hard_std) return Bucket::kHard;
  if (mean >= t.easy_mean && stddev <= t.easy_std) return Bucket::kEasy;
  return Bucket::kMedium;
}

std::vector<ImageStability> stability_study(const std::vector<StabilitySample>& samples,
                                            const BucketThresholds& thresholds) {
  std::map<std::string, std::vector<const StabilitySample*>> by_image;
  for (const auto& s : samples) by_image[s.image_id].push_back(&s);
  std::vector<ImageStability> out;
  out.reserve(by_image.size());
  for (auto& [image, group] : by_image) {
    // Sum in caption order so the result does not depend on input order.
    std::stable_sort(group.begin(), group.end(),
                     [](const StabilitySample* a, const StabilitySample* b) { return a->caption_id < b->caption_id; });
    ImageStability st;
    st.image_id = image;
    st.captions = group.size();
    double sum = 0.0;
    for (const auto* s : group) sum += s->iou;
    st.mean = sum / static_cast<double>(group.size());
    double ss = 0.0;
    for (const auto* s : group) ss += (s->iou - st.mean) * (s->iou - st.mean);
    st.stddev = std::sqrt(ss / static_cast<double>(group.size()));
    st.single_caption = group.size() == 1;
    st.bucket = assign_bucket(st.mean, st.stddev, thresholds);
    out.push_back(std::move(st));
  }
  return out;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json j;
  j["task"] = report.task;
  auto put = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  put("ciou", report.ciou);
  put("giou", report.giou);
  put("miou", report.miou);
  put("ap50", report.ap50);
  put("recall", report.recall);
  j["records"] = report.records;
  j["failures"] = report.failures;
  j["failure_messages"] = report.failure_messages;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : report.per_image) {
    rows.push_back({{"image_id", s.image_id},
                    {"captions", s.captions},
                    {"iou_mean", s.mean},
                    {"iou_std", s.stddev},
                    {"bucket", bucket_name(s.bucket)},
                    {"single_caption", s.single_caption}});
  }
  j["per_image"] = rows;
  return j.dump(2);
}

std::string report_table(const EvalReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %8s %8s %8s %8s %8s %8s %8s\n", "task", "cIoU", "gIoU", "mIoU", "AP50",
                "Recall", "records", "failed");
  out << line;
  std::snprintf(line, sizeof line, "%-12s %8s %8s %8s %8s %8s %8zu %8zu\n", report.task.c_str(), fmt(report.ciou).c_str(),
                fmt(report.giou).c_str(), fmt(report.miou).c_str(), fmt(report.ap50).c_str(),
                fmt(report.recall).c_str(), report.records, report.failures);
  out << line;
  return out.str();
}

std::string per_image_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "image_id,captions,mean,std,bucket\n";
  out.precision(17);
  for (const auto& s : report.per_image) {
    out << s.image_id << ',' << s.captions << ',' << s.mean << ',' << s.stddev << ',' << bucket_name(s.bucket) << '\n';
  }
  return out.str();
}

}  // namespace anyword::eval
