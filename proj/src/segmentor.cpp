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

#include "anyword/segmentor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace anyword::segmentor {

using promptmine::MaskPrompt;
using promptmine::Point;

ScoredMask segment(const Image& image, const MaskPrompt& prompt, const PromptableSegmentor& backend) {
  if (image.empty()) throw Error(ErrorCode::kInvalidArgument, "empty image");
  if (prompt.positives.empty()) throw Error(ErrorCode::kInvalidPrompt, "prompt has no positive point");
  const ImageSize size = image.size();
  auto check = [&](const Point& p) {
    if (!(p.x() >= 0.0 && p.y() >= 0.0 && p.x() < static_cast<double>(size.width) &&
          p.y() < static_cast<double>(size.height))) {
      throw Error(ErrorCode::kInvalidPrompt, "prompt point outside the image");
    }
  };
  for (const auto& p : prompt.positives) check(p);
  for (const auto& n : prompt.negatives) check(n);
  for (const auto& p : prompt.positives) {
    for (const auto& n : prompt.negatives) {
      if (p.pixel_x() == n.pixel_x() && p.pixel_y() == n.pixel_y()) {
        throw Error(ErrorCode::kInvalidPrompt, "positive and negative point share a pixel");
      }
    }
  }
  ScoredMask out;
  try {
    out = backend.run(image, prompt);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kBackendUnavailable, backend.info().name + ": " + e.what());
  }
  if (out.mask.rows() != size.height || out.mask.cols() != size.width || out.mask.frame() != Frame::kImage) {
    throw Error(ErrorCode::kBackendFailure, backend.info().name + ": mask does not match the image");
  }
  return out;
}

ScoredMask MockSegmentor::run(const Image& image, const MaskPrompt& prompt) const {
  const std::size_t W = image.width;
  const std::size_t H = image.height;
  auto nearest_sq = [](const std::vector<Point>& pts, double x, double y) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) best = std::min(best, (p.x() - x) * (p.x() - x) + (p.y() - y) * (p.y() - y));
    return best;
  };
  Grid<std::uint8_t> allowed(H, W, 0);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const double cx = static_cast<double>(x) + 0.5;
      const double cy = static_cast<double>(y) + 0.5;
      allowed(y, x) = nearest_sq(prompt.positives, cx, cy) < nearest_sq(prompt.negatives, cx, cy) ? 1 : 0;
    }
  }
  for (const auto& n : prompt.negatives) allowed(n.pixel_y(), n.pixel_x()) = 0;
  for (const auto& p : prompt.positives) allowed(p.pixel_y(), p.pixel_x()) = 1;

  BinaryMask mask(H, W, Frame::kImage);
  std::vector<Cell> stack;
  for (const auto& p : prompt.positives) {
    const std::size_t sx = p.pixel_x();
    const std::size_t sy = p.pixel_y();
    float seed[4] = {0, 0, 0, 0};
    for (std::size_t c = 0; c < image.channels && c < 4; ++c) seed[c] = image.at(sx, sy, c);
    auto similar = [&](std::size_t x, std::size_t y) {
      for (std::size_t c = 0; c < image.channels && c < 4; ++c) {
        if (std::fabs(image.at(x, y, c) - seed[c]) > tolerance_) return false;
      }
      return true;
    };
    Grid<std::uint8_t> seen(H, W, 0);
    stack.push_back({sy, sx});
    seen(sy, sx) = 1;
    while (!stack.empty()) {
      Cell cur = stack.back();
      stack.pop_back();
      mask.set(cur.row, cur.col);
      auto visit = [&](std::size_t y, std::size_t x) {
        if (seen(y, x) || !allowed(y, x) || !similar(x, y)) return;
        seen(y, x) = 1;
        stack.push_back({y, x});
      };
      if (cur.row > 0) visit(cur.row - 1, cur.col);
      if (cur.row + 1 < H) visit(cur.row + 1, cur.col);
      if (cur.col > 0) visit(cur.row, cur.col - 1);
      if (cur.col + 1 < W) visit(cur.row, cur.col + 1);
    }
  }
  return {std::move(mask), 1.0};
}

GroundedSegmentation assemble_grounded(const std::map<std::size_t, ScoredMask>& masks,
                                       const std::vector<MaskPrompt>& prompts,
                                       const textgraph::ParsedExpression& parsed,
                                       std::vector<promptmine::SkipReport> skipped) {
  GroundedSegmentation out;
  out.skipped = std::move(skipped);
  std::vector<const MaskPrompt*> ordered;
  for (const auto& p : prompts) ordered.push_back(&p);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const MaskPrompt* a, const MaskPrompt* b) { return a->entity_id < b->entity_id; });
  for (const MaskPrompt* p : ordered) {
    if (p->entity_id >= parsed.entities.size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "prompt refers to an unknown entity");
    }
    auto it = masks.find(p->entity_id);
    if (it == masks.end()) {
      throw Error(ErrorCode::kMissingEntityMask, "no mask for entity " + std::to_string(p->entity_id) + " (" +
                                                     parsed.entities[p->entity_id].label + ")");
    }
    GroundedRecord rec;
    rec.entity_id = p->entity_id;
    rec.label = parsed.entities[p->entity_id].label;
    rec.mask = it->second.mask;
    rec.score = it->second.score;
    rec.token_indices = parsed.entities[p->entity_id].concept_tokens();
    rec.prompt = *p;
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace anyword::segmentor
