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

#include "anyword/promptmine.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <json.hpp>

#include "anyword/kernels.hpp"

namespace anyword::promptmine {

Point Point::in_image(double x, double y, ImageSize image, Polarity polarity, std::size_t source_token) {
  if (!(x >= 0.0 && y >= 0.0 && x < static_cast<double>(image.width) && y < static_cast<double>(image.height))) {
    throw Error(ErrorCode::kInvalidPrompt, "point (" + std::to_string(x) + ", " + std::to_string(y) +
                                               ") lies outside the image");
  }
  return Point(x, y, polarity, source_token);
}

Point Point::from_cell(Cell cell, GridShape grid, ImageSize image, Polarity polarity, std::size_t source_token) {
  if (cell.row >= grid.rows || cell.col >= grid.cols) {
    throw Error(ErrorCode::kIndexOutOfRange, "cell outside its grid");
  }
  const double x = (static_cast<double>(cell.col) + 0.5) * static_cast<double>(image.width) /
                   static_cast<double>(grid.cols);
  const double y = (static_cast<double>(cell.row) + 0.5) * static_cast<double>(image.height) /
                   static_cast<double>(grid.rows);
  return in_image(x, y, image, polarity, source_token);
}

BinaryMask threshold_mask(const diffusion::AveragedAttentionMap& avg, double threshold) {
  Grid<std::uint8_t> cells(avg.grid.rows(), avg.grid.cols(), 0);
  kernels::parallel::threshold(avg.grid.values(), threshold, cells.values());
  BinaryMask mask(std::move(cells), Frame::kAttention);
  if (!mask.any()) {
    throw Error(ErrorCode::kDegenerateMap,
                "attention map of token " + std::to_string(avg.token_index) + " has no cell above " +
                    std::to_string(threshold));
  }
  return mask;
}

BinaryMask largest_component(const BinaryMask& mask) {
  const std::size_t rows = mask.rows();
  const std::size_t cols = mask.cols();
  Grid<int> label(rows, cols, -1);
  std::vector<Cell> stack;
  std::vector<Cell> best;
  std::vector<Cell> current;
  int next = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (!mask.at(r, c) || label(r, c) >= 0) continue;
      current.clear();
      stack.push_back({r, c});
      label(r, c) = next;
      while (!stack.empty()) {
        Cell cur = stack.back();
        stack.pop_back();
        current.push_back(cur);
        auto visit = [&](std::size_t rr, std::size_t cc) {
          if (mask.at(rr, cc) && label(rr, cc) < 0) {
            label(rr, cc) = next;
            stack.push_back({rr, cc});
          }
        };
        if (cur.row > 0) visit(cur.row - 1, cur.col);
        if (cur.row + 1 < rows) visit(cur.row + 1, cur.col);
        if (cur.col > 0) visit(cur.row, cur.col - 1);
        if (cur.col + 1 < cols) visit(cur.row, cur.col + 1);
      }
      // Raster discovery order means an earlier component wins a size tie.
      if (current.size() > best.size()) best = current;
      ++next;
    }
  }
  if (best.empty()) throw Error(ErrorCode::kEmptyMask, "mask has no true cell");
  BinaryMask out(rows, cols, mask.frame());
  for (const Cell& cell : best) out.set(cell.row, cell.col);
  return out;
}

Point sample_point(const BinaryMask& region, ImageSize image, Rng& rng, Polarity polarity,
                   std::size_t source_token) {
  const auto cells = region.true_cells();
  if (cells.empty()) throw Error(ErrorCode::kEmptyMask, "cannot sample from an empty region");
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  return Point::from_cell(cells[pick(rng)], region.shape(), image, polarity, source_token);
}

Point sample_from_map(const TokenMaps& maps, std::size_t token, ImageSize image, double threshold, Rng& rng,
                      Polarity polarity) {
  auto it = maps.find(token);
  if (it == maps.end()) {
    throw Error(ErrorCode::kInvalidArgument, "no averaged attention map for token " + std::to_string(token));
  }
  try {
    return sample_point(largest_component(threshold_mask(it->second, threshold)), image, rng, polarity, token);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kEmptyMask) {
      throw Error(ErrorCode::kEmptyMask, "token " + std::to_string(token) + ": " + e.what());
    }
    throw;
  }
}

std::vector<Point> cluster_positive(const textgraph::Entity& entity, const TokenMaps& maps, ImageSize image,
                                    Rng& rng, double threshold, bool use_r1) {
  const std::size_t root = entity.root.index;
  std::vector<Point> out;
  out.push_back(sample_from_map(maps, root, image, threshold, rng));
  if (!use_r1) return out;
  if (entity.adjectives.empty() && entity.attribute_nouns.empty()) {
    out.push_back(sample_from_map(maps, root, image, threshold, rng));
    return out;
  }
  for (const auto& a : entity.attribute_nouns) out.push_back(sample_from_map(maps, a.index, image, threshold, rng));
  for (const auto& a : entity.adjectives) out.push_back(sample_from_map(maps, a.index, image, threshold, rng));
  return out;
}

std::vector<Point> bind_negatives(const std::vector<std::vector<Point>>& positives, std::size_t target,
                                  const BinaryMask& target_mask, ImageSize image, Rng& rng,
                                  NegativeRange background) {
  if (target >= positives.size()) throw Error(ErrorCode::kIndexOutOfRange, "target entity out of range");
  std::size_t prompted = 0;
  for (const auto& p : positives) prompted += p.empty() ? 0 : 1;

  std::vector<Point> out;
  if (prompted >= 2) {
    for (std::size_t j = 0; j < positives.size(); ++j) {
      if (j == target) continue;
      for (const Point& p : positives[j]) out.push_back(p.with_polarity(Polarity::kNegative));
    }
    return out;
  }

  if (background.min > background.max) throw Error(ErrorCode::kInvalidArgument, "empty background range");
  const BinaryMask full = target_mask.frame() == Frame::kImage ? target_mask : upscale_to_image(target_mask, image);
  if (full.rows() != image.height || full.cols() != image.width) {
    throw Error(ErrorCode::kShapeMismatch, "entity mask does not match the image");
  }
  std::vector<Cell> exterior;
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      if (!full.at(y, x)) exterior.push_back({y, x});
    }
  }
  if (exterior.empty()) throw Error(ErrorCode::kNoExteriorCells, "entity mask covers the whole image");
  std::uniform_int_distribution<std::size_t> count(background.min, background.max);
  const std::size_t k = std::min(count(rng), exterior.size());
  std::vector<Cell> chosen;
  chosen.reserve(k);
  std::sample(exterior.begin(), exterior.end(), std::back_inserter(chosen), k, rng);
  const std::size_t token = positives[target].empty() ? 0 : positives[target].front().source_token();
  for (const Cell& c : chosen) {
    out.push_back(Point::in_image(static_cast<double>(c.col) + 0.5, static_cast<double>(c.row) + 0.5, image,
                                  Polarity::kNegative, token));
  }
  return out;
}

MiningResult build_mask_prompts(const textgraph::ParsedExpression& parsed, const TokenMaps& maps, ImageSize image,
                                Rng& rng, const MiningOptions& options) {
  MiningResult result;
  const std::size_t n = parsed.entities.size();
  std::vector<std::vector<Point>> positives(n);
  for (std::size_t e = 0; e < n; ++e) {
    const auto& ent = parsed.entities[e];
    try {
      auto root_it = maps.find(ent.root.index);
      if (root_it == maps.end()) {
        throw Error(ErrorCode::kInvalidArgument, "no averaged attention map for token " +
                                                     std::to_string(ent.root.index));
      }
      BinaryMask root_mask = threshold_mask(root_it->second, options.threshold);
      positives[e] = cluster_positive(ent, maps, image, rng, options.threshold, options.use_r1);
      result.root_masks.emplace(e, std::move(root_mask));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kDegenerateMap && err.code() != ErrorCode::kEmptyMask) throw;
      positives[e].clear();
      result.skipped.push_back({e, ent.label, err.code(), err.what()});
    }
  }

  for (std::size_t e = 0; e < n; ++e) {
    if (positives[e].empty()) continue;
    MaskPrompt prompt;
    prompt.entity_id = e;
    prompt.label = parsed.entities[e].label;
    prompt.positives = positives[e];
    if (options.use_r2) {
      std::size_t prompted = 0;
      for (const auto& p : positives) prompted += p.empty() ? 0 : 1;
      if (options.fresh_negatives && prompted >= 2) {
        for (std::size_t j = 0; j < n; ++j) {
          if (j == e || positives[j].empty()) continue;
          prompt.negatives.push_back(sample_from_map(maps, parsed.entities[j].root.index, image, options.threshold,
                                                     rng, Polarity::kNegative));
        }
      } else {
        prompt.negatives = bind_negatives(positives, e, result.root_masks.at(e), image, rng, options.background);
      }
    }
    result.prompts.push_back(std::move(prompt));
  }
  return result;
}

std::string dump_prompts(const std::vector<MaskPrompt>& prompts, std::uint64_t seed) {
  auto points = [](const std::vector<Point>& pts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : pts) arr.push_back({p.x(), p.y()});
    return arr;
  };
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : prompts) {
    out.push_back({{"entity_id", p.entity_id},
                   {"label", p.label},
                   {"positives", points(p.positives)},
                   {"negatives", points(p.negatives)},
                   {"seed", seed}});
  }
  return out.dump(2);
}

}  // namespace anyword::promptmine
