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

// Averaged attention maps plus linguistic structure -> positive/negative
// point prompts for a promptable segmentor.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "anyword/diffusion.hpp"
#include "anyword/errors.hpp"
#include "anyword/mask.hpp"
#include "anyword/rng.hpp"
#include "anyword/textgraph.hpp"

namespace anyword::promptmine {

enum class Polarity { kPositive, kNegative };

// A prompt point in image pixel coordinates. Only constructible through the
// image-frame factories, so attention-frame cell indices can never leak in.
class Point {
 public:
  // Throws kInvalidPrompt unless 0 <= x < width and 0 <= y < height.
  static Point in_image(double x, double y, ImageSize image, Polarity polarity, std::size_t source_token);
  // Centre of `cell` of a grid of shape `grid`, scaled to the image frame.
  static Point from_cell(Cell cell, GridShape grid, ImageSize image, Polarity polarity,
                         std::size_t source_token);

  double x() const { return x_; }
  double y() const { return y_; }
  Polarity polarity() const { return polarity_; }
  std::size_t source_token() const { return source_token_; }
  // Pixel containing the point.
  std::size_t pixel_x() const { return static_cast<std::size_t>(x_); }
  std::size_t pixel_y() const { return static_cast<std::size_t>(y_); }

  Point with_polarity(Polarity p) const {
    Point q = *this;
    q.polarity_ = p;
    return q;
  }

  bool operator==(const Point&) const = default;

 private:
  Point(double x, double y, Polarity polarity, std::size_t source_token)
      : x_(x), y_(y), polarity_(polarity), source_token_(source_token) {}

  double x_ = 0.0;
  double y_ = 0.0;
  Polarity polarity_ = Polarity::kPositive;
  std::size_t source_token_ = 0;
};

struct MaskPrompt {
  std::size_t entity_id = 0;
  std::string label;
  std::vector<Point> positives;
  std::vector<Point> negatives;

  bool operator==(const MaskPrompt&) const = default;
};

using TokenMaps = std::map<std::size_t, diffusion::AveragedAttentionMap>;

constexpr double kDefaultThreshold = 0.7;

// grid >= threshold, attention frame. Throws kDegenerateMap when no cell
// passes, which is what a constant (all-zero after min-max) map produces.
BinaryMask threshold_mask(const diffusion::AveragedAttentionMap& avg, double threshold = kDefaultThreshold);

// Largest 4-connected component; ties go to the component whose first cell
// in raster order comes first. Throws kEmptyMask.
BinaryMask largest_component(const BinaryMask& mask);

// Uniform over the region's true cells, mapped to the image frame at the
// cell centre. Throws kEmptyMask.
Point sample_point(const BinaryMask& region, ImageSize image, Rng& rng, Polarity polarity,
                   std::size_t source_token);

// threshold -> largest component -> sample, for one token's map.
Point sample_from_map(const TokenMaps& maps, std::size_t token, ImageSize image, double threshold,
                      Rng& rng, Polarity polarity = Polarity::kPositive);

// One point from the root map and one per attribute noun and adjective (root
// first, then attribute nouns, then adjectives, each in token order); two
// root points for a bare noun. With use_r1 false, a single root point.
std::vector<Point> cluster_positive(const textgraph::Entity& entity, const TokenMaps& maps, ImageSize image,
                                    Rng& rng, double threshold = kDefaultThreshold, bool use_r1 = true);

struct NegativeRange {
  std::size_t min = 1;
  std::size_t max = 3;
};

// With two or more prompted entities: every other entity's positives, in
// entity order, re-tagged NEGATIVE. With one: k ~ U{min..max} pixels drawn
// uniformly outside the nearest-neighbour upscaled entity mask. Throws
// kNoExteriorCells when the mask covers the image.
std::vector<Point> bind_negatives(const std::vector<std::vector<Point>>& positives, std::size_t target,
                                  const BinaryMask& target_mask, ImageSize image, Rng& rng,
                                  NegativeRange background = {});

struct MiningOptions {
  double threshold = kDefaultThreshold;
  bool use_r1 = true;
  bool use_r2 = true;
  // Draw fresh points from other entities' maps instead of reusing their positives.
  bool fresh_negatives = false;
  NegativeRange background;
};

struct SkipReport {
  std::size_t entity_id = 0;
  std::string label;
  ErrorCode code = ErrorCode::kDegenerateMap;
  std::string message;

  bool operator==(const SkipReport&) const = default;
};

struct MiningResult {
  std::vector<MaskPrompt> prompts;
  std::vector<SkipReport> skipped;
  // Thresholded root mask of every prompted entity, attention frame.
  std::map<std::size_t, BinaryMask> root_masks;
};

// Positives for every entity in parse order, then negatives. Entities whose
// maps are degenerate or empty are skipped and reported.
MiningResult build_mask_prompts(const textgraph::ParsedExpression& parsed, const TokenMaps& maps,
                                ImageSize image, Rng& rng, const MiningOptions& options = {});

// JSON array of {entity_id, label, positives: [[x, y]...], negatives, seed}.
std::string dump_prompts(const std::vector<MaskPrompt>& prompts, std::uint64_t seed);

}  // namespace anyword::promptmine
