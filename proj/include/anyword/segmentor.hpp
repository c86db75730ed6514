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

// Promptable mask generation behind one interface, and assembly of
// per-entity masks into a grounded segmentation.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "anyword/image.hpp"
#include "anyword/mask.hpp"
#include "anyword/promptmine.hpp"
#include "anyword/textgraph.hpp"

namespace anyword::segmentor {

struct SegmentorInfo {
  std::string name;
  ImageSize input_size;
  // Largest number of concurrent requests a handle accepts; 0 = unlimited.
  std::size_t max_concurrency = 0;
};

struct ScoredMask {
  BinaryMask mask;
  double score = 1.0;

  bool operator==(const ScoredMask&) const = default;
};

class PromptableSegmentor {
 public:
  virtual ~PromptableSegmentor() = default;
  // Called only with prompts that passed segment()'s validation.
  virtual ScoredMask run(const Image& image, const promptmine::MaskPrompt& prompt) const = 0;
  virtual SegmentorInfo info() const = 0;
};

// Validates the prompt and dispatches. Errors: kInvalidPrompt (no positives,
// a point outside the image, or a positive and a negative in the same pixel),
// kBackendUnavailable.
ScoredMask segment(const Image& image, const promptmine::MaskPrompt& prompt, const PromptableSegmentor& backend);

// Region growing from each positive's pixel over 4-neighbours whose colour is
// within `tolerance` (max channel difference) of that seed pixel, restricted
// to pixels strictly closer to their nearest positive than to their nearest
// negative. Positive pixels are always in, negative pixels always out.
class MockSegmentor : public PromptableSegmentor {
 public:
  explicit MockSegmentor(double tolerance = 0.1) : tolerance_(tolerance) {}
  ScoredMask run(const Image& image, const promptmine::MaskPrompt& prompt) const override;
  SegmentorInfo info() const override { return {"mock-region-grow", {0, 0}, 0}; }

 private:
  double tolerance_;
};

struct GroundedRecord {
  std::size_t entity_id = 0;
  std::string label;
  BinaryMask mask;
  double score = 1.0;
  // Root, attribute nouns and adjectives of the entity, in token order.
  std::vector<std::size_t> token_indices;
  promptmine::MaskPrompt prompt;

  bool operator==(const GroundedRecord&) const = default;
};

struct GroundedSegmentation {
  std::vector<GroundedRecord> records;
  std::vector<promptmine::SkipReport> skipped;

  bool operator==(const GroundedSegmentation&) const = default;
};

// One record per prompt, in entity order, labels copied from the parse.
// Throws kMissingEntityMask when a prompted entity has no mask.
GroundedSegmentation assemble_grounded(const std::map<std::size_t, ScoredMask>& masks,
                                       const std::vector<promptmine::MaskPrompt>& prompts,
                                       const textgraph::ParsedExpression& parsed,
                                       std::vector<promptmine::SkipReport> skipped = {});

}  // namespace anyword::segmentor
