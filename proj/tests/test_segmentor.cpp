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

#include <doctest.h>

#include <cmath>

#include "anyword/segmentor.hpp"
#include "anyword/toy.hpp"

using namespace anyword;
using namespace anyword::segmentor;
using promptmine::MaskPrompt;
using promptmine::Point;
using promptmine::Polarity;

namespace {

struct Disc {
  double cx, cy, r;
  std::array<float, 3> color;
};

Image disc_image(ImageSize size, const std::vector<Disc>& discs) {
  Image img(size.width, size.height, 3, 0.5f);
  for (std::size_t y = 0; y < size.height; ++y)
    for (std::size_t x = 0; x < size.width; ++x)
      for (const auto& d : discs) {
        if (std::hypot(x + 0.5 - d.cx, y + 0.5 - d.cy) <= d.r) {
          for (std::size_t c = 0; c < 3; ++c) img.at(x, y, c) = d.color[c];
        }
      }
  return img;
}

BinaryMask disc_mask(ImageSize size, const Disc& d) {
  BinaryMask m(size.height, size.width, Frame::kImage);
  for (std::size_t y = 0; y < size.height; ++y)
    for (std::size_t x = 0; x < size.width; ++x) m.set(y, x, std::hypot(x + 0.5 - d.cx, y + 0.5 - d.cy) <= d.r);
  return m;
}

Point pos(double x, double y, ImageSize s, std::size_t token = 0) {
  return Point::in_image(x, y, s, Polarity::kPositive, token);
}
Point neg(double x, double y, ImageSize s) { return Point::in_image(x, y, s, Polarity::kNegative, 0); }

class Offline : public PromptableSegmentor {
 public:
  ScoredMask run(const Image&, const MaskPrompt&) const override {
    throw Error(ErrorCode::kBackendUnavailable, "offline");
  }
  SegmentorInfo info() const override { return {"offline", {0, 0}, 1}; }
};

void expect_code(ErrorCode code, auto&& fn) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("a positive at a blob centre recovers that blob") {
  const ImageSize s{96, 64};
  const Disc a{24, 30, 12, {0.9f, 0.1f, 0.1f}}, b{70, 32, 14, {0.1f, 0.2f, 0.9f}};
  const Image img = disc_image(s, {a, b});
  const MockSegmentor mock;
  MaskPrompt p;
  p.positives = {pos(24, 30, s)};
  const auto out = segment(img, p, mock);
  CHECK(out.mask.frame() == Frame::kImage);
  CHECK(out.mask == disc_mask(s, a));
  p.positives = {pos(70, 32, s)};
  p.negatives = {neg(24, 30, s)};
  CHECK(segment(img, p, mock).mask == disc_mask(s, b));
}

TEST_CASE("a negative clips the region at the bisector") {
  const ImageSize s{40, 10};
  const Image img(s.width, s.height, 3, 0.3f);
  const MockSegmentor mock;
  MaskPrompt p;
  p.positives = {pos(5.5, 5.5, s)};
  p.negatives = {neg(25.5, 5.5, s)};
  const auto m = segment(img, p, mock).mask;
  for (std::size_t y = 0; y < s.height; ++y)
    for (std::size_t x = 0; x < s.width; ++x) {
      const double dp = std::hypot(x - 5.0, y - 5.0), dn = std::hypot(x - 25.0, y - 5.0);
      CAPTURE(x);
      CAPTURE(y);
      CHECK(m.at(y, x) == (dp < dn));
    }
}

TEST_CASE("contradictory or out-of-frame prompts are rejected") {
  const ImageSize s{32, 32};
  const Image img(32, 32, 3, 0.2f);
  const MockSegmentor mock;
  MaskPrompt p;
  expect_code(ErrorCode::kInvalidPrompt, [&] { segment(img, p, mock); });
  p.positives = {pos(10.2, 10.7, s)};
  p.negatives = {neg(10.9, 10.1, s)};
  expect_code(ErrorCode::kInvalidPrompt, [&] { segment(img, p, mock); });
  MaskPrompt big;
  big.positives = {pos(50, 50, {64, 64})};
  expect_code(ErrorCode::kInvalidPrompt, [&] { segment(img, big, mock); });
  p.negatives.clear();
  expect_code(ErrorCode::kBackendUnavailable, [&] { segment(img, p, Offline{}); });
}

TEST_CASE("mock soundness and determinism on random prompts") {
  const ImageSize s{64, 48};
  Rng rng(1);
  std::uniform_real_distribution<double> ux(0.0, 63.99), uy(0.0, 47.99), ur(4.0, 14.0);
  std::uniform_int_distribution<int> count(1, 4), ncount(0, 4);
  std::uniform_real_distribution<float> uc(0.0f, 1.0f);
  const MockSegmentor mock(0.15);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Disc> discs;
    for (int i = 0; i < 3; ++i) discs.push_back({ux(rng), uy(rng), ur(rng), {uc(rng), uc(rng), uc(rng)}});
    const Image img = disc_image(s, discs);
    MaskPrompt p;
    const int np = count(rng), nn = ncount(rng);
    for (int i = 0; i < np; ++i) p.positives.push_back(pos(ux(rng), uy(rng), s));
    for (int i = 0; i < nn; ++i) {
      const auto q = neg(ux(rng), uy(rng), s);
      bool clash = false;
      for (const auto& x : p.positives) clash |= x.pixel_x() == q.pixel_x() && x.pixel_y() == q.pixel_y();
      if (!clash) p.negatives.push_back(q);
    }
    const auto m = segment(img, p, mock);
    for (const auto& x : p.positives) REQUIRE(m.mask.at(x.pixel_y(), x.pixel_x()));
    for (const auto& x : p.negatives) REQUIRE_FALSE(m.mask.at(x.pixel_y(), x.pixel_x()));
    REQUIRE(segment(img, p, mock) == m);
  }
}

TEST_CASE("assembly keeps parse order and labels") {
  const textgraph::RuleParser parser;
  const auto parsed = textgraph::parse_expression("the boy in a blue sweatshirt holding a donut", parser);
  std::vector<MaskPrompt> prompts(2);
  std::map<std::size_t, ScoredMask> masks;
  for (std::size_t e = 0; e < 2; ++e) {
    prompts[e].entity_id = e;
    prompts[e].label = parsed.entities[e].label;
    prompts[e].positives = {pos(1.0 + e, 1.0, {8, 8})};
    BinaryMask m(8, 8, Frame::kImage);
    m.set(1, 1 + e);
    masks[e] = {m, 0.5 + e};
  }
  const auto g = assemble_grounded(masks, prompts, parsed);
  REQUIRE(g.records.size() == 2);
  CHECK(g.records[0].label == parsed.entities[0].label);
  CHECK(g.records[0].label.find("boy") != std::string::npos);
  CHECK(g.records[1].label == "donut");
  CHECK(g.records[0].token_indices == parsed.entities[0].concept_tokens());
  CHECK(g.records[1].score == 1.5);
  CHECK(g.records[1].prompt == prompts[1]);

  masks.erase(1);
  expect_code(ErrorCode::kMissingEntityMask, [&] { assemble_grounded(masks, prompts, parsed); });
}

TEST_CASE("all entities skipped gives an empty segmentation") {
  const textgraph::RuleParser parser;
  const auto parsed = textgraph::parse_expression("cat", parser);
  const std::vector<promptmine::SkipReport> skipped = {{0, "cat", ErrorCode::kDegenerateMap, "flat"}};
  const auto g = assemble_grounded({}, {}, parsed, skipped);
  CHECK(g.records.empty());
  CHECK(g.skipped == skipped);
}

TEST_CASE("token indices round-trip on a three-entity scene") {
  const textgraph::RuleParser parser;
  const auto parsed = textgraph::parse_expression("a red ball beside a green cup near a small white horse", parser);
  REQUIRE(parsed.entities.size() == 3);
  std::vector<MaskPrompt> prompts;
  std::map<std::size_t, ScoredMask> masks;
  for (std::size_t e = 0; e < 3; ++e) {
    MaskPrompt p;
    p.entity_id = e;
    p.label = parsed.entities[e].label;
    p.positives = {pos(2.0 * e, 0.0, {8, 8})};
    prompts.push_back(p);
    masks[e] = {BinaryMask(8, 8, Frame::kImage), 1.0};
  }
  const auto g = assemble_grounded(masks, prompts, parsed);
  REQUIRE(g.records.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    std::vector<std::string> words;
    for (std::size_t t : g.records[e].token_indices) words.push_back(parsed.tokens[t].surface);
    std::vector<std::string> expected;
    for (std::size_t t : parsed.entities[e].concept_tokens()) expected.push_back(parsed.tokens[t].surface);
    CHECK(words == expected);
    CHECK(std::find(words.begin(), words.end(), parsed.entities[e].root.surface) != words.end());
  }
}
