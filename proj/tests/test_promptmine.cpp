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

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "anyword/promptmine.hpp"
#include "anyword/toy.hpp"

using namespace anyword;
using namespace anyword::promptmine;

namespace {

diffusion::AveragedAttentionMap avg_of(RealGrid g, std::size_t token = 0) {
  return {token, std::move(g), diffusion::Normalization::kMinMax};
}

// Map that is 1 inside [r0, r1) x [c0, c1) and 0 elsewhere.
diffusion::AveragedAttentionMap box_map(std::size_t token, std::size_t r0, std::size_t r1, std::size_t c0,
                                        std::size_t c1, std::size_t n = 16) {
  RealGrid g(n, n, 0.0);
  for (std::size_t r = r0; r < r1; ++r)
    for (std::size_t c = c0; c < c1; ++c) g(r, c) = 1.0;
  return avg_of(std::move(g), token);
}

// Boxes laid out on a 4x4 tiling of a 16x16 grid, one per concept token.
TokenMaps tiled_maps(const textgraph::ParsedExpression& parsed) {
  TokenMaps maps;
  std::size_t slot = 0;
  for (std::size_t t : parsed.concept_tokens()) {
    const std::size_t r = (slot / 4) * 4, c = (slot % 4) * 4;
    maps.emplace(t, box_map(t, r, r + 3, c, c + 3));
    ++slot;
  }
  return maps;
}

std::vector<std::vector<std::size_t>> flood_components(const BinaryMask& m) {
  std::vector<std::vector<std::size_t>> comps;
  std::vector<int> seen(m.rows() * m.cols(), 0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (!m.at(r, c) || seen[r * m.cols() + c]) continue;
      std::vector<std::size_t> comp, stack{r * m.cols() + c};
      seen[stack[0]] = 1;
      while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        comp.push_back(i);
        const std::size_t rr = i / m.cols(), cc = i % m.cols();
        const std::pair<long, long> nb[] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
        for (auto [dr, dc] : nb) {
          const long nr = static_cast<long>(rr) + dr, nc = static_cast<long>(cc) + dc;
          if (nr < 0 || nc < 0 || nr >= static_cast<long>(m.rows()) || nc >= static_cast<long>(m.cols())) continue;
          const std::size_t j = static_cast<std::size_t>(nr) * m.cols() + static_cast<std::size_t>(nc);
          if (m.at(j / m.cols(), j % m.cols()) && !seen[j]) {
            seen[j] = 1;
            stack.push_back(j);
          }
        }
      }
      comps.push_back(comp);
    }
  return comps;
}

bool inside(const Point& p, const BinaryMask& attention_mask, ImageSize image) {
  const std::size_t r = p.pixel_y() * attention_mask.rows() / image.height;
  const std::size_t c = p.pixel_x() * attention_mask.cols() / image.width;
  return attention_mask.at(r, c);
}

std::set<std::pair<double, double>> coords(const std::vector<Point>& pts) {
  std::set<std::pair<double, double>> s;
  for (const auto& p : pts) s.insert({p.x(), p.y()});
  return s;
}

void expect_code(ErrorCode code, auto&& fn) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

const textgraph::RuleParser kParser;

}  // namespace

TEST_CASE("threshold is an elementwise comparison") {
  const auto m = threshold_mask(avg_of(RealGrid(2, 2, {0.9, 0.1, 0.8, 0.65})), 0.7);
  CHECK(m.frame() == Frame::kAttention);
  CHECK(m.at(0, 0));
  CHECK_FALSE(m.at(0, 1));
  CHECK(m.at(1, 0));
  CHECK_FALSE(m.at(1, 1));
  CHECK(threshold_mask(avg_of(RealGrid(3, 3, 1.0))).count() == 9);
  expect_code(ErrorCode::kDegenerateMap, [] { threshold_mask(avg_of(RealGrid(4, 4, 0.0))); });
}

TEST_CASE("threshold agrees with brute force on random maps") {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    RealGrid g(16, 16);
    for (auto& x : g) x = u(rng);
    g[trial % 256] = 1.0;
    const auto m = threshold_mask(avg_of(g));
    for (std::size_t r = 0; r < 16; ++r)
      for (std::size_t c = 0; c < 16; ++c) REQUIRE(m.at(r, c) == (g(r, c) >= 0.7));
  }
}

TEST_CASE("largest component keeps the bigger region") {
  BinaryMask m(6, 6, Frame::kAttention);
  for (std::size_t c = 0; c < 5; ++c) m.set(0, c);
  for (std::size_t r = 3; r < 6; ++r) m.set(r, 4);
  const auto out = largest_component(m);
  CHECK(out.count() == 5);
  CHECK(out.at(0, 0));
  CHECK_FALSE(out.at(3, 4));

  BinaryMask one(4, 4, Frame::kAttention);
  one.set(1, 1);
  one.set(1, 2);
  one.set(2, 2);
  CHECK(largest_component(one) == one);

  BinaryMask diag(3, 3, Frame::kAttention);
  diag.set(0, 0);
  diag.set(1, 1);
  CHECK(largest_component(diag).count() == 1);
  CHECK(largest_component(diag).at(0, 0));

  expect_code(ErrorCode::kEmptyMask, [] { largest_component(BinaryMask(3, 3, Frame::kAttention)); });
}

TEST_CASE("largest component matches a flood-fill enumeration") {
  Rng rng(2);
  std::bernoulli_distribution on(0.45);
  for (int trial = 0; trial < 1000; ++trial) {
    BinaryMask m(16, 16, Frame::kAttention);
    for (std::size_t r = 0; r < 16; ++r)
      for (std::size_t c = 0; c < 16; ++c) m.set(r, c, on(rng));
    m.set(static_cast<std::size_t>(trial) % 16, 7);
    const auto comps = flood_components(m);
    // Components come out in order of their first raster cell, so the first
    // maximum is the tie winner.
    std::size_t best = 0;
    for (std::size_t i = 1; i < comps.size(); ++i) {
      if (comps[i].size() > comps[best].size()) best = i;
    }
    BinaryMask expected(16, 16, Frame::kAttention);
    for (std::size_t i : comps[best]) expected.set(i / 16, i % 16);
    REQUIRE(largest_component(m) == expected);
  }
}

TEST_CASE("sample point maps a cell centre to the image frame") {
  BinaryMask m(16, 16, Frame::kAttention);
  m.set(3, 5);
  Rng rng(0);
  const auto p = sample_point(m, {512, 512}, rng, Polarity::kNegative, 4);
  CHECK(p.x() == 176.0);
  CHECK(p.y() == 112.0);
  CHECK(p.polarity() == Polarity::kNegative);
  CHECK(p.source_token() == 4);
  expect_code(ErrorCode::kEmptyMask, [] {
    Rng r(0);
    sample_point(BinaryMask(16, 16, Frame::kAttention), {512, 512}, r, Polarity::kPositive, 0);
  });
}

TEST_CASE("sample point replays under a fixed seed") {
  BinaryMask m(16, 16, Frame::kAttention);
  for (std::size_t c = 0; c < 16; ++c) m.set(8, c);
  Rng a(77), b(77);
  for (int i = 0; i < 20; ++i) {
    CHECK(sample_point(m, {640, 480}, a, Polarity::kPositive, 0) ==
          sample_point(m, {640, 480}, b, Polarity::kPositive, 0));
  }
}

TEST_CASE("sample point is uniform over the region") {
  BinaryMask m(16, 16, Frame::kAttention);
  for (std::size_t c = 2; c < 12; ++c) m.set(5, c);
  Rng rng(3);
  std::map<double, int> hits;
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++hits[sample_point(m, {160, 160}, rng, Polarity::kPositive, 0).x()];
  REQUIRE(hits.size() == 10);
  const double mean = n / 10.0;
  const double sd = std::sqrt(n * 0.1 * 0.9);
  for (auto [x, k] : hits) {
    CAPTURE(x);
    CHECK(std::abs(k - mean) <= 3.0 * sd);
  }
}

TEST_CASE("points cannot be built outside the image") {
  expect_code(ErrorCode::kInvalidPrompt, [] { Point::in_image(512.0, 3.0, {512, 512}, Polarity::kPositive, 0); });
  expect_code(ErrorCode::kInvalidPrompt, [] { Point::in_image(-0.5, 3.0, {512, 512}, Polarity::kPositive, 0); });
  expect_code(ErrorCode::kIndexOutOfRange,
              [] { Point::from_cell({16, 0}, {16, 16}, {512, 512}, Polarity::kPositive, 0); });
  const auto p = Point::from_cell({15, 15}, {16, 16}, {100, 60}, Polarity::kPositive, 0);
  CHECK(p.x() < 100.0);
  CHECK(p.y() < 60.0);
}

TEST_CASE("positives cluster the root with its attributes") {
  const auto parsed = textgraph::parse_expression("the boy in a blue sweatshirt holding a donut", kParser);
  const auto maps = tiled_maps(parsed);
  const ImageSize image{512, 512};
  Rng rng(4);
  const auto& boy = parsed.entities[0];
  const auto pts = cluster_positive(boy, maps, image, rng);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].source_token() == boy.root.index);
  CHECK(pts[1].source_token() == boy.attribute_nouns[0].index);
  CHECK(pts[2].source_token() == boy.adjectives[0].index);
  for (const auto& p : pts) {
    CHECK(p.polarity() == Polarity::kPositive);
    CHECK(inside(p, threshold_mask(maps.at(p.source_token())), image));
  }

  const auto& donut = parsed.entities[1];
  const auto two = cluster_positive(donut, maps, image, rng);
  REQUIRE(two.size() == 2);
  CHECK(two[0].source_token() == donut.root.index);
  CHECK(two[1].source_token() == donut.root.index);

  const auto single = cluster_positive(boy, maps, image, rng, kDefaultThreshold, false);
  REQUIRE(single.size() == 1);
  CHECK(single[0].source_token() == boy.root.index);
}

TEST_CASE("positive points stay inside their source regions") {
  const auto parsed = textgraph::parse_expression("a small red ball beside a big green cup", kParser);
  const ImageSize image{300, 200};
  Rng shapes(5);
  std::uniform_int_distribution<std::size_t> pos(0, 12);
  for (int trial = 0; trial < 100; ++trial) {
    TokenMaps maps;
    for (std::size_t t : parsed.concept_tokens()) {
      const std::size_t r = pos(shapes), c = pos(shapes);
      maps.emplace(t, box_map(t, r, r + 3, c, c + 4));
    }
    Rng rng(static_cast<std::uint64_t>(trial));
    for (const auto& e : parsed.entities) {
      for (const auto& p : cluster_positive(e, maps, image, rng)) {
        REQUIRE(inside(p, threshold_mask(maps.at(p.source_token())), image));
      }
    }
  }
}

TEST_CASE("empty token maps propagate with the token") {
  const auto parsed = textgraph::parse_expression("a red ball", kParser);
  auto maps = tiled_maps(parsed);
  const std::size_t adj = parsed.entities[0].adjectives[0].index;
  maps[adj] = avg_of(RealGrid(16, 16, 0.0), adj);
  Rng rng(0);
  try {
    cluster_positive(parsed.entities[0], maps, {64, 64}, rng);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::kDegenerateMap || e.code() == ErrorCode::kEmptyMask));
    CHECK(std::string(e.what()).find(std::to_string(adj)) != std::string::npos);
  }
}

TEST_CASE("two entities exclude each other") {
  const auto parsed = textgraph::parse_expression("the boy in a blue sweatshirt holding a donut", kParser);
  const auto maps = tiled_maps(parsed);
  Rng rng(6);
  const auto res = build_mask_prompts(parsed, maps, {512, 512}, rng);
  REQUIRE(res.prompts.size() == 2);
  CHECK(res.skipped.empty());
  const auto& boy = res.prompts[0];
  const auto& donut = res.prompts[1];
  CHECK(boy.label == parsed.entities[0].label);
  CHECK(donut.label == "donut");
  CHECK(boy.positives.size() == 3);
  CHECK(donut.positives.size() == 2);
  REQUIRE(boy.negatives.size() == donut.positives.size());
  for (std::size_t i = 0; i < boy.negatives.size(); ++i) {
    CHECK(boy.negatives[i] == donut.positives[i].with_polarity(Polarity::kNegative));
  }
  REQUIRE(donut.negatives.size() == boy.positives.size());
  for (std::size_t i = 0; i < donut.negatives.size(); ++i) {
    CHECK(donut.negatives[i] == boy.positives[i].with_polarity(Polarity::kNegative));
  }
}

TEST_CASE("negative algebra for two to six entities") {
  const std::vector<std::string> nouns = {"cat", "dog", "horse", "cup", "ball", "boat"};
  for (std::size_t k = 2; k <= 6; ++k) {
    std::string text = "a " + nouns[0];
    for (std::size_t i = 1; i < k; ++i) text += " beside a " + nouns[i];
    const auto parsed = textgraph::parse_expression(text, kParser);
    REQUIRE(parsed.entities.size() == k);
    Rng rng(k);
    const auto res = build_mask_prompts(parsed, tiled_maps(parsed), {256, 256}, rng);
    REQUIRE(res.prompts.size() == k);
    for (std::size_t i = 0; i < k; ++i) {
      std::set<std::pair<double, double>> others;
      for (std::size_t j = 0; j < k; ++j) {
        if (j != i) {
          const auto c = coords(res.prompts[j].positives);
          others.insert(c.begin(), c.end());
        }
      }
      CAPTURE(k);
      CAPTURE(i);
      CHECK(coords(res.prompts[i].negatives) == others);
      std::vector<std::pair<double, double>> overlap;
      const auto own = coords(res.prompts[i].positives);
      std::set_intersection(own.begin(), own.end(), others.begin(), others.end(), std::back_inserter(overlap));
      CHECK(overlap.empty());
      for (const auto& p : res.prompts[i].negatives) CHECK(p.polarity() == Polarity::kNegative);
    }
  }
}

TEST_CASE("a single entity gets one to three background negatives") {
  const auto parsed = textgraph::parse_expression("cat", kParser);
  const auto maps = tiled_maps(parsed);
  const ImageSize image{128, 96};
  std::set<std::size_t> counts;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto res = build_mask_prompts(parsed, maps, image, rng);
    REQUIRE(res.prompts.size() == 1);
    const auto& p = res.prompts[0];
    CHECK(p.positives.size() >= 2);
    REQUIRE(p.negatives.size() >= 1);
    REQUIRE(p.negatives.size() <= 3);
    counts.insert(p.negatives.size());
    const auto full = upscale_to_image(res.root_masks.at(0), image);
    for (const auto& n : p.negatives) {
      CHECK(n.polarity() == Polarity::kNegative);
      CHECK_FALSE(full.at(n.pixel_y(), n.pixel_x()));
    }
  }
  CHECK(counts == std::set<std::size_t>{1, 2, 3});
}

TEST_CASE("background negatives need exterior cells") {
  BinaryMask full(4, 4, Frame::kAttention);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) full.set(r, c);
  Rng rng(0);
  const std::vector<std::vector<Point>> pos = {{Point::in_image(1, 1, {8, 8}, Polarity::kPositive, 0)}};
  expect_code(ErrorCode::kNoExteriorCells, [&] { bind_negatives(pos, 0, full, {8, 8}, rng); });
}

TEST_CASE("degenerate entities are skipped and reported") {
  const auto parsed = textgraph::parse_expression("a cat beside a dog", kParser);
  auto maps = tiled_maps(parsed);
  const std::size_t dog = parsed.entities[1].root.index;
  maps[dog] = avg_of(RealGrid(16, 16, 0.0), dog);
  Rng rng(8);
  const auto res = build_mask_prompts(parsed, maps, {64, 64}, rng);
  REQUIRE(res.prompts.size() == 1);
  CHECK(res.prompts[0].entity_id == 0);
  REQUIRE(res.skipped.size() == 1);
  CHECK(res.skipped[0].entity_id == 1);
  CHECK(res.skipped[0].label == "dog");
  CHECK(res.skipped[0].code == ErrorCode::kDegenerateMap);
  // The surviving entity is alone, so it falls back to background negatives.
  CHECK(res.prompts[0].negatives.size() >= 1);
  CHECK(res.prompts[0].negatives.size() <= 3);
}

TEST_CASE("disabling the regularisers") {
  const auto parsed = textgraph::parse_expression("a red ball beside a cup", kParser);
  const auto maps = tiled_maps(parsed);
  MiningOptions opt;
  opt.use_r1 = false;
  opt.use_r2 = false;
  Rng rng(9);
  const auto res = build_mask_prompts(parsed, maps, {64, 64}, rng, opt);
  REQUIRE(res.prompts.size() == 2);
  for (const auto& p : res.prompts) {
    CHECK(p.positives.size() == 1);
    CHECK(p.negatives.empty());
  }
}

TEST_CASE("fresh negatives come from the other entities' maps") {
  const auto parsed = textgraph::parse_expression("a cat beside a dog", kParser);
  const auto maps = tiled_maps(parsed);
  MiningOptions opt;
  opt.fresh_negatives = true;
  Rng rng(10);
  const auto res = build_mask_prompts(parsed, maps, {64, 64}, rng, opt);
  REQUIRE(res.prompts.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& other = parsed.entities[1 - i];
    REQUIRE_FALSE(res.prompts[i].negatives.empty());
    for (const auto& n : res.prompts[i].negatives) {
      CHECK(n.polarity() == Polarity::kNegative);
      CHECK(inside(n, threshold_mask(maps.at(other.root.index)), {64, 64}));
    }
  }
}

TEST_CASE("blob scene prompts land on their objects") {
  const auto parsed = textgraph::parse_expression("a cat beside a dog beside a horse", kParser);
  REQUIRE(parsed.entities.size() == 3);
  const std::vector<std::array<double, 3>> blobs = {{3.0, 3.0, 1.5}, {12.0, 4.0, 1.5}, {8.0, 12.0, 1.5}};
  const auto attention = toy::blob_attention_fixture(16, 16, blobs);
  TokenMaps maps;
  for (std::size_t e = 0; e < 3; ++e) {
    const std::size_t t = parsed.entities[e].root.index;
    maps.emplace(t, avg_of(diffusion::minmax_normalize(attention[e]), t));
  }
  const ImageSize image{256, 256};
  Rng rng(11);
  const auto res = build_mask_prompts(parsed, maps, image, rng);
  REQUIRE(res.prompts.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    for (const auto& p : res.prompts[e].positives) {
      const double cx = blobs[e][1] * 16.0, cy = blobs[e][0] * 16.0;
      CHECK(std::hypot(p.x() - cx, p.y() - cy) < 3.0 * blobs[e][2] * 16.0);
    }
  }
}

TEST_CASE("mining is deterministic and dumps as json") {
  const auto parsed = textgraph::parse_expression("the boy in a blue sweatshirt holding a donut", kParser);
  const auto maps = tiled_maps(parsed);
  Rng a(12), b(12);
  const auto x = build_mask_prompts(parsed, maps, {512, 512}, a);
  const auto y = build_mask_prompts(parsed, maps, {512, 512}, b);
  CHECK(x.prompts == y.prompts);
  const auto dump = dump_prompts(x.prompts, 12);
  CHECK(dump == dump_prompts(y.prompts, 12));
  const auto j = nlohmann::json::parse(dump);
  REQUIRE(j.size() == 2);
  CHECK(j[0]["entity_id"] == 0);
  CHECK(j[1]["label"] == "donut");
  CHECK(j[0]["seed"] == 12);
  REQUIRE(j[0]["positives"].size() == x.prompts[0].positives.size());
  CHECK(j[0]["positives"][0][0].get<double>() == x.prompts[0].positives[0].x());
  CHECK(j[0]["negatives"].size() == x.prompts[0].negatives.size());
}
