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

// Benchmark records and the adapters that produce them: a native JSON list,
// COCO-style instance files, refCOCO-style refs, grounded-caption files, and
// a seeded synthetic scene generator that is its own ground truth.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anyword/image.hpp"
#include "anyword/mask.hpp"
#include "anyword/toy.hpp"

namespace anyword::dataset {

// Column-major RLE counts at a stated resolution.
struct EncodedMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint32_t> counts;

  static EncodedMask from_mask(const BinaryMask& mask);
  // Throws kLengthMismatch.
  BinaryMask decode() const;
  bool operator==(const EncodedMask&) const = default;
};

struct GroundTruth {
  std::string phrase;
  EncodedMask mask;
  bool operator==(const GroundTruth&) const = default;
};

struct DatasetRecord {
  std::string id;
  std::filesystem::path image_path;
  // Set for generated records; otherwise the image is read from image_path.
  std::optional<Image> image;
  std::optional<toy::Scene> scene;
  std::vector<std::string> expressions;
  std::vector<GroundTruth> gt;
  std::string split;

  // Loads the image when needed and checks that every mask matches it.
  // Throws kIoError or kShapeMismatch.
  Image load_image() const;
};

nlohmann::json scene_to_json(const toy::Scene& scene);
// Throws kInvalidArgument on malformed input.
toy::Scene scene_from_json(const nlohmann::json& j);
toy::Scene load_scene(const std::filesystem::path& path);
void save_scene(const toy::Scene& scene, const std::filesystem::path& path);
// "<image>.scene.json" next to the image.
std::filesystem::path scene_sidecar(const std::filesystem::path& image);

// Recovers a flat-colour blob scene from an image: the modal colour is the
// background, each remaining 4-connected colour region of at least
// `min_pixels` becomes an object named after its nearest palette colour.
// Nouns are left empty.
toy::Scene estimate_scene(const Image& image, std::size_t min_pixels = 16);

// Gives unnamed objects the nouns of the parsed entities: first by colour
// adjective, then remaining entities to remaining objects by size.
void bind_scene_nouns(toy::Scene& scene, const textgraph::ParsedExpression& parsed);

struct PaletteColor {
  const char* name;
  std::array<float, 3> rgb;
};
const std::vector<PaletteColor>& palette();

struct SyntheticOptions {
  std::size_t count = 50;
  std::uint64_t seed = 0;
  std::size_t min_objects = 1;
  std::size_t max_objects = 4;
  ImageSize size{128, 128};
  double min_sigma = 7.0;
  double max_sigma = 12.0;
  // Probability that an object takes an out-of-vocabulary noun.
  double oov_rate = 0.15;
  // Probability that an object is described without a colour adjective.
  double bare_rate = 0.15;
  // Caption variants per record: the base caption first, then scripted
  // rewrites (synonym nouns, determiners, reordering).
  std::size_t variants = 3;
};

std::vector<DatasetRecord> synthetic_dataset(const SyntheticOptions& options);

// Native format: {"records": [{"id", "image", "expressions", "split",
// "scene"?, "gt": [{"phrase", "mask": {"size": [h, w], "counts": [...] | "..."}}]}]}.
// Relative image paths resolve against `root`.
std::vector<DatasetRecord> read_native(const nlohmann::json& j, const std::filesystem::path& root);
nlohmann::json write_native(const std::vector<DatasetRecord>& records);

// One record per image; phrases are category names, no expressions.
std::vector<DatasetRecord> read_coco(const nlohmann::json& j, const std::filesystem::path& image_root);
// One record per ref; expressions are its sentences; a ref without
// annotations yields a record with no ground truth.
std::vector<DatasetRecord> read_refcoco(const nlohmann::json& j, const std::filesystem::path& image_root);
// One record per caption; each phrase is a character span of the caption
// with the union of its annotations as mask.
std::vector<DatasetRecord> read_grounded(const nlohmann::json& j, const std::filesystem::path& image_root);

// "synthetic:N[:SEED]", or "native|coco|refcoco|grounded:PATH[:IMAGE_ROOT]".
// A bare path is read as native. Throws kInvalidArgument, kIoError.
std::vector<DatasetRecord> load_dataset(const std::string& spec);

// Writes every record image plus scene sidecars and a native index.json
// under `dir`. Returns the index path.
std::filesystem::path export_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& dir);

}  // namespace anyword::dataset
