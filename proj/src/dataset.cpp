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

#include "anyword/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "anyword/rle.hpp"
#include "anyword/rng.hpp"

namespace anyword::dataset {
namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
}

std::string id_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw Error(ErrorCode::kInvalidArgument, "identifier must be a string or an integer");
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::kInvalidArgument, std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("field \"") + key + "\": " + e.what());
  }
}

EncodedMask rle_from_json(const json& m) {
  const auto size = field<std::vector<std::size_t>>(m, "size");
  if (size.size() != 2) throw Error(ErrorCode::kInvalidArgument, "mask size must be [height, width]");
  EncodedMask out;
  out.height = size[0];
  out.width = size[1];
  const json& counts = m.at("counts");
  out.counts = counts.is_string() ? rle::decompress(counts.get<std::string>()) : counts.get<std::vector<std::uint32_t>>();
  out.decode();
  return out;
}

BinaryMask coco_segmentation(const json& seg, std::size_t height, std::size_t width) {
  if (seg.is_object()) {
    BinaryMask mask = rle_from_json(seg).decode();
    if (mask.rows() != height || mask.cols() != width) {
      throw Error(ErrorCode::kShapeMismatch, "annotation mask does not match its image");
    }
    return mask;
  }
  if (!seg.is_array()) throw Error(ErrorCode::kInvalidArgument, "unsupported segmentation");
  BinaryMask mask(height, width, Frame::kImage);
  for (const auto& poly : seg) mask = mask_union(mask, rle::rasterize_polygon(poly.get<std::vector<double>>(), height, width));
  return mask;
}

struct CocoIndex {
  struct ImageInfo {
    std::string file;
    std::size_t height = 0;
    std::size_t width = 0;
  };
  std::vector<std::string> image_order;
  std::map<std::string, ImageInfo> images;
  std::map<std::string, std::string> categories;
  std::map<std::string, json> annotations;
  std::map<std::string, std::vector<std::string>> annotations_by_image;
};

CocoIndex index_coco(const json& j) {
  CocoIndex idx;
  for (const auto& im : j.at("images")) {
    const std::string id = id_string(im.at("id"));
    idx.image_order.push_back(id);
    idx.images[id] = {field<std::string>(im, "file_name"), field<std::size_t>(im, "height"), field<std::size_t>(im, "width")};
  }
  if (j.contains("categories")) {
    for (const auto& c : j.at("categories")) idx.categories[id_string(c.at("id"))] = field<std::string>(c, "name");
  }
  if (j.contains("annotations")) {
    for (const auto& a : j.at("annotations")) {
      const std::string id = id_string(a.at("id"));
      idx.annotations[id] = a;
      idx.annotations_by_image[id_string(a.at("image_id"))].push_back(id);
    }
  }
  return idx;
}

BinaryMask annotation_mask(const CocoIndex& idx, const std::string& ann_id) {
  auto it = idx.annotations.find(ann_id);
  if (it == idx.annotations.end()) throw Error(ErrorCode::kInvalidArgument, "unknown annotation " + ann_id);
  const auto& info = idx.images.at(id_string(it->second.at("image_id")));
  return coco_segmentation(it->second.at("segmentation"), info.height, info.width);
}

const CocoIndex::ImageInfo& image_info(const CocoIndex& idx, const std::string& id) {
  auto it = idx.images.find(id);
  if (it == idx.images.end()) throw Error(ErrorCode::kInvalidArgument, "unknown image " + id);
  return it->second;
}

std::string article(const std::string& next) {
  return !next.empty() && std::string_view("aeiou").find(next[0]) != std::string_view::npos ? "an" : "a";
}

std::string join_phrases(const std::vector<std::string>& phrases) {
  std::string out;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (i > 0) out += (i + 1 == phrases.size()) ? " and " : ", ";
    out += phrases[i];
  }
  return out;
}

const std::vector<std::string>& vocab_nouns() {
  static const std::vector<std::string> nouns = {"ball", "box",    "cup",   "car",  "boat", "dog",  "cat",
                                                 "bird", "flower", "bucket", "lamp", "plate", "stone", "cushion",
                                                 "coin", "bike",   "bus",   "truck", "horse"};
  return nouns;
}

const std::vector<std::string>& oov_nouns() {
  static const std::vector<std::string> nouns = {"zorblat", "quibbet", "flornix", "grommel", "vantle", "skibber"};
  return nouns;
}

// Single-word synonyms the rule parser reads as the head noun of the phrase.
const std::map<std::string, std::vector<std::string>>& usable_aliases() {
  static const auto table = [] {
    std::map<std::string, std::vector<std::string>> out;
    textgraph::RuleParser parser;
    for (const auto& [noun, syns] : textgraph::builtin_synonyms()) {
      for (const auto& s : syns) {
        if (s.find(' ') != std::string::npos) continue;
        const auto parsed = parser.parse("a red " + s);
        if (parsed.entities.size() == 1 && parsed.entities[0].root.surface == s &&
            parsed.entities[0].attribute_nouns.empty()) {
          out[noun].push_back(s);
        }
      }
    }
    return out;
  }();
  return table;
}

}  // namespace

EncodedMask EncodedMask::from_mask(const BinaryMask& mask) { return {mask.rows(), mask.cols(), rle::encode(mask)}; }

BinaryMask EncodedMask::decode() const { return rle::decode(counts, height, width); }

Image DatasetRecord::load_image() const {
  Image img = image ? *image : anyword::load_image(image_path);
  for (const auto& g : gt) {
    if (g.mask.height != img.height || g.mask.width != img.width) {
      throw Error(ErrorCode::kShapeMismatch, "record " + id + ": mask for \"" + g.phrase + "\" is " +
                                                 std::to_string(g.mask.width) + "x" + std::to_string(g.mask.height) +
                                                 ", image is " + std::to_string(img.width) + "x" +
                                                 std::to_string(img.height));
    }
  }
  return img;
}

const std::vector<PaletteColor>& palette() {
  static const std::vector<PaletteColor> colors = {
      {"red", {0.86f, 0.12f, 0.12f}},   {"green", {0.15f, 0.70f, 0.20f}}, {"blue", {0.15f, 0.25f, 0.85f}},
      {"yellow", {0.95f, 0.88f, 0.15f}}, {"orange", {0.98f, 0.55f, 0.10f}}, {"purple", {0.55f, 0.20f, 0.70f}},
      {"pink", {0.98f, 0.62f, 0.78f}},  {"brown", {0.45f, 0.27f, 0.10f}}, {"white", {0.97f, 0.97f, 0.97f}},
      {"black", {0.05f, 0.05f, 0.05f}},
  };
  return colors;
}

json scene_to_json(const toy::Scene& scene) {
  json objects = json::array();
  for (const auto& o : scene.objects) {
    objects.push_back({{"noun", o.noun},
                       {"aliases", o.aliases},
                       {"adjective", o.adjective},
                       {"color", o.color},
                       {"cx", o.cx},
                       {"cy", o.cy},
                       {"sx", o.sx},
                       {"sy", o.sy}});
  }
  return {{"width", scene.size.width},
          {"height", scene.size.height},
          {"background", scene.background},
          {"objects", objects}};
}

toy::Scene scene_from_json(const json& j) {
  toy::Scene s;
  s.size = {field<std::size_t>(j, "width"), field<std::size_t>(j, "height")};
  if (j.contains("background")) s.background = field<std::array<float, 3>>(j, "background");
  for (const auto& o : j.at("objects")) {
    toy::SceneObject obj;
    obj.noun = o.value("noun", "");
    obj.aliases = o.value("aliases", std::vector<std::string>{});
    obj.adjective = o.value("adjective", "");
    obj.color = field<std::array<float, 3>>(o, "color");
    obj.cx = field<double>(o, "cx");
    obj.cy = field<double>(o, "cy");
    obj.sx = field<double>(o, "sx");
    obj.sy = field<double>(o, "sy");
    if (!(obj.sx > 0.0 && obj.sy > 0.0)) throw Error(ErrorCode::kInvalidArgument, "object extents must be positive");
    s.objects.push_back(std::move(obj));
  }
  return s;
}

toy::Scene load_scene(const std::filesystem::path& path) { return scene_from_json(read_json_file(path)); }

void save_scene(const toy::Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << scene_to_json(scene).dump(2) << '\n';
}

std::filesystem::path scene_sidecar(const std::filesystem::path& image) {
  return image.string() + ".scene.json";
}

toy::Scene estimate_scene(const Image& image, std::size_t min_pixels) {
  if (image.empty() || image.channels < 3) throw Error(ErrorCode::kInvalidArgument, "scene estimation needs an RGB image");
  const std::size_t W = image.width;
  const std::size_t H = image.height;
  auto rgb = [&](std::size_t x, std::size_t y) {
    return std::array<float, 3>{image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2)};
  };
  auto close = [](const std::array<float, 3>& a, const std::array<float, 3>& b) {
    return std::max({std::fabs(a[0] - b[0]), std::fabs(a[1] - b[1]), std::fabs(a[2] - b[2])}) <= 0.05f;
  };

  std::map<std::array<int, 3>, std::size_t> histogram;
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const auto c = rgb(x, y);
      ++histogram[{static_cast<int>(std::lround(c[0] * 255)), static_cast<int>(std::lround(c[1] * 255)),
                   static_cast<int>(std::lround(c[2] * 255))}];
    }
  }
  const auto mode = std::max_element(histogram.begin(), histogram.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  toy::Scene scene;
  scene.size = image.size();
  scene.background = {mode->first[0] / 255.0f, mode->first[1] / 255.0f, mode->first[2] / 255.0f};

  std::vector<std::uint8_t> seen(W * H, 0);
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  std::vector<std::pair<std::size_t, std::size_t>> region;
  for (std::size_t y0 = 0; y0 < H; ++y0) {
    for (std::size_t x0 = 0; x0 < W; ++x0) {
      if (seen[y0 * W + x0]) continue;
      const auto seed = rgb(x0, y0);
      if (close(seed, scene.background)) continue;
      region.clear();
      stack.push_back({x0, y0});
      seen[y0 * W + x0] = 1;
      while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        region.push_back({x, y});
        auto visit = [&](std::size_t xx, std::size_t yy) {
          if (!seen[yy * W + xx] && close(rgb(xx, yy), seed)) {
            seen[yy * W + xx] = 1;
            stack.push_back({xx, yy});
          }
        };
        if (x > 0) visit(x - 1, y);
        if (x + 1 < W) visit(x + 1, y);
        if (y > 0) visit(x, y - 1);
        if (y + 1 < H) visit(x, y + 1);
      }
      if (region.size() < min_pixels) continue;
      std::size_t minx = W, maxx = 0, miny = H, maxy = 0;
      for (const auto& [x, y] : region) {
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
      }
      toy::SceneObject o;
      o.color = seed;
      o.cx = (static_cast<double>(minx) + static_cast<double>(maxx) + 1.0) / 2.0;
      o.cy = (static_cast<double>(miny) + static_cast<double>(maxy) + 1.0) / 2.0;
      o.sx = static_cast<double>(maxx - minx + 1) / (2.0 * toy::kObjectExtent);
      o.sy = static_cast<double>(maxy - miny + 1) / (2.0 * toy::kObjectExtent);
      double best = 1e30;
      for (const auto& p : palette()) {
        double d = 0.0;
        for (int c = 0; c < 3; ++c) d += (p.rgb[c] - seed[c]) * (p.rgb[c] - seed[c]);
        if (d < best) {
          best = d;
          o.adjective = p.name;
        }
      }
      scene.objects.push_back(std::move(o));
    }
  }
  return scene;
}

void bind_scene_nouns(toy::Scene& scene, const textgraph::ParsedExpression& parsed) {
  const auto already = toy::match_entities(scene, parsed);
  std::vector<std::size_t> open_entities;
  for (std::size_t e = 0; e < parsed.entities.size(); ++e) {
    if (!already[e]) open_entities.push_back(e);
  }
  auto free_object = [&](std::size_t i) { return scene.objects[i].noun.empty(); };

  std::vector<std::size_t> unbound;
  for (std::size_t e : open_entities) {
    const auto& ent = parsed.entities[e];
    bool bound = false;
    for (const auto& adj : ent.adjectives) {
      for (std::size_t i = 0; i < scene.objects.size() && !bound; ++i) {
        if (free_object(i) && lower(scene.objects[i].adjective) == lower(adj.surface)) {
          scene.objects[i].noun = lower(ent.root.surface);
          bound = true;
        }
      }
      if (bound) break;
    }
    if (!bound) unbound.push_back(e);
  }

  std::vector<std::size_t> remaining;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    if (free_object(i)) remaining.push_back(i);
  }
  std::stable_sort(remaining.begin(), remaining.end(), [&](std::size_t a, std::size_t b) {
    return scene.objects[a].sx * scene.objects[a].sy > scene.objects[b].sx * scene.objects[b].sy;
  });
  for (std::size_t k = 0; k < unbound.size() && k < remaining.size(); ++k) {
    scene.objects[remaining[k]].noun = lower(parsed.entities[unbound[k]].root.surface);
  }
}

std::vector<DatasetRecord> synthetic_dataset(const SyntheticOptions& options) {
  if (options.min_objects == 0 || options.min_objects > options.max_objects) {
    throw Error(ErrorCode::kInvalidArgument, "object count range is empty");
  }
  if (options.max_objects > palette().size()) throw Error(ErrorCode::kInvalidArgument, "too many objects per scene");
  if (!(options.min_sigma > 0.0 && options.min_sigma <= options.max_sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "bad sigma range");
  }
  const auto& aliases = usable_aliases();
  std::vector<DatasetRecord> records;
  records.reserve(options.count);
  for (std::size_t r = 0; r < options.count; ++r) {
    Rng rng(derive_seed(options.seed, 0x51a0000 + r));
    std::uniform_int_distribution<std::size_t> count(options.min_objects, options.max_objects);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n = count(rng);

    toy::Scene scene;
    scene.size = options.size;
    std::vector<std::size_t> colors(palette().size());
    for (std::size_t i = 0; i < colors.size(); ++i) colors[i] = i;
    std::shuffle(colors.begin(), colors.end(), rng);
    std::vector<std::string> nouns = vocab_nouns();
    std::shuffle(nouns.begin(), nouns.end(), rng);
    std::vector<std::string> strange = oov_nouns();
    std::shuffle(strange.begin(), strange.end(), rng);

    std::vector<bool> bare(n);
    double shrink = 1.0;
    for (std::size_t attempt = 0;; ++attempt) {
      scene.objects.clear();
      for (std::size_t i = 0; i < n; ++i) {
        bool placed = false;
        for (int tries = 0; tries < 200 && !placed; ++tries) {
          toy::SceneObject o;
          o.sx = shrink * (options.min_sigma + unit(rng) * (options.max_sigma - options.min_sigma));
          o.sy = shrink * (options.min_sigma + unit(rng) * (options.max_sigma - options.min_sigma));
          const double mx = toy::kObjectExtent * o.sx + 2.0;
          const double my = toy::kObjectExtent * o.sy + 2.0;
          const double W = static_cast<double>(options.size.width);
          const double H = static_cast<double>(options.size.height);
          if (2 * mx >= W || 2 * my >= H) continue;
          o.cx = mx + unit(rng) * (W - 2 * mx);
          o.cy = my + unit(rng) * (H - 2 * my);
          bool clear = true;
          for (const auto& q : scene.objects) {
            const double gap = toy::kObjectExtent * (std::max(o.sx, o.sy) + std::max(q.sx, q.sy)) + 8.0;
            if (std::hypot(o.cx - q.cx, o.cy - q.cy) < gap) clear = false;
          }
          if (!clear) continue;
          scene.objects.push_back(std::move(o));
          placed = true;
        }
        if (!placed) break;
      }
      if (scene.objects.size() == n) break;
      shrink *= 0.9;
      if (attempt > 50) throw Error(ErrorCode::kInvalidArgument, "cannot place synthetic objects");
    }

    std::size_t next_strange = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& o = scene.objects[i];
      const auto& pc = palette()[colors[i]];
      o.color = pc.rgb;
      o.adjective = pc.name;
      if (unit(rng) < options.oov_rate && next_strange < strange.size()) {
        o.noun = strange[next_strange++];
      } else {
        o.noun = nouns[i];
        auto it = aliases.find(o.noun);
        if (it != aliases.end()) o.aliases = it->second;
      }
      bare[i] = unit(rng) < options.bare_rate;
    }

    DatasetRecord rec;
    rec.id = "synthetic-" + std::to_string(options.seed) + "-" + std::to_string(r);
    rec.image_path = rec.id + ".png";
    rec.split = "synthetic";
    rec.image = toy::render_scene(scene);

    auto describe = [&](std::size_t i, std::size_t variant) {
      const auto& o = scene.objects[i];
      std::string noun = o.noun;
      if (variant > 0 && !o.aliases.empty()) noun = o.aliases[(variant - 1) % o.aliases.size()];
      std::string body = bare[i] ? noun : o.adjective + " " + noun;
      if (variant % 2 == 1) return "the " + body;
      return article(body) + " " + body;
    };
    for (std::size_t v = 0; v < std::max<std::size_t>(1, options.variants); ++v) {
      std::vector<std::string> phrases;
      for (std::size_t i = 0; i < n; ++i) phrases.push_back(describe(i, v));
      if (v % 3 == 2) std::reverse(phrases.begin(), phrases.end());
      rec.expressions.push_back(join_phrases(phrases));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& o = scene.objects[i];
      rec.gt.push_back({bare[i] ? o.noun : o.adjective + " " + o.noun,
                        EncodedMask::from_mask(toy::object_mask(scene, i))});
    }
    rec.scene = std::move(scene);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<DatasetRecord> read_native(const json& j, const std::filesystem::path& root) {
  std::vector<DatasetRecord> out;
  for (const auto& r : j.at("records")) {
    DatasetRecord rec;
    rec.id = id_string(r.at("id"));
    std::filesystem::path p = field<std::string>(r, "image");
    rec.image_path = p.is_absolute() ? p : root / p;
    rec.expressions = r.value("expressions", std::vector<std::string>{});
    rec.split = r.value("split", "");
    if (r.contains("scene")) rec.scene = scene_from_json(r.at("scene"));
    for (const auto& g : r.value("gt", json::array())) {
      rec.gt.push_back({field<std::string>(g, "phrase"), rle_from_json(g.at("mask"))});
    }
    out.push_back(std::move(rec));
  }
  return out;
}

json write_native(const std::vector<DatasetRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) {
    json gt = json::array();
    for (const auto& g : r.gt) {
      gt.push_back({{"phrase", g.phrase},
                    {"mask", {{"size", {g.mask.height, g.mask.width}}, {"counts", rle::compress(g.mask.counts)}}}});
    }
    json rec = {{"id", r.id},
                {"image", r.image_path.string()},
                {"expressions", r.expressions},
                {"split", r.split},
                {"gt", gt}};
    if (r.scene) rec["scene"] = scene_to_json(*r.scene);
    arr.push_back(std::move(rec));
  }
  return {{"records", arr}};
}

std::vector<DatasetRecord> read_coco(const json& j, const std::filesystem::path& image_root) {
  const CocoIndex idx = index_coco(j);
  std::vector<DatasetRecord> out;
  for (const auto& id : idx.image_order) {
    const auto& info = image_info(idx, id);
    DatasetRecord rec;
    rec.id = id;
    rec.image_path = image_root / info.file;
    rec.split = j.contains("info") ? j["info"].value("split", "") : "";
    auto it = idx.annotations_by_image.find(id);
    if (it != idx.annotations_by_image.end()) {
      for (const auto& ann_id : it->second) {
        const auto& a = idx.annotations.at(ann_id);
        const std::string cat = id_string(a.at("category_id"));
        auto c = idx.categories.find(cat);
        rec.gt.push_back({c == idx.categories.end() ? cat : c->second,
                          EncodedMask::from_mask(annotation_mask(idx, ann_id))});
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<DatasetRecord> read_refcoco(const json& j, const std::filesystem::path& image_root) {
  const CocoIndex idx = index_coco(j);
  std::vector<DatasetRecord> out;
  for (const auto& ref : j.at("refs")) {
    const std::string image_id = id_string(ref.at("image_id"));
    const auto& info = image_info(idx, image_id);
    DatasetRecord rec;
    rec.id = ref.contains("ref_id") ? id_string(ref.at("ref_id")) : image_id + "-" + std::to_string(out.size());
    rec.image_path = image_root / info.file;
    rec.split = ref.value("split", "");
    for (const auto& s : ref.at("sentences")) {
      rec.expressions.push_back(s.is_string() ? s.get<std::string>() : field<std::string>(s, "sent"));
    }
    if (rec.expressions.empty()) throw Error(ErrorCode::kInvalidArgument, "ref " + rec.id + " has no sentences");
    std::vector<std::string> anns;
    if (ref.contains("ann_ids")) {
      for (const auto& a : ref.at("ann_ids")) anns.push_back(id_string(a));
    } else if (ref.contains("ann_id") && !ref.at("ann_id").is_null()) {
      anns.push_back(id_string(ref.at("ann_id")));
    }
    anns.erase(std::remove(anns.begin(), anns.end(), "-1"), anns.end());
    if (!anns.empty()) {
      BinaryMask m(info.height, info.width, Frame::kImage);
      for (const auto& a : anns) m = mask_union(m, annotation_mask(idx, a));
      rec.gt.push_back({rec.expressions.front(), EncodedMask::from_mask(m)});
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<DatasetRecord> read_grounded(const json& j, const std::filesystem::path& image_root) {
  const CocoIndex idx = index_coco(j);
  std::vector<DatasetRecord> out;
  for (const auto& cap : j.at("captions")) {
    const std::string image_id = id_string(cap.at("image_id"));
    const auto& info = image_info(idx, image_id);
    DatasetRecord rec;
    rec.id = cap.contains("id") ? id_string(cap.at("id")) : image_id + "-" + std::to_string(out.size());
    rec.image_path = image_root / info.file;
    rec.split = cap.value("split", "");
    const std::string caption = field<std::string>(cap, "caption");
    rec.expressions.push_back(caption);
    for (const auto& ph : cap.at("phrases")) {
      const auto span = field<std::vector<std::size_t>>(ph, "span");
      if (span.size() != 2 || span[0] >= span[1] || span[1] > caption.size()) {
        throw Error(ErrorCode::kInvalidArgument, "bad phrase span in caption " + rec.id);
      }
      BinaryMask m(info.height, info.width, Frame::kImage);
      for (const auto& a : ph.at("ann_ids")) m = mask_union(m, annotation_mask(idx, id_string(a)));
      rec.gt.push_back({caption.substr(span[0], span[1] - span[0]), EncodedMask::from_mask(m)});
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<DatasetRecord> load_dataset(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.empty()) throw Error(ErrorCode::kInvalidArgument, "empty dataset spec");

  const std::string kind = parts[0];
  if (kind == "synthetic") {
    SyntheticOptions opt;
    try {
      if (parts.size() > 1) opt.count = std::stoul(parts[1]);
      if (parts.size() > 2) opt.seed = std::stoull(parts[2]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "expected synthetic:N[:SEED], got " + spec);
    }
    if (parts.size() > 3) throw Error(ErrorCode::kInvalidArgument, "expected synthetic:N[:SEED], got " + spec);
    return synthetic_dataset(opt);
  }
  const bool known = kind == "native" || kind == "coco" || kind == "refcoco" || kind == "grounded";
  if (!known) {
    const std::filesystem::path p = spec;
    return read_native(read_json_file(p), p.parent_path());
  }
  if (parts.size() < 2 || parts.size() > 3) {
    throw Error(ErrorCode::kInvalidArgument, "expected " + kind + ":PATH[:IMAGE_ROOT], got " + spec);
  }
  const std::filesystem::path path = parts[1];
  const std::filesystem::path root = parts.size() == 3 ? std::filesystem::path(parts[2]) : path.parent_path();
  const json j = read_json_file(path);
  if (kind == "native") return read_native(j, root);
  if (kind == "coco") return read_coco(j, root);
  if (kind == "refcoco") return read_refcoco(j, root);
  return read_grounded(j, root);
}

std::filesystem::path export_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<DatasetRecord> copy;
  for (const auto& r : records) {
    DatasetRecord c = r;
    c.image_path = r.image_path.filename();
    if (c.image_path.empty()) c.image_path = r.id + ".png";
    save_image(r.load_image(), dir / c.image_path);
    if (r.scene) save_scene(*r.scene, scene_sidecar(dir / c.image_path));
    c.image.reset();
    copy.push_back(std::move(c));
  }
  const auto index = dir / "index.json";
  std::ofstream out(index);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + index.string());
  out << write_native(copy).dump(2) << '\n';
  return index;
}

}  // namespace anyword::dataset
