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

#include "anyword/toy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "anyword/kernels.hpp"
#include "anyword/rng.hpp"

namespace anyword::toy {
namespace {

double unit_jitter(std::uint64_t seed, std::size_t t, std::size_t k, std::size_t p) {
  const std::uint64_t key = (static_cast<std::uint64_t>(t) << 42) ^ (static_cast<std::uint64_t>(k) << 21) ^ p;
  const std::uint64_t h = mix_seed(seed ^ mix_seed(key));
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

// channels x width matrix with orthonormal columns (or rows when width > channels).
std::vector<double> orthonormal(std::uint64_t seed, std::size_t channels, std::size_t width, double scale) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool by_column = channels >= width;
  const std::size_t count = by_column ? width : channels;
  const std::size_t len = by_column ? channels : width;
  std::vector<std::vector<double>> basis;
  while (basis.size() < count) {
    std::vector<double> v(len);
    for (auto& x : v) x = normal(rng);
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < len; ++i) dot += v[i] * b[i];
      for (std::size_t i = 0; i < len; ++i) v[i] -= dot * b[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  std::vector<double> m(channels * width);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t d = 0; d < width; ++d) {
      m[c * width + d] = scale * (by_column ? basis[d][c] : basis[c][d]);
    }
  }
  return m;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

bool word_matches(const std::string& word, const std::string& name) {
  const std::string w = lower(word);
  const std::string n = lower(name);
  return w == n || w == n + "s" || w == n + "es";
}

}  // namespace

void AffineToyConfig::validate() const {
  const std::size_t n = cells();
  if (channels == 0 || n == 0 || width == 0) throw Error(ErrorCode::kShapeMismatch, "toy dimensions must be positive");
  if (mix.size() != channels * channels) throw Error(ErrorCode::kShapeMismatch, "toy mix must be channels x channels");
  if (bias.size() != channels * n) throw Error(ErrorCode::kShapeMismatch, "toy bias must be channels x cells");
  if (projection.size() != channels * width) throw Error(ErrorCode::kShapeMismatch, "toy projection must be channels x width");
  if (weights.size() % n != 0) throw Error(ErrorCode::kShapeMismatch, "toy weights must be tokens x cells");
  if (!concepts.empty() && concepts.size() != tokens()) {
    throw Error(ErrorCode::kShapeMismatch, "toy concepts must be one per token");
  }
  for (const auto& c : concepts) {
    if (!c.empty() && c.size() != width) throw Error(ErrorCode::kShapeMismatch, "toy concept has wrong width");
  }
  for (const auto& g : fixed_attention) {
    if (g.rows() != rows || g.cols() != cols) throw Error(ErrorCode::kShapeMismatch, "fixture attention has wrong shape");
  }
}

AffineToyDenoiser::AffineToyDenoiser(AffineToyConfig config) : config_(std::move(config)) { config_.validate(); }

void AffineToyDenoiser::check_inputs(const Latent& z, const EmbeddingSet& v) const {
  if (z.channels != config_.channels || z.height != config_.rows || z.width != config_.cols) {
    throw Error(ErrorCode::kShapeMismatch, "latent does not match the toy denoiser");
  }
  if (v.size() != config_.tokens() || v.width != config_.width) {
    throw Error(ErrorCode::kShapeMismatch, "embedding set does not match the toy denoiser: " +
                                               std::to_string(v.size()) + " tokens vs " +
                                               std::to_string(config_.tokens()));
  }
}

std::vector<double> AffineToyDenoiser::projected(const EmbeddingSet& v) const {
  const std::size_t C = config_.channels;
  const std::size_t D = config_.width;
  std::vector<double> out(v.size() * C, 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t d = 0; d < D; ++d) s += config_.projection[c * D + d] * v.vectors[k][d];
      out[k * C + c] = s;
    }
  }
  return out;
}

Latent AffineToyDenoiser::noise(const Latent& z, const std::vector<double>& proj_v) const {
  Latent eps(config_.channels, config_.rows, config_.cols);
  kernels::AffineNoiseArgs args;
  args.channels = config_.channels;
  args.cells = config_.cells();
  args.tokens = config_.tokens();
  args.mix = config_.mix;
  args.latent = z.values;
  args.bias = config_.bias;
  args.weight = config_.weights;
  args.proj_v = proj_v;
  kernels::parallel::affine_noise(args, eps.values);
  return eps;
}

Latent AffineToyDenoiser::predict_noise(const Latent& z, std::size_t, const EmbeddingSet& v) const {
  check_inputs(z, v);
  ++calls_;
  return noise(z, projected(v));
}

diffusion::DenoiserOutput AffineToyDenoiser::predict(const Latent& z, std::size_t t, const EmbeddingSet& v) const {
  check_inputs(z, v);
  ++calls_;
  diffusion::DenoiserOutput out;
  out.noise = noise(z, projected(v));
  if (!config_.fixed_attention.empty()) {
    out.attention = config_.fixed_attention;
    return out;
  }
  const std::size_t K = config_.tokens();
  const std::size_t n = config_.cells();
  std::vector<double> logits((K + 1) * n);
  for (std::size_t k = 0; k < K; ++k) {
    double gate = 1.0;
    if (!config_.concepts.empty() && !config_.concepts[k].empty()) {
      const auto& c = config_.concepts[k];
      const auto& x = v.vectors[k];
      double dot = 0.0, nc = 0.0, nx = 0.0;
      for (std::size_t d = 0; d < config_.width; ++d) {
        dot += c[d] * x[d];
        nc += c[d] * c[d];
        nx += x[d] * x[d];
      }
      gate = nc > 0.0 && nx > 0.0 ? std::max(0.0, dot / std::sqrt(nc * nx)) : 0.0;
    }
    const double scale = config_.logit_scale * gate;
    for (std::size_t p = 0; p < n; ++p) {
      logits[k * n + p] = scale * config_.weights[k * n + p] + config_.jitter * unit_jitter(config_.seed, t, k, p);
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    logits[K * n + p] = config_.sink_logit + config_.jitter * unit_jitter(config_.seed, t, K, p);
  }
  std::vector<double> probs(logits.size());
  kernels::parallel::token_softmax(logits, K + 1, n, probs);
  out.attention.reserve(K + 1);
  for (std::size_t k = 0; k <= K; ++k) {
    out.attention.emplace_back(config_.rows, config_.cols,
                               std::vector<double>(probs.begin() + static_cast<std::ptrdiff_t>(k * n),
                                                   probs.begin() + static_cast<std::ptrdiff_t>((k + 1) * n)));
  }
  return out;
}

std::optional<std::vector<std::vector<double>>> AffineToyDenoiser::noise_loss_gradient(
    const Latent& z, std::size_t, const EmbeddingSet& v, const Latent& target) const {
  check_inputs(z, v);
  require_same_shape(z, target, "gradient target shape differs from latent");
  ++calls_;
  const std::size_t C = config_.channels;
  const std::size_t D = config_.width;
  const std::size_t n = config_.cells();
  Latent eps = noise(z, projected(v));
  // dL/dv_k = -2 P^T sum_p w_k(p) r(:, p),  r = target - eps
  std::vector<std::vector<double>> grad(v.size(), std::vector<double>(D, 0.0));
  std::vector<double> residual(C * n);
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = target.values[i] - eps.values[i];
  std::vector<double> acc(C);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double* w = &config_.weights[k * n];
    for (std::size_t c = 0; c < C; ++c) {
      const double* r = &residual[c * n];
      double s = 0.0;
      for (std::size_t p = 0; p < n; ++p) s += w[p] * r[p];
      acc[c] = s;
    }
    for (std::size_t d = 0; d < D; ++d) {
      double s = 0.0;
      for (std::size_t c = 0; c < C; ++c) s += config_.projection[c * D + d] * acc[c];
      grad[k][d] = -2.0 * s;
    }
  }
  return grad;
}

AffineToyConfig random_affine_config(std::uint64_t seed, std::size_t channels, std::size_t rows,
                                     std::size_t cols, std::size_t width, std::size_t tokens) {
  AffineToyConfig cfg;
  cfg.channels = channels;
  cfg.rows = rows;
  cfg.cols = cols;
  cfg.width = width;
  cfg.seed = seed;
  Rng rng(derive_seed(seed, 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const std::size_t n = rows * cols;
  cfg.mix.assign(channels * channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t j = 0; j < channels; ++j) cfg.mix[c * channels + j] = (c == j ? 0.02 : 0.0) + 0.01 * normal(rng);
  }
  cfg.bias.resize(channels * n);
  for (auto& b : cfg.bias) b = 0.1 * normal(rng);
  cfg.projection.resize(channels * width);
  for (auto& p : cfg.projection) p = normal(rng) / std::sqrt(static_cast<double>(width));
  cfg.weights.assign(tokens * n, 0.0);
  cfg.concepts.resize(tokens);
  for (std::size_t k = 0; k < tokens; ++k) {
    const double cy = uni(rng) * static_cast<double>(rows);
    const double cx = uni(rng) * static_cast<double>(cols);
    const double s = 0.5 + 1.5 * uni(rng);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double dy = (static_cast<double>(r) + 0.5 - cy) / s;
        const double dx = (static_cast<double>(c) + 0.5 - cx) / s;
        cfg.weights[k * n + r * cols + c] = std::exp(-0.5 * (dx * dx + dy * dy));
      }
    }
    cfg.concepts[k].resize(width);
    for (auto& x : cfg.concepts[k]) x = normal(rng);
  }
  return cfg;
}

EmbeddingSet random_embeddings(std::uint64_t seed, std::size_t tokens, std::size_t width) {
  Rng rng(derive_seed(seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  EmbeddingSet v;
  v.width = width;
  v.vectors.assign(tokens, std::vector<double>(width));
  for (auto& row : v.vectors) {
    for (auto& x : row) x = normal(rng);
  }
  v.trainable.assign(tokens, true);
  return v;
}

std::vector<RealGrid> blob_attention_fixture(std::size_t rows, std::size_t cols,
                                             const std::vector<std::array<double, 3>>& blobs) {
  const std::size_t n = rows * cols;
  const std::size_t K = blobs.size();
  std::vector<double> logits((K + 1) * n, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const auto [cy, cx, s] = blobs[k];
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double dy = (static_cast<double>(r) + 0.5 - cy) / s;
        const double dx = (static_cast<double>(c) + 0.5 - cx) / s;
        logits[k * n + r * cols + c] = 6.0 * std::exp(-0.5 * (dx * dx + dy * dy));
      }
    }
  }
  std::vector<double> probs(logits.size());
  kernels::reference::token_softmax(logits, K + 1, n, probs);
  std::vector<RealGrid> out;
  for (std::size_t k = 0; k <= K; ++k) {
    out.emplace_back(rows, cols,
                     std::vector<double>(probs.begin() + static_cast<std::ptrdiff_t>(k * n),
                                         probs.begin() + static_cast<std::ptrdiff_t>((k + 1) * n)));
  }
  return out;
}

double object_profile(const SceneObject& o, double x, double y) {
  const double dx = (x - o.cx) / o.sx;
  const double dy = (y - o.cy) / o.sy;
  return std::exp(-0.5 * (dx * dx + dy * dy));
}

namespace {

bool inside(const SceneObject& o, double x, double y) {
  const double dx = (x - o.cx) / o.sx;
  const double dy = (y - o.cy) / o.sy;
  return dx * dx + dy * dy <= kObjectExtent * kObjectExtent;
}

}  // namespace

BinaryMask object_mask(const Scene& scene, std::size_t index) {
  if (index >= scene.objects.size()) throw Error(ErrorCode::kIndexOutOfRange, "scene object index out of range");
  BinaryMask mask(scene.size.height, scene.size.width, Frame::kImage);
  for (std::size_t y = 0; y < scene.size.height; ++y) {
    const double py = static_cast<double>(y) + 0.5;
    for (std::size_t x = 0; x < scene.size.width; ++x) {
      const double px = static_cast<double>(x) + 0.5;
      if (!inside(scene.objects[index], px, py)) continue;
      bool covered = false;
      for (std::size_t j = index + 1; j < scene.objects.size() && !covered; ++j) covered = inside(scene.objects[j], px, py);
      if (!covered) mask.set(y, x);
    }
  }
  return mask;
}

Image render_scene(const Scene& scene) {
  Image img(scene.size.width, scene.size.height, 3);
  for (std::size_t y = 0; y < img.height; ++y) {
    const double py = static_cast<double>(y) + 0.5;
    for (std::size_t x = 0; x < img.width; ++x) {
      const double px = static_cast<double>(x) + 0.5;
      std::array<float, 3> color = scene.background;
      for (const auto& o : scene.objects) {
        if (inside(o, px, py)) color = o.color;
      }
      for (std::size_t c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
    }
  }
  return img;
}

std::vector<std::optional<std::size_t>> match_entities(const Scene& scene,
                                                       const textgraph::ParsedExpression& parsed) {
  std::vector<std::optional<std::size_t>> out(parsed.entities.size());
  for (std::size_t e = 0; e < parsed.entities.size(); ++e) {
    const std::string& root = parsed.entities[e].root.surface;
    for (std::size_t i = 0; i < scene.objects.size() && !out[e]; ++i) {
      const auto& o = scene.objects[i];
      if (word_matches(root, o.noun)) {
        out[e] = i;
        continue;
      }
      for (const auto& alias : o.aliases) {
        if (word_matches(root, alias)) {
          out[e] = i;
          break;
        }
      }
    }
  }
  return out;
}

AffineToyConfig scene_config(const Scene& scene, const textgraph::ParsedExpression& parsed,
                             const embedopt::ToyTextEncoder& encoder, const SceneDenoiserOptions& options) {
  AffineToyConfig cfg;
  cfg.channels = options.channels;
  cfg.rows = options.rows;
  cfg.cols = options.cols;
  cfg.width = encoder.width();
  cfg.logit_scale = options.logit_scale;
  cfg.jitter = options.jitter;
  cfg.seed = options.seed;
  const std::size_t C = cfg.channels;
  const std::size_t D = cfg.width;
  const std::size_t n = cfg.cells();
  const std::size_t K = parsed.tokens.size();

  cfg.mix.assign(C * C, 0.0);
  for (std::size_t c = 0; c < C; ++c) cfg.mix[c * C + c] = options.mix;
  cfg.projection = orthonormal(derive_seed(options.seed, 0x9e0), C, D, options.projection_scale);
  cfg.weights.assign(K * n, 0.0);
  cfg.concepts.assign(K, {});

  const double sx = static_cast<double>(scene.size.width) / static_cast<double>(cfg.cols);
  const double sy = static_cast<double>(scene.size.height) / static_cast<double>(cfg.rows);
  auto paint = [&](std::size_t token, const SceneObject& o, double power) {
    for (std::size_t r = 0; r < cfg.rows; ++r) {
      for (std::size_t c = 0; c < cfg.cols; ++c) {
        const double w = std::pow(object_profile(o, (static_cast<double>(c) + 0.5) * sx,
                                                 (static_cast<double>(r) + 0.5) * sy),
                                  power);
        double& slot = cfg.weights[token * n + r * cfg.cols + c];
        slot = std::max(slot, w);
      }
    }
    if (cfg.concepts[token].empty()) cfg.concepts[token] = encoder.visual_concept(parsed.tokens[token].surface);
  };

  const auto matched = match_entities(scene, parsed);
  for (std::size_t e = 0; e < parsed.entities.size(); ++e) {
    if (!matched[e]) continue;
    const auto& ent = parsed.entities[e];
    const auto& o = scene.objects[*matched[e]];
    paint(ent.root.index, o, 1.0);
    for (const auto& a : ent.attribute_nouns) paint(a.index, o, 1.5);
    for (const auto& a : ent.adjectives) paint(a.index, o, 2.0);
  }

  // bias = -sum_k w_k (P c_k)
  cfg.bias.assign(C * n, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    if (cfg.concepts[k].empty()) continue;
    for (std::size_t c = 0; c < C; ++c) {
      double pc = 0.0;
      for (std::size_t d = 0; d < D; ++d) pc += cfg.projection[c * D + d] * cfg.concepts[k][d];
      for (std::size_t p = 0; p < n; ++p) cfg.bias[c * n + p] -= cfg.weights[k * n + p] * pc;
    }
  }
  return cfg;
}

Latent encode_image(const Image& image, std::size_t channels, std::size_t rows, std::size_t cols) {
  if (image.empty() || rows == 0 || cols == 0 || channels == 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot encode an empty image");
  }
  static constexpr std::uint64_t kEncoderSeed = 0x1a7e'e7c0ULL;
  Rng rng(kEncoderSeed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> lift(channels * 3);
  for (auto& x : lift) x = normal(rng);

  Latent z(channels, rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t y0 = r * image.height / rows;
    const std::size_t y1 = std::max(y0 + 1, (r + 1) * image.height / rows);
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t x0 = c * image.width / cols;
      const std::size_t x1 = std::max(x0 + 1, (c + 1) * image.width / cols);
      double rgb[3] = {0.0, 0.0, 0.0};
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) {
          for (std::size_t ch = 0; ch < 3; ++ch) {
            rgb[ch] += image.at(x, y, std::min(ch, image.channels - 1));
          }
        }
      }
      const double count = static_cast<double>((y1 - y0) * (x1 - x0));
      for (auto& v : rgb) v = 2.0 * v / count - 1.0;
      for (std::size_t k = 0; k < channels; ++k) {
        z.at(k, r, c) = lift[k * 3] * rgb[0] + lift[k * 3 + 1] * rgb[1] + lift[k * 3 + 2] * rgb[2];
      }
    }
  }
  return z;
}

}  // namespace anyword::toy
