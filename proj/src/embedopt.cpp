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

#include "anyword/embedopt.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

#include <boost/random/normal_distribution.hpp>

#include "anyword/hash.hpp"
#include "anyword/rng.hpp"

namespace anyword::embedopt {
namespace {

constexpr char kAdapterMagic[8] = {'A', 'W', 'L', 'O', 'R', 'A', '\0', '\1'};
constexpr std::uint64_t kOovStream = 0x00f0'0b5e'ed00ULL;
constexpr std::uint64_t kConceptStream = 0xc0c0'7a11ULL;
constexpr std::uint64_t kShiftStream = 0x5a1f'7ed0ULL;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

std::vector<double> gaussian_vector(std::uint64_t seed, std::size_t width, double scale) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(width);
  for (auto& x : v) x = normal(rng);
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCode::kIoError, "adapter file truncated");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_floats(std::ostream& out, const std::vector<float>& v) {
  for (float f : v) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

std::vector<float> get_floats(std::istream& in, std::size_t n) {
  std::vector<float> v(n);
  for (auto& f : v) f = std::bit_cast<float>(get_u32(in));
  return v;
}

bool rows_finite(const std::vector<std::vector<double>>& g) {
  for (const auto& row : g) {
    for (double x : row) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

}  // namespace

ToyTextEncoder::ToyTextEncoder(std::size_t width, double scale, std::uint64_t seed)
    : width_(width), scale_(scale), seed_(seed), vocab_(textgraph::lexicon_words()) {
  if (width == 0 || !(scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "encoder width and scale must be positive");
  table_.reserve(vocab_.size() * width_);
  for (const auto& word : vocab_) {
    auto row = gaussian_vector(derive_seed(seed_, stable_hash(word)), width_, scale_);
    table_.insert(table_.end(), row.begin(), row.end());
  }
}

std::optional<std::size_t> ToyTextEncoder::vocab_index(std::string_view word) const {
  const std::string w = lower(word);
  auto find = [&](const std::string& key) -> std::optional<std::size_t> {
    auto it = std::lower_bound(vocab_.begin(), vocab_.end(), key);
    if (it != vocab_.end() && *it == key) return static_cast<std::size_t>(it - vocab_.begin());
    return std::nullopt;
  };
  if (auto i = find(w)) return i;
  if (w.size() > 3 && w.ends_with("es")) {
    if (auto i = find(w.substr(0, w.size() - 2))) return i;
  }
  if (w.size() > 2 && w.ends_with('s') && !w.ends_with("ss")) {
    if (auto i = find(w.substr(0, w.size() - 1))) return i;
  }
  return std::nullopt;
}

std::vector<double> ToyTextEncoder::base_row(std::size_t index) const {
  auto first = table_.begin() + static_cast<std::ptrdiff_t>(index * width_);
  return {first, first + static_cast<std::ptrdiff_t>(width_)};
}

std::optional<std::vector<double>> ToyTextEncoder::embed(std::string_view word) const {
  auto index = vocab_index(word);
  if (!index) return std::nullopt;
  std::vector<double> row = base_row(*index);
  if (adapter_) {
    const auto& ad = *adapter_;
    for (std::size_t r = 0; r < ad.rank; ++r) {
      const double a = ad.a[*index * ad.rank + r];
      if (a == 0.0) continue;
      for (std::size_t d = 0; d < width_; ++d) row[d] += a * static_cast<double>(ad.b[r * width_ + d]);
    }
  }
  return row;
}

std::string ToyTextEncoder::base_fingerprint() const {
  Sha256 h;
  h.update(std::string_view("toy-text-encoder"));
  h.update_u64(width_);
  h.update_f64(scale_);
  h.update_u64(seed_);
  h.update_u64(vocab_.size());
  return h.hex_digest();
}

std::string ToyTextEncoder::fingerprint() const {
  if (!adapter_) return base_fingerprint();
  Sha256 h;
  h.update(std::string_view(base_fingerprint()));
  h.update_u64(adapter_->rank);
  for (float f : adapter_->a) h.update_u64(std::bit_cast<std::uint32_t>(f));
  for (float f : adapter_->b) h.update_u64(std::bit_cast<std::uint32_t>(f));
  return h.hex_digest();
}

std::vector<double> ToyTextEncoder::visual_concept(std::string_view word) const {
  const std::string w = lower(word);
  auto index = vocab_index(w);
  if (!index) return gaussian_vector(derive_seed(seed_ ^ kConceptStream, stable_hash(w)), width_, scale_);
  std::vector<double> row = base_row(*index);
  auto shift = gaussian_vector(derive_seed(seed_ ^ kShiftStream, stable_hash(vocab_[*index])), width_,
                               0.6 * scale_);
  for (std::size_t d = 0; d < width_; ++d) row[d] += shift[d];
  return row;
}

void ToyTextEncoder::install_adapter(LoraAdapter adapter) {
  if (adapter.encoder_fingerprint != base_fingerprint() || adapter.vocab != vocab_.size() ||
      adapter.width != width_ || adapter.a.size() != adapter.vocab * adapter.rank ||
      adapter.b.size() != adapter.rank * adapter.width) {
    throw Error(ErrorCode::kAdapterMismatch, "adapter was not trained for this encoder");
  }
  adapter_ = std::move(adapter);
}

const std::optional<LoraAdapter>& ToyTextEncoder::adapter() const { return adapter_; }

void save_adapter(const LoraAdapter& adapter, const std::filesystem::path& path) {
  if (adapter.a.size() != adapter.vocab * adapter.rank || adapter.b.size() != adapter.rank * adapter.width) {
    throw Error(ErrorCode::kAdapterMismatch, "adapter payload does not match its header");
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out.write(kAdapterMagic, sizeof kAdapterMagic);
    put_u32(out, adapter.version);
    put_u32(out, static_cast<std::uint32_t>(adapter.rank));
    put_u32(out, static_cast<std::uint32_t>(adapter.vocab));
    put_u32(out, static_cast<std::uint32_t>(adapter.width));
    put_u32(out, static_cast<std::uint32_t>(adapter.encoder_fingerprint.size()));
    out.write(adapter.encoder_fingerprint.data(),
              static_cast<std::streamsize>(adapter.encoder_fingerprint.size()));
    put_floats(out, adapter.a);
    put_floats(out, adapter.b);
    if (!out.flush()) throw Error(ErrorCode::kIoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot move adapter into place: " + ec.message());
}

LoraAdapter load_adapter(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  char magic[sizeof kAdapterMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kAdapterMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::kAdapterMismatch, path.string() + " is not an adapter file");
  }
  LoraAdapter ad;
  ad.version = get_u32(in);
  if (ad.version != 1) throw Error(ErrorCode::kAdapterMismatch, "unsupported adapter version");
  ad.rank = get_u32(in);
  ad.vocab = get_u32(in);
  ad.width = get_u32(in);
  const std::uint32_t fp_len = get_u32(in);
  if (fp_len > 4096) throw Error(ErrorCode::kAdapterMismatch, "corrupt adapter header");
  ad.encoder_fingerprint.resize(fp_len);
  if (!in.read(ad.encoder_fingerprint.data(), fp_len)) throw Error(ErrorCode::kIoError, "adapter file truncated");
  ad.a = get_floats(in, ad.vocab * ad.rank);
  ad.b = get_floats(in, ad.rank * ad.width);
  return ad;
}

LoraAdapter fast_adapt_text_encoder(const ToyTextEncoder& encoder, const std::vector<AdaptSample>& samples,
                                    const AdaptConfig& config) {
  if (samples.empty()) throw Error(ErrorCode::kEmptySampleSet, "no image-text pairs to adapt on");
  if (config.rank == 0) throw Error(ErrorCode::kInvalidArgument, "adapter rank must be positive");
  if (!encoder.available()) throw Error(ErrorCode::kBackendUnavailable, "encoder unavailable");

  // Distinct in-vocabulary words of the captions and their residual targets.
  std::vector<std::size_t> rows;
  for (const auto& s : samples) {
    if (!s.image.empty() && !std::filesystem::exists(s.image)) {
      throw Error(ErrorCode::kIoError, "sample image missing: " + s.image.string());
    }
    for (const auto& word : textgraph::tokenize(s.text)) {
      if (auto i = encoder.vocab_index(word)) rows.push_back(*i);
    }
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

  const std::size_t r = config.rank;
  const std::size_t d = encoder.width();
  LoraAdapter ad;
  ad.rank = r;
  ad.vocab = encoder.vocab_size();
  ad.width = d;
  ad.encoder_fingerprint = encoder.base_fingerprint();

  std::vector<double> a(ad.vocab * r, 0.0);
  std::vector<double> b(r * d, 0.0);
  {
    Rng rng(derive_seed(config.seed, 0xada7));
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(r)));
    for (std::size_t i : rows) {
      for (std::size_t k = 0; k < r; ++k) a[i * r + k] = normal(rng);
    }
  }
  std::vector<std::vector<double>> residual;
  residual.reserve(rows.size());
  for (std::size_t i : rows) {
    auto target = encoder.visual_concept(encoder.vocab_word(i));
    auto base = encoder.base_row(i);
    for (std::size_t k = 0; k < d; ++k) target[k] -= base[k];
    residual.push_back(std::move(target));
  }

  const double inv_n = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  std::vector<double> grad_b(r * d);
  std::vector<double> err(d);
  for (std::size_t step = 0; step < config.steps && !rows.empty(); ++step) {
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (std::size_t n = 0; n < rows.size(); ++n) {
      double* arow = &a[rows[n] * r];
      for (std::size_t k = 0; k < d; ++k) {
        double pred = 0.0;
        for (std::size_t j = 0; j < r; ++j) pred += arow[j] * b[j * d + k];
        err[k] = pred - residual[n][k];
      }
      for (std::size_t j = 0; j < r; ++j) {
        double ga = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          ga += err[k] * b[j * d + k];
          grad_b[j * d + k] += arow[j] * err[k] * inv_n;
        }
        arow[j] -= config.learning_rate * ga;
      }
    }
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= config.learning_rate * grad_b[i];
  }
  ad.a.assign(a.begin(), a.end());
  ad.b.assign(b.begin(), b.end());
  return ad;
}

EmbeddingSet init_embeddings(const textgraph::ParsedExpression& parsed, const TextEncoder& encoder,
                             std::uint64_t seed) {
  if (parsed.tokens.empty()) throw Error(ErrorCode::kEmptyExpression, "nothing to embed");
  if (!encoder.available() || encoder.width() == 0) {
    throw Error(ErrorCode::kEncoderUnavailable, "text encoder unavailable");
  }
  EmbeddingSet v;
  v.width = encoder.width();
  v.trainable.assign(parsed.tokens.size(), false);
  for (const auto& tok : parsed.tokens) {
    if (auto row = encoder.embed(tok.surface)) {
      v.vectors.push_back(std::move(*row));
    } else {
      v.vectors.push_back(gaussian_vector(derive_seed(seed ^ kOovStream, stable_hash(lower(tok.surface))),
                                          v.width, encoder.embedding_scale()));
    }
  }
  for (std::size_t i : parsed.concept_tokens()) v.trainable.at(i) = true;
  return v;
}

void OptimizerConfig::validate() const {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "optimizer needs at least one step");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  if (!(finite_difference_step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "finite-difference step must be positive");
}

std::size_t effective_steps(const OptimizerConfig& cfg, const TextEncoder& encoder) {
  return encoder.has_adapter() ? cfg.fast_steps : cfg.steps;
}

double noise_loss(const Latent& z, std::size_t t, const EmbeddingSet& v, const Latent& target,
                  const diffusion::DenoiserBackend& backend) {
  Latent eps = backend.predict_noise(z, t, v);
  require_same_shape(eps, target, "noise prediction shape differs from target");
  double loss = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double r = target.values[i] - eps.values[i];
    loss += r * r;
  }
  return loss;
}

std::vector<std::vector<double>> finite_difference_gradient(const Latent& z, std::size_t t,
                                                            const EmbeddingSet& v, const Latent& target,
                                                            const diffusion::DenoiserBackend& backend,
                                                            double h) {
  std::vector<std::vector<double>> grad(v.size(), std::vector<double>(v.width, 0.0));
  EmbeddingSet probe = v;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v.trainable[k]) continue;
    for (std::size_t d = 0; d < v.width; ++d) {
      const double x = v.vectors[k][d];
      probe.vectors[k][d] = x + h;
      const double up = noise_loss(z, t, probe, target, backend);
      probe.vectors[k][d] = x - h;
      const double down = noise_loss(z, t, probe, target, backend);
      probe.vectors[k][d] = x;
      grad[k][d] = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

OptimizeResult optimize_embeddings(const Latent& z0, const EmbeddingSet& v,
                                   const diffusion::NoiseSchedule& schedule,
                                   const diffusion::DenoiserBackend& backend, const OptimizerConfig& cfg,
                                   std::optional<std::size_t> steps, const StepObserver& observer) {
  OptimizeResult result;
  result.embeddings = v;
  const std::size_t total = steps.value_or(cfg.steps);
  if (total == 0) return result;
  cfg.validate();
  schedule.validate();
  if (schedule.steps() == 0) throw Error(ErrorCode::kInvalidArgument, "empty noise schedule");
  if (!z0.all_finite()) throw Error(ErrorCode::kNonFiniteLatent, "initial latent is not finite");
  if (v.trainable.size() != v.size()) throw Error(ErrorCode::kShapeMismatch, "trainable mask length differs");

  EmbeddingSet& cur = result.embeddings;
  EmbeddingSet checkpoint = cur;
  const std::size_t K = cur.size();
  const std::size_t D = cur.width;
  std::vector<std::vector<double>> velocity(K, std::vector<double>(D, 0.0));
  std::vector<std::vector<double>> second(K, std::vector<double>(D, 0.0));

  Rng rng(derive_seed(cfg.seed, 0x0b7));
  std::uniform_int_distribution<std::size_t> pick_t(1, schedule.steps());
  boost::random::normal_distribution<double> normal(0.0, 1.0);

  std::size_t bad_streak = 0;
  result.loss_history.reserve(total);
  for (std::size_t step = 0; step < total; ++step) {
    std::vector<std::vector<double>> grad(K, std::vector<double>(D, 0.0));
    double loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const std::size_t t = pick_t(rng);
      Latent eps(z0.channels, z0.height, z0.width);
      for (auto& x : eps.values) x = normal(rng);
      Latent zt = z0;
      const double sa = std::sqrt(schedule.alpha(t));
      const double sg = schedule.sigma(t);
      for (std::size_t i = 0; i < zt.size(); ++i) zt.values[i] = sa * z0.values[i] + sg * eps.values[i];

      loss += noise_loss(zt, t, cur, eps, backend);
      auto g = backend.noise_loss_gradient(zt, t, cur, eps);
      result.backend_calls += 2;
      if (!g) {
        g = finite_difference_gradient(zt, t, cur, eps, backend, cfg.finite_difference_step);
        result.backend_calls += 2 * cur.trainable_count() * D;
      }
      if (g->size() != K) throw Error(ErrorCode::kBackendFailure, backend.name() + ": gradient has wrong row count");
      for (std::size_t k = 0; k < K; ++k) {
        if ((*g)[k].size() != D) throw Error(ErrorCode::kBackendFailure, backend.name() + ": gradient has wrong width");
        for (std::size_t d = 0; d < D; ++d) grad[k][d] += (*g)[k][d];
      }
    }
    const double inv = 1.0 / static_cast<double>(cfg.batch_size);
    loss *= inv;
    for (auto& row : grad) {
      for (auto& x : row) x *= inv;
    }
    result.loss_history.push_back(loss);

    if (!std::isfinite(loss) || !rows_finite(grad)) {
      if (++bad_streak >= 3) throw NonFiniteLossError(step, checkpoint);
      if (observer) observer(step, cur);
      continue;
    }
    bad_streak = 0;
    checkpoint = cur;

    for (std::size_t k = 0; k < K; ++k) {
      if (!cur.trainable[k]) continue;
      for (std::size_t d = 0; d < D; ++d) {
        const double g = grad[k][d];
        double delta;
        if (cfg.adam) {
          constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
          velocity[k][d] = b1 * velocity[k][d] + (1 - b1) * g;
          second[k][d] = b2 * second[k][d] + (1 - b2) * g * g;
          const double n = static_cast<double>(step + 1);
          const double mhat = velocity[k][d] / (1 - std::pow(b1, n));
          const double vhat = second[k][d] / (1 - std::pow(b2, n));
          delta = mhat / (std::sqrt(vhat) + eps);
        } else if (cfg.momentum > 0.0) {
          velocity[k][d] = cfg.momentum * velocity[k][d] + g;
          delta = velocity[k][d];
        } else {
          delta = g;
        }
        cur.vectors[k][d] -= cfg.learning_rate * delta;
      }
    }
    if (observer) observer(step, cur);
  }
  return result;
}

}  // namespace anyword::embedopt
