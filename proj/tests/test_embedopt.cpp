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

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "anyword/embedopt.hpp"
#include "anyword/toy.hpp"

using namespace anyword;
using namespace anyword::embedopt;

namespace {

// Expected loss of the affine toy over t ~ U[1, T] and eps ~ N(0, I) is a
// V-independent noise term plus mean_t ||m_t + L v||^2 with
// m_t = mix sqrt(alpha_t) z0 + bias. Its minimum is a least-squares solve.
struct ExcessOracle {
  Eigen::MatrixXd L;
  std::vector<Eigen::VectorXd> m;
  double floor = 0.0;

  ExcessOracle(const toy::AffineToyConfig& cfg, const Latent& z0, const diffusion::NoiseSchedule& s) {
    const std::size_t C = cfg.channels, N = cfg.cells(), K = cfg.tokens(), D = cfg.width;
    L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(C * N), static_cast<Eigen::Index>(K * D));
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t p = 0; p < N; ++p)
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t d = 0; d < D; ++d) {
            L(static_cast<Eigen::Index>(c * N + p), static_cast<Eigen::Index>(k * D + d)) =
                cfg.weights[k * N + p] * cfg.projection[c * D + d];
          }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(C * N));
    for (std::size_t t = 1; t <= s.steps(); ++t) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(C * N));
      const double sa = std::sqrt(s.alpha(t));
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t p = 0; p < N; ++p) {
          double a = cfg.bias[c * N + p];
          for (std::size_t j = 0; j < C; ++j) a += cfg.mix[c * C + j] * sa * z0.values[j * N + p];
          v(static_cast<Eigen::Index>(c * N + p)) = a;
        }
      mean += v;
      m.push_back(v);
    }
    mean /= static_cast<double>(m.size());
    floor = excess(L.completeOrthogonalDecomposition().solve(-mean));
  }

  double excess(const Eigen::VectorXd& v) const {
    double s = 0.0;
    for (const auto& x : m) s += (x + L * v).squaredNorm();
    return s / static_cast<double>(m.size());
  }
  double excess(const EmbeddingSet& e) const { return excess(flat(e)); }

  static Eigen::VectorXd flat(const EmbeddingSet& e) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(e.size() * e.width));
    for (std::size_t k = 0; k < e.size(); ++k)
      for (std::size_t d = 0; d < e.width; ++d) v(static_cast<Eigen::Index>(k * e.width + d)) = e.vectors[k][d];
    return v;
  }
};

Latent random_latent(std::uint64_t seed, std::size_t c, std::size_t h, std::size_t w) {
  Latent z(c, h, w);
  Rng rng(seed);
  std::normal_distribution<double> n;
  for (auto& x : z.values) x = n(rng);
  return z;
}

class Unavailable : public TextEncoder {
 public:
  bool available() const override { return false; }
  std::size_t width() const override { return 8; }
  std::optional<std::vector<double>> embed(std::string_view) const override { return std::nullopt; }
  double embedding_scale() const override { return 0.5; }
  std::string fingerprint() const override { return "none"; }
};

// Same predictions as the toy but without an analytic gradient.
class NoGradient : public diffusion::DenoiserBackend {
 public:
  explicit NoGradient(const toy::AffineToyDenoiser& inner) : inner_(inner) {}
  diffusion::DenoiserOutput predict(const Latent& z, std::size_t t, const EmbeddingSet& v) const override {
    return inner_.predict(z, t, v);
  }
  Latent predict_noise(const Latent& z, std::size_t t, const EmbeddingSet& v) const override {
    return inner_.predict_noise(z, t, v);
  }
  std::string name() const override { return "no-gradient"; }

 private:
  const toy::AffineToyDenoiser& inner_;
};

class NanAfter : public diffusion::DenoiserBackend {
 public:
  NanAfter(const toy::AffineToyDenoiser& inner, std::size_t clean) : inner_(inner), clean_(clean) {}
  diffusion::DenoiserOutput predict(const Latent& z, std::size_t t, const EmbeddingSet& v) const override {
    return inner_.predict(z, t, v);
  }
  Latent predict_noise(const Latent& z, std::size_t t, const EmbeddingSet& v) const override {
    Latent out = inner_.predict_noise(z, t, v);
    if (++calls_ > clean_) out.values[0] = NAN;
    return out;
  }
  std::optional<std::vector<std::vector<double>>> noise_loss_gradient(const Latent& z, std::size_t t,
                                                                      const EmbeddingSet& v,
                                                                      const Latent& target) const override {
    return inner_.noise_loss_gradient(z, t, v, target);
  }
  std::string name() const override { return "nan"; }

 private:
  const toy::AffineToyDenoiser& inner_;
  std::size_t clean_;
  mutable std::size_t calls_ = 0;
};

double relative_error(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t d = 0; d < a[k].size(); ++d) {
      num += (a[k][d] - b[k][d]) * (a[k][d] - b[k][d]);
      den += b[k][d] * b[k][d];
    }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "anyword-tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("in-vocabulary token takes the encoder row") {
  const ToyTextEncoder enc;
  const textgraph::RuleParser parser;
  const auto v = init_embeddings(textgraph::parse_expression("cat", parser), enc);
  REQUIRE(v.size() == 1);
  CHECK(v.vectors[0] == *enc.embed("cat"));
  CHECK(v.trainable == std::vector<bool>{true});
  CHECK(v.width == enc.width());
}

TEST_CASE("out-of-vocabulary tokens get a seeded draw at the encoder scale") {
  const ToyTextEncoder enc;
  const textgraph::RuleParser parser;
  const auto parsed = textgraph::parse_expression("a kittytoi", parser);
  CHECK_FALSE(enc.embed("kittytoi").has_value());
  const auto a = init_embeddings(parsed, enc, 9);
  const auto b = init_embeddings(parsed, enc, 9);
  const auto c = init_embeddings(parsed, enc, 10);
  CHECK(a == b);
  CHECK(a.vectors[1] != c.vectors[1]);
  CHECK(a.trainable[1]);
  double ss = 0.0;
  std::size_t n = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto drawn = init_embeddings(parsed, enc, s);
    for (double x : drawn.vectors[1]) {
      ss += x * x;
      ++n;
    }
  }
  CHECK(std::sqrt(ss / static_cast<double>(n)) == doctest::Approx(enc.embedding_scale()).epsilon(0.1));
}

TEST_CASE("only concept tokens are trainable") {
  const ToyTextEncoder enc;
  const textgraph::RuleParser parser;
  const auto parsed = textgraph::parse_expression("the boy in a blue sweatshirt holding a donut", parser);
  const auto v = init_embeddings(parsed, enc);
  std::vector<std::string> trainable;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v.trainable[i]) trainable.push_back(parsed.tokens[i].surface);
  }
  CHECK(trainable == std::vector<std::string>{"boy", "blue", "sweatshirt", "donut"});
}

TEST_CASE("an unavailable encoder is reported") {
  const Unavailable enc;
  const textgraph::RuleParser parser;
  try {
    init_embeddings(textgraph::parse_expression("cat", parser), enc);
    FAIL("expected EncoderUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEncoderUnavailable);
  }
}

TEST_CASE("zero steps return the input exactly") {
  const auto cfg = toy::random_affine_config(1, 4, 8, 8, 6, 3);
  const toy::AffineToyDenoiser backend(cfg);
  const auto v = toy::random_embeddings(1, 3, 6);
  const auto out = optimize_embeddings(random_latent(1, 4, 8, 8), v, diffusion::NoiseSchedule::scaled_linear(50),
                                       backend, OptimizerConfig{}, 0);
  CHECK(out.embeddings == v);
  CHECK(out.loss_history.empty());
  CHECK(backend.calls() == 0);
}

TEST_CASE("analytic gradient matches a dense linear-algebra oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto cfg = toy::random_affine_config(seed, 3, 6, 6, 5, 4);
    const toy::AffineToyDenoiser backend(cfg);
    const auto v = toy::random_embeddings(seed + 1, 4, 5);
    const Latent z = random_latent(seed + 2, 3, 6, 6);
    const Latent target = random_latent(seed + 3, 3, 6, 6);
    const ExcessOracle o(cfg, z, diffusion::NoiseSchedule::from_alphas({0.5}));
    Eigen::VectorXd zv(static_cast<Eigen::Index>(z.size())), tv(static_cast<Eigen::Index>(z.size()));
    for (std::size_t i = 0; i < z.size(); ++i) {
      zv(static_cast<Eigen::Index>(i)) = z.values[i];
      tv(static_cast<Eigen::Index>(i)) = target.values[i];
    }
    const std::size_t N = cfg.cells(), C = cfg.channels;
    Eigen::VectorXd eps(static_cast<Eigen::Index>(C * N));
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t p = 0; p < N; ++p) {
        double a = cfg.bias[c * N + p];
        for (std::size_t j = 0; j < C; ++j) a += cfg.mix[c * C + j] * z.values[j * N + p];
        eps(static_cast<Eigen::Index>(c * N + p)) = a;
      }
    eps += o.L * ExcessOracle::flat(v);
    const Eigen::VectorXd grad = -2.0 * o.L.transpose() * (tv - eps);
    const auto g = backend.noise_loss_gradient(z, 3, v, target);
    REQUIRE(g.has_value());
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t d = 0; d < 5; ++d) {
        CHECK((*g)[k][d] == doctest::Approx(grad(static_cast<Eigen::Index>(k * 5 + d))).epsilon(1e-10));
      }
    CHECK(noise_loss(z, 3, v, target, backend) == doctest::Approx((tv - eps).squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto cfg = toy::random_affine_config(seed, 4, 8, 8, 6, 3);
    const toy::AffineToyDenoiser backend(cfg);
    const auto v = toy::random_embeddings(seed, 3, 6);
    const Latent z = random_latent(seed + 7, 4, 8, 8);
    const Latent target = random_latent(seed + 8, 4, 8, 8);
    const auto g = backend.noise_loss_gradient(z, 10, v, target);
    REQUIRE(g.has_value());
    const auto fd = finite_difference_gradient(z, 10, v, target, backend, 1e-4);
    CHECK(relative_error(*g, fd) < 1e-4);
  }
}

TEST_CASE("200 steps at the default learning rate remove most of the excess loss") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto cfg = toy::random_affine_config(seed, 4, 8, 8, 6, 3);
    const toy::AffineToyDenoiser backend(cfg);
    const auto v0 = toy::random_embeddings(seed, 3, 6);
    const auto sched = diffusion::NoiseSchedule::scaled_linear(50);
    const Latent z0 = random_latent(seed, 4, 8, 8);
    const ExcessOracle o(cfg, z0, sched);
    OptimizerConfig oc;
    oc.seed = seed;
    const auto res = optimize_embeddings(z0, v0, sched, backend, oc, 200);
    const double before = o.excess(v0) - o.floor;
    const double after = o.excess(res.embeddings) - o.floor;
    CAPTURE(seed);
    CHECK(after <= 0.1 * before);
  }
}

TEST_CASE("expected loss falls window over window") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto cfg = toy::random_affine_config(seed, 4, 8, 8, 6, 3);
    const toy::AffineToyDenoiser backend(cfg);
    const auto v0 = toy::random_embeddings(seed, 3, 6);
    const auto sched = diffusion::NoiseSchedule::scaled_linear(50);
    const Latent z0 = random_latent(seed, 4, 8, 8);
    const ExcessOracle o(cfg, z0, sched);
    OptimizerConfig oc;
    oc.seed = seed;
    std::vector<double> trace{o.excess(v0)};
    optimize_embeddings(z0, v0, sched, backend, oc, 400,
                        [&](std::size_t, const EmbeddingSet& cur) { trace.push_back(o.excess(cur)); });
    REQUIRE(trace.size() == 401);
    double prev = INFINITY;
    for (std::size_t w = 0; w + 50 <= 400; w += 50) {
      double mean = 0.0;
      for (std::size_t i = w; i < w + 50; ++i) mean += trace[i];
      mean /= 50.0;
      CHECK(mean <= prev);
      prev = mean;
    }
  }
}

TEST_CASE("frozen tokens are untouched after a full run") {
  const ToyTextEncoder enc;
  const textgraph::RuleParser parser;
  const auto parsed = textgraph::parse_expression("the boy in a blue sweatshirt holding a donut", parser);
  const auto v0 = init_embeddings(parsed, enc);
  const auto cfg = toy::random_affine_config(5, 4, 8, 8, enc.width(), v0.size());
  const toy::AffineToyDenoiser backend(cfg);
  const auto res = optimize_embeddings(random_latent(5, 4, 8, 8), v0, diffusion::NoiseSchedule::scaled_linear(50),
                                       backend, OptimizerConfig{});
  CHECK(res.loss_history.size() == 1100);
  for (std::size_t i = 0; i < v0.size(); ++i) {
    CAPTURE(parsed.tokens[i].surface);
    if (v0.trainable[i]) {
      CHECK(res.embeddings.vectors[i] != v0.vectors[i]);
    } else {
      CHECK(res.embeddings.vectors[i] == v0.vectors[i]);
    }
  }
  CHECK(res.embeddings.trainable == v0.trainable);
}

TEST_CASE("optimisation is deterministic per seed") {
  const auto cfg = toy::random_affine_config(2, 4, 8, 8, 6, 3);
  const toy::AffineToyDenoiser backend(cfg);
  auto v = toy::random_embeddings(2, 3, 6);
  v.trainable[1] = false;
  const Latent z0 = random_latent(2, 4, 8, 8);
  const auto sched = diffusion::NoiseSchedule::scaled_linear(20);
  OptimizerConfig oc;
  oc.seed = 4;
  const auto a = optimize_embeddings(z0, v, sched, backend, oc, 60);
  const auto b = optimize_embeddings(z0, v, sched, backend, oc, 60);
  CHECK(a.embeddings == b.embeddings);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.embeddings.vectors[1] == v.vectors[1]);
  oc.seed = 5;
  CHECK_FALSE(optimize_embeddings(z0, v, sched, backend, oc, 60).embeddings == a.embeddings);
}

TEST_CASE("finite-difference fallback follows the analytic run") {
  const auto cfg = toy::random_affine_config(3, 3, 6, 6, 4, 2);
  const toy::AffineToyDenoiser backend(cfg);
  const NoGradient fallback(backend);
  const auto v = toy::random_embeddings(3, 2, 4);
  const Latent z0 = random_latent(3, 3, 6, 6);
  const auto sched = diffusion::NoiseSchedule::scaled_linear(20);
  const auto a = optimize_embeddings(z0, v, sched, backend, OptimizerConfig{}, 30);
  const auto b = optimize_embeddings(z0, v, sched, fallback, OptimizerConfig{}, 30);
  CHECK(b.backend_calls > a.backend_calls);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t d = 0; d < 4; ++d) CHECK(b.embeddings.vectors[k][d] == doctest::Approx(a.embeddings.vectors[k][d]).epsilon(1e-5));
}

TEST_CASE("non-finite losses abort with the last finite checkpoint") {
  const auto cfg = toy::random_affine_config(4, 3, 6, 6, 4, 2);
  const toy::AffineToyDenoiser backend(cfg);
  const auto v = toy::random_embeddings(4, 2, 4);
  const Latent z0 = random_latent(4, 3, 6, 6);
  const auto sched = diffusion::NoiseSchedule::scaled_linear(20);
  OptimizerConfig oc;
  oc.batch_size = 2;

  SUBCASE("from the first step") {
    const NanAfter bad(backend, 0);
    try {
      optimize_embeddings(z0, v, sched, bad, oc, 50);
      FAIL("expected NonFiniteLoss");
    } catch (const NonFiniteLossError& e) {
      CHECK(e.code() == ErrorCode::kNonFiniteLoss);
      CHECK(e.step() == 2);
      CHECK(e.checkpoint() == v);
    }
  }
  SUBCASE("after two clean steps") {
    const NanAfter bad(backend, 4);
    const auto clean = optimize_embeddings(z0, v, sched, backend, oc, 1);
    try {
      optimize_embeddings(z0, v, sched, bad, oc, 50);
      FAIL("expected NonFiniteLoss");
    } catch (const NonFiniteLossError& e) {
      CHECK(e.step() == 4);
      CHECK(e.checkpoint() == clean.embeddings);
    }
  }
  SUBCASE("two bad steps in a row are skipped") {
    const NanAfter bad(backend, 4);
    const auto two = optimize_embeddings(z0, v, sched, backend, oc, 2);
    const auto out = optimize_embeddings(z0, v, sched, bad, oc, 4);
    CHECK(out.loss_history.size() == 4);
    CHECK_FALSE(std::isfinite(out.loss_history[3]));
    CHECK(out.embeddings == two.embeddings);
  }
}

TEST_CASE("optimizer configuration is validated") {
  OptimizerConfig oc;
  CHECK_NOTHROW(oc.validate());
  CHECK(oc.learning_rate == 0.005);
  CHECK(oc.steps == 1100);
  CHECK(oc.fast_steps == 50);
  CHECK(oc.batch_size == 8);
  CHECK(oc.tau == 0.3);
  CHECK(oc.gamma == 0.00075);
  oc.steps = 0;
  CHECK_THROWS_AS(oc.validate(), Error);
  oc = {};
  oc.learning_rate = 0.0;
  CHECK_THROWS_AS(oc.validate(), Error);
  oc = {};
  oc.batch_size = 0;
  CHECK_THROWS_AS(oc.validate(), Error);
}

TEST_CASE("adapting on an empty sample set fails") {
  const ToyTextEncoder enc;
  try {
    fast_adapt_text_encoder(enc, {});
    FAIL("expected EmptySampleSet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptySampleSet);
  }
}

TEST_CASE("adapter files round-trip and license the short schedule") {
  ToyTextEncoder enc;
  std::vector<AdaptSample> samples;
  const std::vector<std::string> texts = {"a red ball",        "a green cup",       "a blue car and a dog",
                                          "a white horse",     "a black cat",       "a yellow flower",
                                          "an orange boat",    "a purple bucket",   "a brown stone",
                                          "a pink cushion on a bed"};
  for (const auto& t : texts) samples.push_back({{}, t});
  AdaptConfig ac;
  ac.rank = 16;
  ac.steps = 300;
  const auto adapter = fast_adapt_text_encoder(enc, samples, ac);
  CHECK(adapter.rank == 16);
  const auto path = temp_path("roundtrip.lora");
  save_adapter(adapter, path);
  CHECK(load_adapter(path) == adapter);

  OptimizerConfig oc;
  CHECK(effective_steps(oc, enc) == 1100);
  enc.install_adapter(adapter);
  CHECK(effective_steps(oc, enc) == 50);

  auto cos = [](const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      d += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    return d / std::sqrt(na * nb);
  };
  const ToyTextEncoder plain;
  for (const char* w : {"ball", "horse", "cushion"}) {
    CHECK(cos(*enc.embed(w), enc.visual_concept(w)) > cos(*plain.embed(w), plain.visual_concept(w)));
  }
}

TEST_CASE("adapters refuse a foreign encoder and damaged files") {
  const ToyTextEncoder enc;
  const auto adapter = fast_adapt_text_encoder(enc, {{{}, "a red ball"}}, AdaptConfig{4, 20, 0.05, 0});
  ToyTextEncoder other(8, 0.5, 77);
  try {
    other.install_adapter(adapter);
    FAIL("expected AdapterMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kAdapterMismatch);
  }
  const auto path = temp_path("damaged.lora");
  save_adapter(adapter, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
  CHECK_THROWS_AS(load_adapter(path), Error);
  CHECK_THROWS_AS(load_adapter(temp_path("missing.lora")), Error);
  try {
    fast_adapt_text_encoder(enc, {{temp_path("no-such-image.png"), "a cat"}});
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIoError);
  }
}
