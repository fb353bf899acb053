#include <doctest.h>

#include <cmath>

#include "gazediff/embedder.hpp"

using namespace gazediff;

namespace {

embedder::EmbedderConfig tiny_config() {
  embedder::EmbedderConfig cfg;
  cfg.sequence_length = 64;
  cfg.embedding_dim = 8;
  cfg.n_users = 3;
  return cfg;
}

VelocitySequence random_velocity(Rng& rng, int length) {
  VelocitySequence v;
  v.sample_rate = 1000.0;
  v.space = VelocitySpace::normalized;
  for (int i = 0; i < length; ++i) {
    v.vx.push_back(rng.uniform(-1.0, 1.0));
    v.vy.push_back(rng.uniform(-1.0, 1.0));
  }
  return v;
}

bool relu_signs_equal(const embedder::EmbedCache& a,
                      const embedder::EmbedCache& b) {
  for (std::size_t layer = 0; layer < a.pre.size(); ++layer)
    for (std::size_t i = 0; i < a.pre[layer].size(); ++i)
      if ((a.pre[layer][i] > 0) != (b.pre[layer][i] > 0)) return false;
  return true;
}

}  // namespace

TEST_CASE("embedding is unit norm and deterministic") {
  const auto cfg = tiny_config();
  const auto params = embedder::init_params(cfg, 19);
  Rng rng(1);
  const auto v = random_velocity(rng, cfg.sequence_length);
  const auto a = embedder::embed(cfg, params, v);
  const auto b = embedder::embed(cfg, params, v);
  REQUIRE(a.values.size() == 8);
  CHECK(a.values == b.values);
  double norm = 0.0;
  for (const double x : a.values) norm += x * x;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("cosine similarity endpoints") {
  UserEmbedding a, b;
  a.values = {1.0, 0.0};
  b.values = {1.0, 0.0};
  CHECK(embedder::cosine_similarity(a, b) == doctest::Approx(1.0));
  b.values = {0.0, 1.0};
  CHECK(embedder::cosine_similarity(a, b) == doctest::Approx(0.0));
  b.values = {-1.0, 0.0};
  CHECK(embedder::cosine_similarity(a, b) == doctest::Approx(-1.0));
}

TEST_CASE("analytic gradients match central finite differences") {
  const auto cfg = tiny_config();
  auto params = embedder::init_params(cfg, 23);
  Rng rng(17);
  const auto v = random_velocity(rng, cfg.sequence_length);

  std::vector<double> w(static_cast<std::size_t>(cfg.embedding_dim));
  for (auto& x : w) x = rng.normal();
  auto objective = [&](embedder::EmbedCache* cache) {
    const auto e = embedder::embed(cfg, params, v, cache);
    double s = 0.0;
    for (std::size_t i = 0; i < e.values.size(); ++i) s += w[i] * e.values[i];
    return s;
  };

  embedder::EmbedCache cache;
  objective(&cache);
  std::vector<double> grads(params.total_size(), 0.0);
  embedder::backward(cfg, params, cache, w, &grads, false);

  const double h = 1e-3;
  int checked = 0, skipped = 0;
  double max_rel = 0.0;
  while (checked < 200) {
    const std::size_t i = rng.uniform_index(params.total_size());
    const double saved = params.data[i];
    embedder::EmbedCache cp, cm;
    params.data[i] = saved + h;
    const double fp = objective(&cp);
    params.data[i] = saved - h;
    const double fm = objective(&cm);
    params.data[i] = saved;
    if (!relu_signs_equal(cp, cm)) {  // FD invalid across a ReLU kink
      ++skipped;
      REQUIRE(skipped < 2000);
      continue;
    }
    const double fd = (fp - fm) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(grads[i]), 1e-4});
    max_rel = std::max(max_rel, std::abs(fd - grads[i]) / denom);
    ++checked;
  }
  CHECK(max_rel < 1e-5);
}

TEST_CASE("input gradients match finite differences") {
  const auto cfg = tiny_config();
  const auto params = embedder::init_params(cfg, 29);
  Rng rng(31);
  auto v = random_velocity(rng, cfg.sequence_length);
  std::vector<double> w(static_cast<std::size_t>(cfg.embedding_dim));
  for (auto& x : w) x = rng.normal();

  embedder::EmbedCache cache;
  embedder::embed(cfg, params, v, &cache);
  const auto input_grad =
      embedder::backward(cfg, params, cache, w, nullptr, true);
  REQUIRE(input_grad.size() == 2 * static_cast<std::size_t>(cfg.sequence_length));

  const double h = 1e-4;
  int checked = 0;
  double max_rel = 0.0;
  while (checked < 50) {
    const std::size_t i = rng.uniform_index(input_grad.size());
    const auto L = static_cast<std::size_t>(cfg.sequence_length);
    double* slot = i < L ? &v.vx[i] : &v.vy[i - L];
    const double saved = *slot;
    embedder::EmbedCache cp, cm;
    *slot = saved + h;
    const auto ep = embedder::embed(cfg, params, v, &cp);
    *slot = saved - h;
    const auto em = embedder::embed(cfg, params, v, &cm);
    *slot = saved;
    if (!relu_signs_equal(cp, cm)) continue;
    double fp = 0.0, fm = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      fp += w[k] * ep.values[k];
      fm += w[k] * em.values[k];
    }
    const double fd = (fp - fm) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(input_grad[i]), 1e-4});
    max_rel = std::max(max_rel, std::abs(fd - input_grad[i]) / denom);
    ++checked;
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("training separates two synthetic classes") {
  // class 0: slow drift; class 1: fast oscillation — trivially separable
  auto cfg = tiny_config();
  cfg.n_users = 2;
  auto params = embedder::init_params(cfg, 101);
  std::vector<VelocitySequence> data;
  std::vector<int> labels;
  Rng rng(77);
  for (int k = 0; k < 24; ++k) {
    VelocitySequence v;
    v.sample_rate = 1000.0;
    v.space = VelocitySpace::normalized;
    const int label = k % 2;
    for (int i = 0; i < cfg.sequence_length; ++i) {
      const double base = label == 0 ? 0.05 : std::sin(i * 0.9);
      v.vx.push_back(base + 0.02 * rng.normal());
      v.vy.push_back(-base + 0.02 * rng.normal());
    }
    data.push_back(std::move(v));
    labels.push_back(label);
  }
  embedder::EmbedderTrainConfig tcfg;
  tcfg.epochs = 40;
  tcfg.seed = 5;
  const auto report = embedder::train_embedder(cfg, params, data, labels, tcfg);
  CHECK(report.final_accuracy > 0.9);
  CHECK(report.final_loss < report.initial_loss);
  CHECK(report.within_user_similarity - report.cross_user_similarity > 0.2);

  // shuffled-label negative control: the gap collapses
  auto params2 = embedder::init_params(cfg, 102);
  std::vector<int> shuffled = labels;
  Rng shuffle_rng(13);
  for (std::size_t i = shuffled.size(); i > 1; --i)
    std::swap(shuffled[i - 1], shuffled[shuffle_rng.uniform_index(i)]);
  const auto control =
      embedder::train_embedder(cfg, params2, data, shuffled, tcfg);
  CHECK(std::abs(control.within_user_similarity -
                 control.cross_user_similarity) < 0.05);
}
