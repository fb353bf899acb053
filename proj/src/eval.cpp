#include "gazediff/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gazediff/signal.hpp"
#include "gazediff/training.hpp"

namespace gazediff::eval {
namespace {

MeanStd summarize(const std::vector<double>& values) {
  MeanStd out;
  out.count = values.size();
  if (values.empty()) return out;
  double mean = 0.0;
  for (double value : values) mean += value;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double value : values) var += (value - mean) * (value - mean);
  var /= static_cast<double>(values.size());
  out.mean = mean;
  out.stddev = std::sqrt(var);
  return out;
}

diffusion::DenoiserFn make_denoiser_fn(const ModelBundle& model) {
  return [cfg = model.config, params = model.params](
             const diffusion::Tensor2L& x_t, int t,
             const diffusion::ConditioningBundle& cond) {
    return denoiser::forward(*cfg, *params, x_t, t, cond);
  };
}

std::size_t effective_count(const EvalOptions& options, std::size_t n) {
  if (options.max_sequences > 0)
    return std::min(n, static_cast<std::size_t>(options.max_sequences));
  return n;
}

}  // namespace

EventClass ivt_classify(double speed_deg_per_s) {
  require(speed_deg_per_s >= 0.0, "ivt_classify: speed must be non-negative");
  if (speed_deg_per_s < 100.0) return EventClass::fixation;
  if (speed_deg_per_s > 300.0) return EventClass::saccade;
  return EventClass::other;
}

std::vector<double> velocity_histogram(
    const std::vector<const VelocitySequence*>& sequences,
    const HistogramSpec& spec, EventFilter filter) {
  require(spec.bin_count > 0 && spec.bin_width > 0.0,
          "velocity_histogram: invalid spec");
  std::vector<double> hist(static_cast<std::size_t>(spec.bin_count), 0.0);
  double total = 0.0;
  for (const VelocitySequence* v : sequences) {
    require(v->space == VelocitySpace::raw_deg_per_s,
            "velocity_histogram: expects raw deg/s velocities");
    for (std::size_t i = 0; i < v->length(); ++i) {
      const double mag = std::hypot(v->vx[i], v->vy[i]);
      if (!std::isfinite(mag)) continue;  // counted upstream as invalid
      if (filter == EventFilter::fixation &&
          ivt_classify(mag) != EventClass::fixation)
        continue;
      if (filter == EventFilter::saccade &&
          ivt_classify(mag) != EventClass::saccade)
        continue;
      const double clipped = std::min(mag, 1000.0);
      auto bin = static_cast<std::size_t>(clipped / spec.bin_width);
      bin = std::min(bin, static_cast<std::size_t>(spec.bin_count - 1));
      hist[bin] += 1.0;
      total += 1.0;
    }
  }
  require(total > 0.0, "velocity_histogram: empty selection");
  for (auto& value : hist) value /= total;
  return hist;
}

double js_divergence(const std::vector<double>& p,
                     const std::vector<double>& q) {
  require(p.size() == q.size() && !p.empty(),
          "js_divergence: mismatched support");
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(p[i] >= 0.0 && q[i] >= 0.0, "js_divergence: negative mass");
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) js += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) js += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return js;
}

EmbeddingTable embed_all(const std::vector<SequenceRef>& sequences,
                         const embedder::EmbedderConfig& cfg,
                         const nn::ParamStore& params) {
  EmbeddingTable table;
  table.reserve(sequences.size());
  for (const auto& ref : sequences) {
    const VelocitySequence v = training::preprocess_gaze(*ref.gaze);
    table.emplace_back(ref.user, embedder::embed(cfg, params, v));
  }
  return table;
}

MeanStd within_user_baseline(const EmbeddingTable& table) {
  std::vector<double> sims;
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t j = i + 1; j < table.size(); ++j)
      if (table[i].first == table[j].first)
        sims.push_back(
            embedder::cosine_similarity(table[i].second, table[j].second));
  require(!sims.empty(), "within_user_baseline: no same-user pairs");
  return summarize(sims);
}

MeanStd cross_user_baseline(const EmbeddingTable& table) {
  std::vector<double> sims;
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t j = i + 1; j < table.size(); ++j)
      if (table[i].first != table[j].first)
        sims.push_back(
            embedder::cosine_similarity(table[i].second, table[j].second));
  require(!sims.empty(), "cross_user_baseline: no cross-user pairs");
  return summarize(sims);
}

EvalReport recovery_eval(const std::vector<SequenceRef>& test_set,
                         const ModelBundle& model,
                         const embedder::EmbedderConfig& embedder_cfg,
                         const nn::ParamStore& embedder_params,
                         const EvalOptions& options) {
  require(!test_set.empty(), "recovery_eval: empty test set");
  const diffusion::DenoiserFn fn = make_denoiser_fn(model);
  const std::size_t n = effective_count(options, test_set.size());

  EvalReport report;
  std::vector<double> sims;
  for (std::size_t i = 0; i < n; ++i) {
    const GazeSequence& truth = *test_set[i].gaze;
    const GazeSequence removed = signal::remove_identity(truth);
    diffusion::ConditioningBundle cond;
    cond.observation = training::preprocess_gaze(removed);
    const UserEmbedding e0 = embedder::embed(
        embedder_cfg, embedder_params, training::preprocess_gaze(truth));
    cond.user_embedding = e0;

    for (int s = 0; s < options.samples_per_sequence; ++s) {
      const uint64_t seed =
          mix_seed(options.seed, (static_cast<uint64_t>(i) << 16) + static_cast<uint64_t>(s));
      const VelocitySequence synth =
          diffusion::sample(cond, fn, *model.schedule, seed);
      const UserEmbedding es =
          embedder::embed(embedder_cfg, embedder_params, synth);
      sims.push_back(embedder::cosine_similarity(e0, es));
      report.synthesized.push_back(signal::denormalize(synth));
    }
  }
  report.similarity = summarize(sims);
  return report;
}

EvalReport manipulation_eval(const std::vector<SequenceRef>& test_set,
                             const ModelBundle& model,
                             const embedder::EmbedderConfig& embedder_cfg,
                             const nn::ParamStore& embedder_params,
                             const EvalOptions& options) {
  require(test_set.size() >= 2, "manipulation_eval: need >= 2 sequences");
  bool multi_user = false;
  for (std::size_t i = 1; i < test_set.size(); ++i)
    if (test_set[i].user != test_set[0].user) multi_user = true;
  require(multi_user, "manipulation_eval: single-user corpus");

  const EmbeddingTable table =
      embed_all(test_set, embedder_cfg, embedder_params);
  const diffusion::DenoiserFn fn = make_denoiser_fn(model);
  const std::size_t n = effective_count(options, test_set.size());

  EvalReport report;
  std::vector<double> sims;
  for (std::size_t i = 0; i < n; ++i) {
    // base: different user, embedding similarity to the target in
    // [0, 0.05]; fallback to the minimum-similarity pair
    std::size_t base_idx = test_set.size();
    std::size_t min_idx = test_set.size();
    double min_sim = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < test_set.size(); ++j) {
      if (test_set[j].user == test_set[i].user) continue;
      const double sim =
          embedder::cosine_similarity(table[i].second, table[j].second);
      if (sim < min_sim) {
        min_sim = sim;
        min_idx = j;
      }
      if (sim >= 0.0 && sim <= 0.05 && base_idx == test_set.size())
        base_idx = j;
    }
    if (base_idx == test_set.size()) {
      base_idx = min_idx;
      ++report.pairing_fallbacks;
    }
    require(base_idx < test_set.size(), "manipulation_eval: no base found");

    const GazeSequence base_removed =
        signal::remove_identity(*test_set[base_idx].gaze);
    diffusion::ConditioningBundle cond;
    cond.observation = training::preprocess_gaze(base_removed);
    cond.user_embedding = table[i].second;

    for (int s = 0; s < options.samples_per_sequence; ++s) {
      const uint64_t seed =
          mix_seed(options.seed, 0xa110c + (static_cast<uint64_t>(i) << 16) + static_cast<uint64_t>(s));
      const VelocitySequence synth =
          diffusion::sample(cond, fn, *model.schedule, seed);
      const UserEmbedding es =
          embedder::embed(embedder_cfg, embedder_params, synth);
      sims.push_back(embedder::cosine_similarity(table[i].second, es));
      report.synthesized.push_back(signal::denormalize(synth));
    }
  }
  report.similarity = summarize(sims);
  return report;
}

EvalReport highpass_recovery_eval(const std::vector<SequenceRef>& test_set,
                                  const embedder::EmbedderConfig& embedder_cfg,
                                  const nn::ParamStore& embedder_params,
                                  const EvalOptions& options) {
  require(!test_set.empty(), "highpass_recovery_eval: empty test set");
  const std::size_t n = effective_count(options, test_set.size());

  EvalReport report;
  std::vector<double> sims;
  for (std::size_t i = 0; i < n; ++i) {
    const GazeSequence& truth = *test_set[i].gaze;
    // highpass_inject removes the base's identity itself
    VelocitySequence injected = signal::highpass_inject(truth, truth);
    for (std::size_t k = 0; k < injected.length(); ++k) {
      if (!std::isfinite(injected.vx[k])) ++report.invalid_outputs;
      if (!std::isfinite(injected.vy[k])) ++report.invalid_outputs;
    }
    const UserEmbedding e0 = embedder::embed(
        embedder_cfg, embedder_params, training::preprocess_gaze(truth));
    const UserEmbedding es = embedder::embed(
        embedder_cfg, embedder_params, signal::preprocess(injected));
    sims.push_back(embedder::cosine_similarity(e0, es));
    report.synthesized.push_back(injected);
  }
  report.similarity = summarize(sims);
  return report;
}

double identify_user(const EmbeddingTable& train, const EmbeddingTable& test,
                     int n_users) {
  require(!train.empty() && !test.empty(), "identify_user: empty split");
  std::vector<std::vector<double>> centroids;
  std::vector<int> counts(static_cast<std::size_t>(n_users), 0);
  const std::size_t dim = train.front().second.dim();
  centroids.assign(static_cast<std::size_t>(n_users),
                   std::vector<double>(dim, 0.0));
  for (const auto& [user, e] : train) {
    require(user >= 0 && user < n_users, "identify_user: user id range");
    for (std::size_t d = 0; d < dim; ++d)
      centroids[static_cast<std::size_t>(user)][d] += e.values[d];
    ++counts[static_cast<std::size_t>(user)];
  }
  for (int u = 0; u < n_users; ++u) {
    require(counts[static_cast<std::size_t>(u)] > 0,
            "identify_user: user " + std::to_string(u) + " missing from train");
    double norm = 0.0;
    for (double value : centroids[static_cast<std::size_t>(u)]) norm += value * value;
    norm = std::sqrt(norm);
    require(norm > 0.0, "identify_user: zero-norm centroid");
    for (auto& value : centroids[static_cast<std::size_t>(u)]) value /= norm;
  }

  std::size_t correct = 0;
  for (const auto& [user, e] : test) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = -1;
    for (int u = 0; u < n_users; ++u) {
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d)
        dot += centroids[static_cast<std::size_t>(u)][d] * e.values[d];
      if (dot > best) {
        best = dot;
        arg = u;
      }
    }
    if (arg == user) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace gazediff::eval
