#include "gazediff/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gazediff::embedder {
namespace {

int conv_out_len(int n) {
  return (n + EmbedderConfig::kStride - 1) / EmbedderConfig::kStride;
}

// conv tensors come first, two per layer, then dense, then optional head
std::size_t dense_w_index(const EmbedderConfig&) {
  return 2 * EmbedderConfig::kConvLayers;
}

}  // namespace

nn::ParamStore make_params(const EmbedderConfig& cfg) {
  require(cfg.sequence_length >= 1 && cfg.embedding_dim >= 1,
          "embedder config: positive sizes required");
  nn::ParamStore p;
  for (int i = 0; i < EmbedderConfig::kConvLayers; ++i) {
    const int cin = EmbedderConfig::kChannels[i];
    const int cout = EmbedderConfig::kChannels[i + 1];
    const std::string base = "conv" + std::to_string(i) + ".";
    p.add(base + "w", {cout, cin, EmbedderConfig::kKernel},
          cin * EmbedderConfig::kKernel);
    p.add(base + "b", {cout}, cin * EmbedderConfig::kKernel);
  }
  const int c_last = EmbedderConfig::kChannels[EmbedderConfig::kConvLayers];
  p.add("dense.w", {cfg.embedding_dim, c_last}, c_last);
  p.add("dense.b", {cfg.embedding_dim}, c_last);
  if (cfg.n_users > 0) {
    p.add("head.w", {cfg.n_users, cfg.embedding_dim}, cfg.embedding_dim);
    p.add("head.b", {cfg.n_users}, cfg.embedding_dim);
  }
  return p;
}

nn::ParamStore init_params(const EmbedderConfig& cfg, uint64_t seed) {
  nn::ParamStore p = make_params(cfg);
  Rng rng(mix_seed(seed, 0xe3bed));
  nn::init_uniform(p, rng);
  return p;
}

UserEmbedding embed(const EmbedderConfig& cfg, const nn::ParamStore& params,
                    const VelocitySequence& v, EmbedCache* cache) {
  require(v.space == VelocitySpace::normalized,
          "embed: expects normalized velocities");
  require(static_cast<int>(v.length()) == cfg.sequence_length,
          "embed: sequence length mismatch");

  EmbedCache local;
  EmbedCache& cc = cache ? *cache : local;
  cc.inputs.assign(EmbedderConfig::kConvLayers, {});
  cc.pre.assign(EmbedderConfig::kConvLayers, {});
  cc.lengths.assign(EmbedderConfig::kConvLayers, 0);

  std::vector<double> cur(2 * v.length());
  std::copy(v.vx.begin(), v.vx.end(), cur.begin());
  std::copy(v.vy.begin(), v.vy.end(),
            cur.begin() + static_cast<std::ptrdiff_t>(v.length()));
  int n = cfg.sequence_length;

  for (int layer = 0; layer < EmbedderConfig::kConvLayers; ++layer) {
    const int cin = EmbedderConfig::kChannels[layer];
    const int cout = EmbedderConfig::kChannels[layer + 1];
    const int m = conv_out_len(n);
    const double* w = params.ptr(2 * static_cast<std::size_t>(layer));
    const double* b = params.ptr(2 * static_cast<std::size_t>(layer) + 1);

    cc.inputs[static_cast<std::size_t>(layer)] = cur;
    cc.lengths[static_cast<std::size_t>(layer)] = n;

    std::vector<double> pre(static_cast<std::size_t>(cout) * m);
    for (int o = 0; o < cout; ++o) {
      for (int lp = 0; lp < m; ++lp) {
        const int center = lp * EmbedderConfig::kStride;
        double acc = b[o];
        for (int c = 0; c < cin; ++c) {
          const double* xc = cur.data() + static_cast<std::size_t>(c) * n;
          for (int k = 0; k < EmbedderConfig::kKernel; ++k) {
            const int idx = center + k - EmbedderConfig::kKernel / 2;
            if (idx >= 0 && idx < n)
              acc += w[(o * cin + c) * EmbedderConfig::kKernel + k] * xc[idx];
          }
        }
        pre[static_cast<std::size_t>(o) * m + lp] = acc;
      }
    }
    cc.pre[static_cast<std::size_t>(layer)] = pre;

    cur.assign(pre.size(), 0.0);
    for (std::size_t i = 0; i < pre.size(); ++i)
      cur[i] = pre[i] > 0.0 ? pre[i] : 0.0;
    n = m;
  }

  const int c_last = EmbedderConfig::kChannels[EmbedderConfig::kConvLayers];
  cc.pooled.assign(static_cast<std::size_t>(c_last), 0.0);
  for (int c = 0; c < c_last; ++c) {
    double acc = 0.0;
    for (int l = 0; l < n; ++l) acc += cur[static_cast<std::size_t>(c) * n + l];
    cc.pooled[static_cast<std::size_t>(c)] = acc / n;
  }

  const double* dw = params.ptr(dense_w_index(cfg));
  const double* db = params.ptr(dense_w_index(cfg) + 1);
  cc.raw.assign(static_cast<std::size_t>(cfg.embedding_dim), 0.0);
  for (int d = 0; d < cfg.embedding_dim; ++d) {
    double acc = db[d];
    for (int c = 0; c < c_last; ++c) acc += dw[d * c_last + c] * cc.pooled[static_cast<std::size_t>(c)];
    cc.raw[static_cast<std::size_t>(d)] = acc;
  }

  double norm = 0.0;
  for (double value : cc.raw) norm += value * value;
  norm = std::sqrt(norm);
  require(norm > 0.0, "embed: zero-norm pre-embedding");
  cc.raw_norm = norm;

  UserEmbedding e;
  e.values.resize(cc.raw.size());
  for (std::size_t i = 0; i < cc.raw.size(); ++i) e.values[i] = cc.raw[i] / norm;
  cc.embedding = e.values;
  return e;
}

std::vector<double> logits(const EmbedderConfig& cfg,
                           const nn::ParamStore& params,
                           const std::vector<double>& embedding) {
  require(cfg.n_users > 0, "logits: no classification head configured");
  const double* hw = params.ptr(dense_w_index(cfg) + 2);
  const double* hb = params.ptr(dense_w_index(cfg) + 3);
  std::vector<double> out(static_cast<std::size_t>(cfg.n_users));
  for (int u = 0; u < cfg.n_users; ++u) {
    double acc = hb[u];
    for (int d = 0; d < cfg.embedding_dim; ++d)
      acc += hw[u * cfg.embedding_dim + d] * embedding[static_cast<std::size_t>(d)];
    out[static_cast<std::size_t>(u)] = acc;
  }
  return out;
}

std::vector<double> backward(const EmbedderConfig& cfg,
                             const nn::ParamStore& params,
                             const EmbedCache& cache,
                             const std::vector<double>& d_embedding,
                             std::vector<double>* grads,
                             bool want_input_grad) {
  const int c_last = EmbedderConfig::kChannels[EmbedderConfig::kConvLayers];
  const int D = cfg.embedding_dim;
  require(static_cast<int>(d_embedding.size()) == D,
          "embedder backward: d_embedding size mismatch");

  // through L2 normalization: d_raw = (I - e e^T) d_e / ||raw||
  double dot = 0.0;
  for (int d = 0; d < D; ++d)
    dot += cache.embedding[static_cast<std::size_t>(d)] * d_embedding[static_cast<std::size_t>(d)];
  std::vector<double> d_raw(static_cast<std::size_t>(D));
  for (int d = 0; d < D; ++d)
    d_raw[static_cast<std::size_t>(d)] =
        (d_embedding[static_cast<std::size_t>(d)] -
         cache.embedding[static_cast<std::size_t>(d)] * dot) /
        cache.raw_norm;

  const double* dw = params.ptr(dense_w_index(cfg));
  std::vector<double> d_pooled(static_cast<std::size_t>(c_last), 0.0);
  for (int d = 0; d < D; ++d) {
    const double g = d_raw[static_cast<std::size_t>(d)];
    if (grads) {
      double* gw = grads->data() + params.tensors[dense_w_index(cfg)].offset;
      double* gb = grads->data() + params.tensors[dense_w_index(cfg) + 1].offset;
      gb[d] += g;
      for (int c = 0; c < c_last; ++c)
        gw[d * c_last + c] += g * cache.pooled[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < c_last; ++c)
      d_pooled[static_cast<std::size_t>(c)] += dw[d * c_last + c] * g;
  }

  // pooled average over the last conv output
  const int last_len = conv_out_len(cache.lengths.back());
  std::vector<double> d_cur(static_cast<std::size_t>(c_last) * last_len);
  for (int c = 0; c < c_last; ++c)
    for (int l = 0; l < last_len; ++l)
      d_cur[static_cast<std::size_t>(c) * last_len + l] =
          d_pooled[static_cast<std::size_t>(c)] / last_len;

  for (int layer = EmbedderConfig::kConvLayers - 1; layer >= 0; --layer) {
    const int cin = EmbedderConfig::kChannels[layer];
    const int cout = EmbedderConfig::kChannels[layer + 1];
    const int n = cache.lengths[static_cast<std::size_t>(layer)];
    const int m = conv_out_len(n);
    const auto& pre = cache.pre[static_cast<std::size_t>(layer)];
    const auto& input = cache.inputs[static_cast<std::size_t>(layer)];
    const double* w = params.ptr(2 * static_cast<std::size_t>(layer));

    // ReLU mask on this layer's output
    for (std::size_t i = 0; i < d_cur.size(); ++i)
      if (pre[i] <= 0.0) d_cur[i] = 0.0;

    const bool need_input =
        layer > 0 || want_input_grad;  // layer 0 input grad only on request
    std::vector<double> d_in;
    if (need_input) d_in.assign(static_cast<std::size_t>(cin) * n, 0.0);

    double* gw = nullptr;
    double* gb = nullptr;
    if (grads) {
      gw = grads->data() + params.tensors[2 * static_cast<std::size_t>(layer)].offset;
      gb = grads->data() + params.tensors[2 * static_cast<std::size_t>(layer) + 1].offset;
    }

    for (int o = 0; o < cout; ++o) {
      for (int lp = 0; lp < m; ++lp) {
        const double d = d_cur[static_cast<std::size_t>(o) * m + lp];
        if (d == 0.0) continue;
        const int center = lp * EmbedderConfig::kStride;
        if (gb) gb[o] += d;
        for (int c = 0; c < cin; ++c) {
          const double* xc = input.data() + static_cast<std::size_t>(c) * n;
          for (int k = 0; k < EmbedderConfig::kKernel; ++k) {
            const int idx = center + k - EmbedderConfig::kKernel / 2;
            if (idx < 0 || idx >= n) continue;
            if (gw) gw[(o * cin + c) * EmbedderConfig::kKernel + k] += d * xc[idx];
            if (need_input)
              d_in[static_cast<std::size_t>(c) * n + idx] +=
                  w[(o * cin + c) * EmbedderConfig::kKernel + k] * d;
          }
        }
      }
    }
    d_cur = std::move(d_in);
  }
  return d_cur;  // (2, L) input gradient, or empty when not requested
}

double cosine_similarity(const UserEmbedding& a, const UserEmbedding& b) {
  require(a.dim() == b.dim(), "cosine_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  require(na > 0.0 && nb > 0.0, "cosine_similarity: zero-norm vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

TrainReport train_embedder(const EmbedderConfig& cfg, nn::ParamStore& params,
                           const std::vector<VelocitySequence>& sequences,
                           const std::vector<int>& labels,
                           const EmbedderTrainConfig& train_cfg) {
  require(cfg.n_users >= 2, "train_embedder: need at least 2 users");
  require(sequences.size() == labels.size() && sequences.size() >= 4,
          "train_embedder: degenerate corpus");
  std::vector<int> per_user(static_cast<std::size_t>(cfg.n_users), 0);
  for (int label : labels) {
    require(label >= 0 && label < cfg.n_users, "train_embedder: label range");
    ++per_user[static_cast<std::size_t>(label)];
  }
  for (int count : per_user)
    require(count >= 2, "train_embedder: every user needs >= 2 sequences");

  const std::size_t n = sequences.size();
  nn::AdamState opt(params.total_size());
  Rng shuffle_rng(mix_seed(train_cfg.seed, 0x5a));

  TrainReport report;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  const std::size_t head_w = dense_w_index(cfg) + 2;
  const std::size_t head_b = dense_w_index(cfg) + 3;

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    // Fisher-Yates with the deterministic stream
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = shuffle_rng.uniform_index(i + 1);
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(train_cfg.batch_size)) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(train_cfg.batch_size));
      std::vector<double> grads(params.total_size(), 0.0);
      for (std::size_t bi = start; bi < stop; ++bi) {
        const std::size_t idx = order[bi];
        EmbedCache cache;
        embed(cfg, params, sequences[idx], &cache);
        std::vector<double> z = logits(cfg, params, cache.embedding);

        const double zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (double& value : z) {
          value = std::exp(value - zmax);
          denom += value;
        }
        const auto label = static_cast<std::size_t>(labels[idx]);
        epoch_loss += -std::log(z[label] / denom);

        // d loss / d logits = softmax - onehot
        std::vector<double> d_logits(z.size());
        for (std::size_t u = 0; u < z.size(); ++u)
          d_logits[u] = z[u] / denom - (u == label ? 1.0 : 0.0);

        const double* hw = params.ptr(head_w);
        double* ghw = grads.data() + params.tensors[head_w].offset;
        double* ghb = grads.data() + params.tensors[head_b].offset;
        std::vector<double> d_embedding(static_cast<std::size_t>(cfg.embedding_dim), 0.0);
        for (int u = 0; u < cfg.n_users; ++u) {
          const double d = d_logits[static_cast<std::size_t>(u)];
          ghb[u] += d;
          for (int e = 0; e < cfg.embedding_dim; ++e) {
            ghw[u * cfg.embedding_dim + e] += d * cache.embedding[static_cast<std::size_t>(e)];
            d_embedding[static_cast<std::size_t>(e)] += hw[u * cfg.embedding_dim + e] * d;
          }
        }
        backward(cfg, params, cache, d_embedding, &grads, false);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (double& g : grads) g *= inv;
      nn::adam_step(params.data, grads, opt, train_cfg.learning_rate);
    }
    epoch_loss /= static_cast<double>(n);
    if (epoch == 0) report.initial_loss = epoch_loss;
    report.final_loss = epoch_loss;
  }

  // accuracy + similarity statistics
  std::vector<UserEmbedding> embeddings(n);
  int correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    embeddings[i] = embed(cfg, params, sequences[i]);
    const std::vector<double> z = logits(cfg, params, embeddings[i].values);
    const auto arg = static_cast<int>(
        std::max_element(z.begin(), z.end()) - z.begin());
    if (arg == labels[i]) ++correct;
  }
  report.final_accuracy = static_cast<double>(correct) / static_cast<double>(n);

  double within = 0.0, cross = 0.0;
  std::size_t n_within = 0, n_cross = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sim = cosine_similarity(embeddings[i], embeddings[j]);
      if (labels[i] == labels[j]) {
        within += sim;
        ++n_within;
      } else {
        cross += sim;
        ++n_cross;
      }
    }
  }
  report.within_user_similarity = n_within ? within / static_cast<double>(n_within) : 0.0;
  report.cross_user_similarity = n_cross ? cross / static_cast<double>(n_cross) : 0.0;
  return report;
}

}  // namespace gazediff::embedder
