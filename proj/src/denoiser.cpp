#include "gazediff/denoiser.hpp"

#include <cmath>
#include <cstring>

namespace gazediff::denoiser {
namespace {

constexpr double kSqrt2 = 1.4142135623730950488;

// Tensor registration order is fixed; indices below mirror make_params.
enum BaseTensor : std::size_t {
  kInputW = 0,
  kInputB,
  kTFc1W,
  kTFc1B,
  kTFc2W,
  kTFc2B,
  kUserDenseW,
  kUserDenseB,
  kLayerBase,  // 10 tensors per layer follow
};
constexpr std::size_t kPerLayer = 10;

std::size_t layer_tensor(int layer, std::size_t slot) {
  return kLayerBase + static_cast<std::size_t>(layer) * kPerLayer + slot;
}

}  // namespace

int DenoiserConfig::receptive_field() const {
  int span = 0;
  for (int i = 0; i < n_layers; ++i) span += dilation(i) * (kernel_size - 1);
  return 2 * span / 2 + 1;
}

nn::ParamStore make_params(const DenoiserConfig& cfg) {
  require(cfg.n_layers >= 1 && cfg.channels >= 1 && cfg.dilation_cycle >= 1,
          "denoiser config: positive sizes required");
  require(cfg.kernel_size % 2 == 1, "denoiser config: kernel size must be odd");
  const int C = cfg.channels;
  const int H = cfg.t_embed_hidden;
  const int D = cfg.embedding_dim;
  const int K = cfg.kernel_size;

  nn::ParamStore p;
  p.add("input_proj.w", {C, 4}, 4);
  p.add("input_proj.b", {C}, 4);
  p.add("t_fc1.w", {H, 128}, 128);
  p.add("t_fc1.b", {H}, 128);
  p.add("t_fc2.w", {H, H}, H);
  p.add("t_fc2.b", {H}, H);
  p.add("user_dense.w", {D, D}, D);
  p.add("user_dense.b", {D}, D);
  for (int i = 0; i < cfg.n_layers; ++i) {
    const std::string base = "layer" + std::to_string(i) + ".";
    p.add(base + "t_proj.w", {C, H}, H);
    p.add(base + "t_proj.b", {C}, H);
    p.add(base + "dilated.w", {2 * C, C, K}, C * K);
    p.add(base + "dilated.b", {2 * C}, C * K);
    p.add(base + "user.w", {2 * C, D}, D);
    p.add(base + "user.b", {2 * C}, D);
    p.add(base + "residual.w", {C, C}, C);
    p.add(base + "residual.b", {C}, C);
    p.add(base + "skip.w", {C, C}, C);
    p.add(base + "skip.b", {C}, C);
  }
  p.add("head1.w", {C, C}, C);
  p.add("head1.b", {C}, C);
  p.add("head2.w", {2, C}, 0);  // zero-init: fresh network predicts eps = 0
  p.add("head2.b", {2}, 0);
  return p;
}

nn::ParamStore init_params(const DenoiserConfig& cfg, uint64_t seed) {
  nn::ParamStore p = make_params(cfg);
  Rng rng(mix_seed(seed, 0xd377));
  nn::init_uniform(p, rng);
  return p;
}

diffusion::Tensor2L forward(const DenoiserConfig& cfg,
                            const nn::ParamStore& params,
                            const diffusion::Tensor2L& x_t, int t,
                            const diffusion::ConditioningBundle& cond,
                            ForwardCache* cache) {
  const int C = cfg.channels;
  const int H = cfg.t_embed_hidden;
  const int D = cfg.embedding_dim;
  const int L = cfg.sequence_length;
  const auto len = static_cast<std::size_t>(L);
  require(x_t.size() == 2 * len, "denoiser forward: x_t shape mismatch");
  require(cond.observation.length() == len,
          "denoiser forward: observation length mismatch");
  require(static_cast<int>(cond.user_embedding.dim()) == D,
          "denoiser forward: embedding dimension mismatch");

  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;

  // (4, L): noisy channels then observation channels
  cc.input4.resize(4 * len);
  std::copy(x_t.begin(), x_t.end(), cc.input4.begin());
  std::copy(cond.observation.vx.begin(), cond.observation.vx.end(),
            cc.input4.begin() + static_cast<std::ptrdiff_t>(2 * len));
  std::copy(cond.observation.vy.begin(), cond.observation.vy.end(),
            cc.input4.begin() + static_cast<std::ptrdiff_t>(3 * len));

  // input projection 4 -> C
  std::vector<double> h(static_cast<std::size_t>(C) * len);
  {
    const double* w = params.ptr(kInputW);
    const double* b = params.ptr(kInputB);
    for (int c = 0; c < C; ++c) {
      double* hc = h.data() + static_cast<std::size_t>(c) * len;
      for (std::size_t l = 0; l < len; ++l) {
        double acc = b[c];
        for (int j = 0; j < 4; ++j)
          acc += w[c * 4 + j] * cc.input4[static_cast<std::size_t>(j) * len + l];
        hc[l] = acc;
      }
    }
  }

  // timestep encoder: 128 -> H -> H with SiLU
  cc.t_enc = diffusion::timestep_encoding(t);
  cc.t_h1_pre.assign(static_cast<std::size_t>(H), 0.0);
  cc.t_h1.assign(static_cast<std::size_t>(H), 0.0);
  cc.t_h2_pre.assign(static_cast<std::size_t>(H), 0.0);
  cc.t_h2.assign(static_cast<std::size_t>(H), 0.0);
  {
    const double* w1 = params.ptr(kTFc1W);
    const double* b1 = params.ptr(kTFc1B);
    for (int k = 0; k < H; ++k) {
      double acc = b1[k];
      for (int j = 0; j < 128; ++j) acc += w1[k * 128 + j] * cc.t_enc[static_cast<std::size_t>(j)];
      cc.t_h1_pre[static_cast<std::size_t>(k)] = acc;
      cc.t_h1[static_cast<std::size_t>(k)] = nn::silu(acc);
    }
    const double* w2 = params.ptr(kTFc2W);
    const double* b2 = params.ptr(kTFc2B);
    for (int k = 0; k < H; ++k) {
      double acc = b2[k];
      for (int j = 0; j < H; ++j) acc += w2[k * H + j] * cc.t_h1[static_cast<std::size_t>(j)];
      cc.t_h2_pre[static_cast<std::size_t>(k)] = acc;
      cc.t_h2[static_cast<std::size_t>(k)] = nn::silu(acc);
    }
  }

  // per-position dense broadcast of the user embedding (shared weights)
  cc.user_input = cond.user_embedding.values;
  cc.user_proj.assign(static_cast<std::size_t>(D), 0.0);
  {
    const double* w = params.ptr(kUserDenseW);
    const double* b = params.ptr(kUserDenseB);
    for (int d = 0; d < D; ++d) {
      double acc = b[d];
      for (int e = 0; e < D; ++e) acc += w[d * D + e] * cc.user_input[static_cast<std::size_t>(e)];
      cc.user_proj[static_cast<std::size_t>(d)] = acc;
    }
  }

  cc.h_in.assign(static_cast<std::size_t>(cfg.n_layers), {});
  cc.gate_y.assign(static_cast<std::size_t>(cfg.n_layers), {});
  cc.gate.assign(static_cast<std::size_t>(cfg.n_layers), {});
  std::vector<double> skip_acc(static_cast<std::size_t>(C) * len, 0.0);

  std::vector<double> hb(static_cast<std::size_t>(C) * len);
  for (int i = 0; i < cfg.n_layers; ++i) {
    const int dil = cfg.dilation(i);
    const double* tw = params.ptr(layer_tensor(i, 0));
    const double* tb = params.ptr(layer_tensor(i, 1));
    const double* dw = params.ptr(layer_tensor(i, 2));
    const double* db = params.ptr(layer_tensor(i, 3));
    const double* uw = params.ptr(layer_tensor(i, 4));
    const double* ub = params.ptr(layer_tensor(i, 5));
    const double* rw = params.ptr(layer_tensor(i, 6));
    const double* rb = params.ptr(layer_tensor(i, 7));
    const double* sw = params.ptr(layer_tensor(i, 8));
    const double* sb = params.ptr(layer_tensor(i, 9));

    cc.h_in[static_cast<std::size_t>(i)] = h;

    // timestep bias (per channel) added before the dilated conv
    for (int c = 0; c < C; ++c) {
      double bias = tb[c];
      for (int k = 0; k < H; ++k) bias += tw[c * H + k] * cc.t_h2[static_cast<std::size_t>(k)];
      const double* hc = h.data() + static_cast<std::size_t>(c) * len;
      double* hbc = hb.data() + static_cast<std::size_t>(c) * len;
      for (std::size_t l = 0; l < len; ++l) hbc[l] = hc[l] + bias;
    }

    // dilated conv C -> 2C plus user-embedding bias
    auto& y = cc.gate_y[static_cast<std::size_t>(i)];
    y.assign(static_cast<std::size_t>(2 * C) * len, 0.0);
    for (int o = 0; o < 2 * C; ++o) {
      double ubias = db[o] + ub[o];
      for (int d = 0; d < D; ++d) ubias += uw[o * D + d] * cc.user_proj[static_cast<std::size_t>(d)];
      double* yo = y.data() + static_cast<std::size_t>(o) * len;
      for (std::size_t l = 0; l < len; ++l) yo[l] = ubias;
      for (int c = 0; c < C; ++c) {
        const double* hbc = hb.data() + static_cast<std::size_t>(c) * len;
        const double w0 = dw[(o * C + c) * 3 + 0];
        const double w1 = dw[(o * C + c) * 3 + 1];
        const double w2 = dw[(o * C + c) * 3 + 2];
        const auto sd = static_cast<std::ptrdiff_t>(dil);
        const auto sl = static_cast<std::ptrdiff_t>(len);
        for (std::ptrdiff_t l = 0; l < sl; ++l) {
          double acc = w1 * hbc[l];
          if (l - sd >= 0) acc += w0 * hbc[l - sd];
          if (l + sd < sl) acc += w2 * hbc[l + sd];
          yo[l] += acc;
        }
      }
    }

    // gated activation tanh(a) * sigmoid(b)
    auto& gate = cc.gate[static_cast<std::size_t>(i)];
    gate.resize(static_cast<std::size_t>(C) * len);
    for (int c = 0; c < C; ++c) {
      const double* ya = y.data() + static_cast<std::size_t>(c) * len;
      const double* yb = y.data() + static_cast<std::size_t>(C + c) * len;
      double* gc = gate.data() + static_cast<std::size_t>(c) * len;
      for (std::size_t l = 0; l < len; ++l)
        gc[l] = std::tanh(ya[l]) * nn::sigmoid(yb[l]);
    }

    // residual and skip 1x1 convs
    for (int c = 0; c < C; ++c) {
      double* hc = h.data() + static_cast<std::size_t>(c) * len;
      double* sc = skip_acc.data() + static_cast<std::size_t>(c) * len;
      for (std::size_t l = 0; l < len; ++l) {
        double racc = rb[c];
        double sacc = sb[c];
        for (int cp = 0; cp < C; ++cp) {
          const double g = gate[static_cast<std::size_t>(cp) * len + l];
          racc += rw[c * C + cp] * g;
          sacc += sw[c * C + cp] * g;
        }
        hc[l] = (hc[l] + racc) / kSqrt2;
        sc[l] += sacc;
      }
    }
  }

  // head: sum skips / sqrt(n) -> ReLU -> 1x1 -> ReLU -> 1x1
  const double skip_scale = 1.0 / std::sqrt(static_cast<double>(cfg.n_layers));
  cc.skip_sum.resize(skip_acc.size());
  for (std::size_t i = 0; i < skip_acc.size(); ++i)
    cc.skip_sum[i] = skip_acc[i] * skip_scale;

  cc.head1_pre.assign(static_cast<std::size_t>(C) * len, 0.0);
  {
    const double* w = params.ptr(params.tensors.size() - 4);
    const double* b = params.ptr(params.tensors.size() - 3);
    for (int c = 0; c < C; ++c) {
      double* hc = cc.head1_pre.data() + static_cast<std::size_t>(c) * len;
      for (std::size_t l = 0; l < len; ++l) {
        double acc = b[c];
        for (int cp = 0; cp < C; ++cp) {
          const double s = cc.skip_sum[static_cast<std::size_t>(cp) * len + l];
          acc += w[c * C + cp] * (s > 0.0 ? s : 0.0);
        }
        hc[l] = acc;
      }
    }
  }

  diffusion::Tensor2L eps_hat(2 * len);
  {
    const double* w = params.ptr(params.tensors.size() - 2);
    const double* b = params.ptr(params.tensors.size() - 1);
    for (int o = 0; o < 2; ++o) {
      double* eo = eps_hat.data() + static_cast<std::size_t>(o) * len;
      for (std::size_t l = 0; l < len; ++l) {
        double acc = b[o];
        for (int c = 0; c < C; ++c) {
          const double s = cc.head1_pre[static_cast<std::size_t>(c) * len + l];
          acc += w[o * C + c] * (s > 0.0 ? s : 0.0);
        }
        eo[l] = acc;
      }
    }
  }
  cc.eps_hat = eps_hat;
  return eps_hat;
}

void backward(const DenoiserConfig& cfg, const nn::ParamStore& params,
              const ForwardCache& cache, const std::vector<double>& d_eps,
              std::vector<double>& grads) {
  const int C = cfg.channels;
  const int H = cfg.t_embed_hidden;
  const int D = cfg.embedding_dim;
  const auto len = static_cast<std::size_t>(cfg.sequence_length);
  require(d_eps.size() == 2 * len, "denoiser backward: d_eps shape mismatch");
  require(grads.size() == params.total_size(),
          "denoiser backward: gradient buffer size mismatch");

  const std::size_t n_tensors = params.tensors.size();
  auto gptr = [&](std::size_t idx) {
    return grads.data() + params.tensors[idx].offset;
  };

  // head2 backward
  std::vector<double> d_head1(static_cast<std::size_t>(C) * len, 0.0);
  {
    const double* w = params.ptr(n_tensors - 2);
    double* gw = gptr(n_tensors - 2);
    double* gb = gptr(n_tensors - 1);
    for (int o = 0; o < 2; ++o) {
      const double* de = d_eps.data() + static_cast<std::size_t>(o) * len;
      for (std::size_t l = 0; l < len; ++l) {
        gb[o] += de[l];
        for (int c = 0; c < C; ++c) {
          const double s = cache.head1_pre[static_cast<std::size_t>(c) * len + l];
          const double s_relu = s > 0.0 ? s : 0.0;
          gw[o * C + c] += de[l] * s_relu;
          if (s > 0.0)
            d_head1[static_cast<std::size_t>(c) * len + l] += w[o * C + c] * de[l];
        }
      }
    }
  }

  // head1 backward (input is relu(skip_sum))
  std::vector<double> d_skip(static_cast<std::size_t>(C) * len, 0.0);
  {
    const double* w = params.ptr(n_tensors - 4);
    double* gw = gptr(n_tensors - 4);
    double* gb = gptr(n_tensors - 3);
    for (int c = 0; c < C; ++c) {
      const double* dh = d_head1.data() + static_cast<std::size_t>(c) * len;
      for (std::size_t l = 0; l < len; ++l) {
        const double d = dh[l];
        if (d == 0.0) continue;
        gb[c] += d;
        for (int cp = 0; cp < C; ++cp) {
          const double s = cache.skip_sum[static_cast<std::size_t>(cp) * len + l];
          if (s > 0.0) {
            gw[c * C + cp] += d * s;
            d_skip[static_cast<std::size_t>(cp) * len + l] += w[c * C + cp] * d;
          }
        }
      }
    }
  }
  const double skip_scale = 1.0 / std::sqrt(static_cast<double>(cfg.n_layers));
  for (auto& value : d_skip) value *= skip_scale;

  std::vector<double> dh(static_cast<std::size_t>(C) * len, 0.0);
  std::vector<double> d_t_h2(static_cast<std::size_t>(H), 0.0);
  std::vector<double> d_user_proj(static_cast<std::size_t>(D), 0.0);

  std::vector<double> dgate(static_cast<std::size_t>(C) * len);
  std::vector<double> dy(static_cast<std::size_t>(2 * C) * len);
  std::vector<double> dhb(static_cast<std::size_t>(C) * len);
  std::vector<double> hb(static_cast<std::size_t>(C) * len);

  for (int i = cfg.n_layers - 1; i >= 0; --i) {
    const int dil = cfg.dilation(i);
    const auto& h_in = cache.h_in[static_cast<std::size_t>(i)];
    const auto& y = cache.gate_y[static_cast<std::size_t>(i)];
    const auto& gate = cache.gate[static_cast<std::size_t>(i)];

    const double* tw = params.ptr(layer_tensor(i, 0));
    const double* tbp = params.ptr(layer_tensor(i, 1));
    const double* dw = params.ptr(layer_tensor(i, 2));
    const double* uw = params.ptr(layer_tensor(i, 4));
    const double* rw = params.ptr(layer_tensor(i, 6));
    const double* sw = params.ptr(layer_tensor(i, 8));
    double* g_tw = gptr(layer_tensor(i, 0));
    double* g_tb = gptr(layer_tensor(i, 1));
    double* g_dw = gptr(layer_tensor(i, 2));
    double* g_db = gptr(layer_tensor(i, 3));
    double* g_uw = gptr(layer_tensor(i, 4));
    double* g_ub = gptr(layer_tensor(i, 5));
    double* g_rw = gptr(layer_tensor(i, 6));
    double* g_rb = gptr(layer_tensor(i, 7));
    double* g_sw = gptr(layer_tensor(i, 8));
    double* g_sb = gptr(layer_tensor(i, 9));

    // residual/skip conv backward; d h_out/sqrt2 also flows to h_in
    std::fill(dgate.begin(), dgate.end(), 0.0);
    for (int c = 0; c < C; ++c) {
      const double* dhc = dh.data() + static_cast<std::size_t>(c) * len;
      const double* dsc = d_skip.data() + static_cast<std::size_t>(c) * len;
      for (std::size_t l = 0; l < len; ++l) {
        const double dr = dhc[l] / kSqrt2;
        const double ds = dsc[l];
        g_rb[c] += dr;
        g_sb[c] += ds;
        for (int cp = 0; cp < C; ++cp) {
          const double g = gate[static_cast<std::size_t>(cp) * len + l];
          g_rw[c * C + cp] += dr * g;
          g_sw[c * C + cp] += ds * g;
          dgate[static_cast<std::size_t>(cp) * len + l] +=
              rw[c * C + cp] * dr + sw[c * C + cp] * ds;
        }
      }
    }

    // gate backward
    for (int c = 0; c < C; ++c) {
      const double* ya = y.data() + static_cast<std::size_t>(c) * len;
      const double* yb = y.data() + static_cast<std::size_t>(C + c) * len;
      const double* dg = dgate.data() + static_cast<std::size_t>(c) * len;
      double* dya = dy.data() + static_cast<std::size_t>(c) * len;
      double* dyb = dy.data() + static_cast<std::size_t>(C + c) * len;
      for (std::size_t l = 0; l < len; ++l) {
        const double ta = std::tanh(ya[l]);
        const double sg = nn::sigmoid(yb[l]);
        dya[l] = dg[l] * sg * (1.0 - ta * ta);
        dyb[l] = dg[l] * ta * sg * (1.0 - sg);
      }
    }

    // rebuild hb = h_in + t_bias (cheaper than caching it)
    for (int c = 0; c < C; ++c) {
      double bias = tbp[c];
      for (int k = 0; k < H; ++k) bias += tw[c * H + k] * cache.t_h2[static_cast<std::size_t>(k)];
      const double* hc = h_in.data() + static_cast<std::size_t>(c) * len;
      double* hbc = hb.data() + static_cast<std::size_t>(c) * len;
      for (std::size_t l = 0; l < len; ++l) hbc[l] = hc[l] + bias;
    }

    // dilated conv + user-bias backward
    std::fill(dhb.begin(), dhb.end(), 0.0);
    for (int o = 0; o < 2 * C; ++o) {
      const double* dyo = dy.data() + static_cast<std::size_t>(o) * len;
      double dsum = 0.0;
      for (std::size_t l = 0; l < len; ++l) dsum += dyo[l];
      g_db[o] += dsum;
      g_ub[o] += dsum;
      for (int d = 0; d < D; ++d) {
        g_uw[o * D + d] += dsum * cache.user_proj[static_cast<std::size_t>(d)];
        d_user_proj[static_cast<std::size_t>(d)] += uw[o * D + d] * dsum;
      }
      for (int c = 0; c < C; ++c) {
        const double* hbc = hb.data() + static_cast<std::size_t>(c) * len;
        double* dhbc = dhb.data() + static_cast<std::size_t>(c) * len;
        const double w0 = dw[(o * C + c) * 3 + 0];
        const double w1 = dw[(o * C + c) * 3 + 1];
        const double w2 = dw[(o * C + c) * 3 + 2];
        double gw0 = 0.0, gw1 = 0.0, gw2 = 0.0;
        const auto sd = static_cast<std::ptrdiff_t>(dil);
        const auto sl = static_cast<std::ptrdiff_t>(len);
        for (std::ptrdiff_t l = 0; l < sl; ++l) {
          const double d = dyo[l];
          gw1 += d * hbc[l];
          dhbc[l] += w1 * d;
          if (l - sd >= 0) {
            gw0 += d * hbc[l - sd];
            dhbc[l - sd] += w0 * d;
          }
          if (l + sd < sl) {
            gw2 += d * hbc[l + sd];
            dhbc[l + sd] += w2 * d;
          }
        }
        g_dw[(o * C + c) * 3 + 0] += gw0;
        g_dw[(o * C + c) * 3 + 1] += gw1;
        g_dw[(o * C + c) * 3 + 2] += gw2;
      }
    }

    // t-projection backward and residual passthrough
    for (int c = 0; c < C; ++c) {
      const double* dhbc = dhb.data() + static_cast<std::size_t>(c) * len;
      double dtb = 0.0;
      for (std::size_t l = 0; l < len; ++l) dtb += dhbc[l];
      g_tb[c] += dtb;
      for (int k = 0; k < H; ++k) {
        g_tw[c * H + k] += dtb * cache.t_h2[static_cast<std::size_t>(k)];
        d_t_h2[static_cast<std::size_t>(k)] += tw[c * H + k] * dtb;
      }
      double* dhc = dh.data() + static_cast<std::size_t>(c) * len;
      for (std::size_t l = 0; l < len; ++l) dhc[l] = dhc[l] / kSqrt2 + dhbc[l];
    }
  }

  // input projection backward
  {
    double* gw = gptr(kInputW);
    double* gb = gptr(kInputB);
    for (int c = 0; c < C; ++c) {
      const double* dhc = dh.data() + static_cast<std::size_t>(c) * len;
      for (std::size_t l = 0; l < len; ++l) {
        gb[c] += dhc[l];
        for (int j = 0; j < 4; ++j)
          gw[c * 4 + j] += dhc[l] * cache.input4[static_cast<std::size_t>(j) * len + l];
      }
    }
  }

  // t-encoder backward
  {
    std::vector<double> d_pre2(static_cast<std::size_t>(H));
    for (int k = 0; k < H; ++k)
      d_pre2[static_cast<std::size_t>(k)] =
          d_t_h2[static_cast<std::size_t>(k)] * nn::silu_grad(cache.t_h2_pre[static_cast<std::size_t>(k)]);
    const double* w2 = params.ptr(kTFc2W);
    double* gw2 = gptr(kTFc2W);
    double* gb2 = gptr(kTFc2B);
    std::vector<double> d_h1(static_cast<std::size_t>(H), 0.0);
    for (int k = 0; k < H; ++k) {
      const double d = d_pre2[static_cast<std::size_t>(k)];
      gb2[k] += d;
      for (int j = 0; j < H; ++j) {
        gw2[k * H + j] += d * cache.t_h1[static_cast<std::size_t>(j)];
        d_h1[static_cast<std::size_t>(j)] += w2[k * H + j] * d;
      }
    }
    double* gw1 = gptr(kTFc1W);
    double* gb1 = gptr(kTFc1B);
    for (int k = 0; k < H; ++k) {
      const double d = d_h1[static_cast<std::size_t>(k)] *
                       nn::silu_grad(cache.t_h1_pre[static_cast<std::size_t>(k)]);
      gb1[k] += d;
      for (int j = 0; j < 128; ++j)
        gw1[k * 128 + j] += d * cache.t_enc[static_cast<std::size_t>(j)];
    }
  }

  // user broadcast dense backward
  {
    double* gw = gptr(kUserDenseW);
    double* gb = gptr(kUserDenseB);
    for (int d = 0; d < D; ++d) {
      const double dd = d_user_proj[static_cast<std::size_t>(d)];
      gb[d] += dd;
      for (int e = 0; e < D; ++e)
        gw[d * D + e] += dd * cache.user_input[static_cast<std::size_t>(e)];
    }
  }

  for (const auto& spec : params.tensors) {
    const double* g = grads.data() + spec.offset;
    for (std::size_t i = 0; i < spec.size; ++i)
      require(std::isfinite(g[i]),
              "denoiser backward: non-finite gradient in " + spec.name);
  }
}

}  // namespace gazediff::denoiser
