#pragma once

#include "gazediff/diffusion.hpp"
#include "gazediff/nn.hpp"

namespace gazediff::denoiser {

struct DenoiserConfig {
  int n_layers = 6;
  int channels = 16;          // residual channels C
  int kernel_size = 3;
  int dilation_cycle = 10;    // dilation of layer i is 2^(i mod cycle)
  int sequence_length = 1000;
  int embedding_dim = 32;     // user-embedding dimension D
  int t_embed_hidden = 128;   // 512 at paper scale, scaled with C

  int dilation(int layer) const { return 1 << (layer % dilation_cycle); }
  // span of the dilated stack, one pass
  int receptive_field() const;
};

// Registers all tensors of the conditional noise-prediction network.
nn::ParamStore make_params(const DenoiserConfig& cfg);

// Fresh weights; final output conv stays zero so eps_hat == 0 untrained.
nn::ParamStore init_params(const DenoiserConfig& cfg, uint64_t seed);

// Cached intermediates so backward can avoid recomputation. Layout of
// per-layer buffers matches the forward pass; all are channel-major (c*L+l).
struct ForwardCache {
  std::vector<double> input4;      // (4, L) concat of x_t and observation
  std::vector<double> t_enc;       // 128
  std::vector<double> t_h1_pre, t_h1;  // t-encoder hidden activations
  std::vector<double> t_h2_pre, t_h2;
  std::vector<double> user_input;  // conditioning embedding, D
  std::vector<double> user_proj;   // broadcast dense output, D
  std::vector<std::vector<double>> h_in;    // per layer, residual input (C, L)
  std::vector<std::vector<double>> gate_y;  // per layer, pre-gate (2C, L)
  std::vector<std::vector<double>> gate;    // per layer, tanh*sigmoid (C, L)
  std::vector<double> skip_sum;    // (C, L) sum of skip branches / sqrt(n)
  std::vector<double> head1_pre;   // (C, L) after first head conv
  std::vector<double> eps_hat;     // (2, L)
};

// eps_hat = f(params, x_t, t | cond); pure, shape-preserving.
diffusion::Tensor2L forward(const DenoiserConfig& cfg,
                            const nn::ParamStore& params,
                            const diffusion::Tensor2L& x_t, int t,
                            const diffusion::ConditioningBundle& cond,
                            ForwardCache* cache = nullptr);

// Reverse-mode gradients of forward wrt all parameters, seeded with
// d loss / d eps_hat. Accumulates into grads (size == params.total_size()).
void backward(const DenoiserConfig& cfg, const nn::ParamStore& params,
              const ForwardCache& cache, const std::vector<double>& d_eps,
              std::vector<double>& grads);

}  // namespace gazediff::denoiser
