#pragma once

#include <optional>

#include "gazediff/nn.hpp"
#include "gazediff/types.hpp"

namespace gazediff::embedder {

struct EmbedderConfig {
  int sequence_length = 1000;
  int embedding_dim = 32;
  int n_users = 0;  // classification head size; 0 = no head (inference only)
  // strided conv stack: 2 -> 16 -> 32 -> 32 -> 32, stride 4, kernel 7
  static constexpr int kStride = 4;
  static constexpr int kKernel = 7;
  static constexpr int kChannels[5] = {2, 16, 32, 32, 32};
  static constexpr int kConvLayers = 4;
};

nn::ParamStore make_params(const EmbedderConfig& cfg);
nn::ParamStore init_params(const EmbedderConfig& cfg, uint64_t seed);

struct EmbedCache {
  std::vector<std::vector<double>> inputs;  // per conv layer input (C, len)
  std::vector<std::vector<double>> pre;     // per conv layer pre-ReLU
  std::vector<int> lengths;                 // input length per layer
  std::vector<double> pooled;               // global average, C_last
  std::vector<double> raw;                  // dense output before L2 norm
  double raw_norm = 0.0;
  std::vector<double> embedding;            // unit-norm output
};

// Unit-norm embedding of a normalized velocity sequence.
UserEmbedding embed(const EmbedderConfig& cfg, const nn::ParamStore& params,
                    const VelocitySequence& v, EmbedCache* cache = nullptr);

// Class logits (head applied to the unit-norm embedding).
std::vector<double> logits(const EmbedderConfig& cfg,
                           const nn::ParamStore& params,
                           const std::vector<double>& embedding);

// Reverse-mode gradients seeded with d loss / d embedding. Parameter
// gradients accumulate into grads when given; the returned vector is the
// gradient wrt the (2, L) input tensor when input_grad is requested.
std::vector<double> backward(const EmbedderConfig& cfg,
                             const nn::ParamStore& params,
                             const EmbedCache& cache,
                             const std::vector<double>& d_embedding,
                             std::vector<double>* grads,
                             bool want_input_grad);

double cosine_similarity(const UserEmbedding& a, const UserEmbedding& b);

struct TrainReport {
  double final_accuracy = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double within_user_similarity = 0.0;
  double cross_user_similarity = 0.0;
};

struct EmbedderTrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 1e-3;
  uint64_t seed = 1;
};

// Softmax cross-entropy training of the classification head; the embedding
// is the normalized penultimate activation. Inputs are preprocessed
// (normalized) velocity sequences with integer user labels.
TrainReport train_embedder(const EmbedderConfig& cfg,
                           nn::ParamStore& params,
                           const std::vector<VelocitySequence>& sequences,
                           const std::vector<int>& labels,
                           const EmbedderTrainConfig& train_cfg);

}  // namespace gazediff::embedder
