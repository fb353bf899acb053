#pragma once

#include <string>

#include "gazediff/corpus.hpp"
#include "gazediff/denoiser.hpp"
#include "gazediff/diffusion.hpp"
#include "gazediff/embedder.hpp"

namespace gazediff::training {

enum class NoiseNorm { l1, l2 };

struct TrainConfig {
  int batch_size = 8;
  double learning_rate = 2e-4;
  bool cosine_lr_decay = false;  // anneal lr to 0 over the step budget
  int steps = 1500;
  uint64_t seed = 1;
  bool id_guidance = true;       // enable the identity loss term
  bool raw_lambda_objective = false;  // L_noise + lambda * L_id instead of
                                      // the self-normalized form
  double lambda_id = 0.5;
  NoiseNorm noise_norm = NoiseNorm::l1;
  int log_every = 10;
  double identity_low_rate = 20.0;  // Hz used by identity removal
};

struct LossBreakdown {
  double loss_noise = 0.0;
  double loss_id = 0.0;
  double combined = 0.0;
};

// mean |eps - eps_hat| (or mean squared error for NoiseNorm::l2)
double loss_noise(const diffusion::Tensor2L& eps,
                  const diffusion::Tensor2L& eps_hat,
                  NoiseNorm norm = NoiseNorm::l1);

// 1 - cos(E(x0), E(x0_hat)), both embeddings unit-norm
double loss_id(const embedder::EmbedderConfig& embedder_cfg,
               const nn::ParamStore& embedder_params,
               const VelocitySequence& x0, const VelocitySequence& x0_hat);

// Forward value of the self-normalized objective: exactly 1.5 whenever
// both terms are nonzero; a zero term falls back to its raw value.
double combined_loss(double noise, double id);

// One Algorithm-1 step over a batch: preprocess, q_sample, forward,
// estimate x0, losses, full gradients. Gradients accumulate into grads.
LossBreakdown train_step(const std::vector<const GazeSequence*>& batch,
                         const denoiser::DenoiserConfig& cfg,
                         const nn::ParamStore& params,
                         const embedder::EmbedderConfig& embedder_cfg,
                         const nn::ParamStore& embedder_params,
                         const diffusion::NoiseSchedule& sched,
                         const TrainConfig& train_cfg, Rng& rng,
                         std::vector<double>& grads);

struct TrainResult {
  LossBreakdown first;
  LossBreakdown last;
  double mean_initial_noise = 0.0;  // mean loss_noise over first 10 steps
  double mean_final_noise = 0.0;    // mean over last 10 steps
};

// Full training loop; writes "step,loss_noise,loss_id" CSV when
// metrics_csv is non-empty. The embedder stays frozen.
TrainResult train(const std::vector<const GazeSequence*>& train_set,
                  const denoiser::DenoiserConfig& cfg,
                  nn::ParamStore& params,
                  const embedder::EmbedderConfig& embedder_cfg,
                  const nn::ParamStore& embedder_params,
                  const diffusion::NoiseSchedule& sched,
                  const TrainConfig& train_cfg,
                  const std::string& metrics_csv = "");

// Conditioning pipeline shared by training and inference: gaze ->
// SG velocities -> NaN/clamp/sine preprocess.
VelocitySequence preprocess_gaze(const GazeSequence& g);

}  // namespace gazediff::training
