#pragma once

#include <functional>
#include <vector>

#include "gazediff/rng.hpp"
#include "gazediff/types.hpp"

namespace gazediff::diffusion {

// Per-step beta/alpha/alpha_bar tables. Step t is 1-based in the API,
// stored 0-based internally (beta[t-1] etc.).
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;      // 1 - beta
  std::vector<double> alpha_bar;  // running product of alpha

  double beta_at(int t) const;       // t in [1, steps]
  double alpha_at(int t) const;
  double alpha_bar_at(int t) const;
};

NoiseSchedule linear_schedule(int steps = 50, double beta_start = 1e-4,
                              double beta_end = 0.05);

// Interleaved 2xL tensor: channel-major (vx[0..L-1], vy[0..L-1]).
using Tensor2L = std::vector<double>;

// Conditioning pair (x_0^co, E(x_0)).
struct ConditioningBundle {
  VelocitySequence observation;  // normalized
  UserEmbedding user_embedding;
};

// Forward diffusion: x_t = sqrt(abar)*x0 + sqrt(1-abar)*eps.
Tensor2L q_sample(const Tensor2L& x0, int t, const Tensor2L& epsilon,
                  const NoiseSchedule& sched);

// Inverts the forward step given a noise estimate.
Tensor2L estimate_x0(const Tensor2L& x_t, int t, const Tensor2L& eps_hat,
                     const NoiseSchedule& sched);

// One ancestral denoising step; z must be zero at t = 1.
Tensor2L reverse_step(const Tensor2L& x_t, int t, const Tensor2L& eps_hat,
                      const NoiseSchedule& sched, const Tensor2L& z);

// 128-dim sin/cos encoding of the timestep (radian arguments).
std::vector<double> timestep_encoding(double t);

using DenoiserFn =
    std::function<Tensor2L(const Tensor2L& x_t, int t,
                           const ConditioningBundle& cond)>;

// Full reverse chain from pure noise; deterministic given the seed.
VelocitySequence sample(const ConditioningBundle& cond,
                        const DenoiserFn& denoiser,
                        const NoiseSchedule& sched, uint64_t rng_seed);

// Helpers between VelocitySequence (normalized) and the flat 2xL tensor.
Tensor2L to_tensor(const VelocitySequence& v);
VelocitySequence from_tensor(const Tensor2L& x, double sample_rate);

}  // namespace gazediff::diffusion
