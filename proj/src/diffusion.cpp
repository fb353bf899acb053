#include "gazediff/diffusion.hpp"

#include <algorithm>
#include <cmath>

namespace gazediff::diffusion {
namespace {

void check_step(int t, const NoiseSchedule& sched, const char* who) {
  require(t >= 1 && t <= sched.steps,
          std::string(who) + ": step index out of range");
}

}  // namespace

double NoiseSchedule::beta_at(int t) const {
  check_step(t, *this, "beta_at");
  return beta[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_at(int t) const {
  check_step(t, *this, "alpha_at");
  return alpha[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar_at(int t) const {
  check_step(t, *this, "alpha_bar_at");
  return alpha_bar[static_cast<std::size_t>(t - 1)];
}

NoiseSchedule linear_schedule(int steps, double beta_start, double beta_end) {
  require(steps >= 2, "linear_schedule: need at least 2 steps");
  require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
          "linear_schedule: require 0 < beta_start <= beta_end < 1");

  NoiseSchedule sched;
  sched.steps = steps;
  sched.beta.resize(static_cast<std::size_t>(steps));
  sched.alpha.resize(static_cast<std::size_t>(steps));
  sched.alpha_bar.resize(static_cast<std::size_t>(steps));
  double running = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double frac = static_cast<double>(i) / (steps - 1);
    const double b = beta_start + (beta_end - beta_start) * frac;
    sched.beta[static_cast<std::size_t>(i)] = b;
    sched.alpha[static_cast<std::size_t>(i)] = 1.0 - b;
    running *= 1.0 - b;
    sched.alpha_bar[static_cast<std::size_t>(i)] = running;
  }
  return sched;
}

Tensor2L q_sample(const Tensor2L& x0, int t, const Tensor2L& epsilon,
                  const NoiseSchedule& sched) {
  check_step(t, sched, "q_sample");
  require(x0.size() == epsilon.size(), "q_sample: shape mismatch");
  const double abar = sched.alpha_bar_at(t);
  const double a = std::sqrt(abar);
  const double b = std::sqrt(1.0 - abar);
  Tensor2L out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * epsilon[i];
  return out;
}

Tensor2L estimate_x0(const Tensor2L& x_t, int t, const Tensor2L& eps_hat,
                     const NoiseSchedule& sched) {
  check_step(t, sched, "estimate_x0");
  require(x_t.size() == eps_hat.size(), "estimate_x0: shape mismatch");
  const double abar = sched.alpha_bar_at(t);
  const double a = std::sqrt(abar);
  const double b = std::sqrt(1.0 - abar);
  Tensor2L out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) out[i] = (x_t[i] - b * eps_hat[i]) / a;
  return out;
}

Tensor2L reverse_step(const Tensor2L& x_t, int t, const Tensor2L& eps_hat,
                      const NoiseSchedule& sched, const Tensor2L& z) {
  check_step(t, sched, "reverse_step");
  require(x_t.size() == eps_hat.size() && x_t.size() == z.size(),
          "reverse_step: shape mismatch");
  const double alpha = sched.alpha_at(t);
  const double abar = sched.alpha_bar_at(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
  const double eps_coef = (1.0 - alpha) / std::sqrt(1.0 - abar);
  // posterior variance beta_tilde, with beta_tilde_1 = beta_1
  double beta_tilde = sched.beta_at(t);
  if (t > 1) beta_tilde *= (1.0 - sched.alpha_bar_at(t - 1)) / (1.0 - abar);
  const double sigma = t == 1 ? 0.0 : std::sqrt(beta_tilde);

  Tensor2L out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    out[i] = inv_sqrt_alpha * (x_t[i] - eps_coef * eps_hat[i]) + sigma * z[i];
  }
  return out;
}

std::vector<double> timestep_encoding(double t) {
  std::vector<double> enc(128);
  for (int i = 0; i < 64; ++i) {
    const double freq = std::pow(10.0, i * 4.0 / 63.0);
    enc[static_cast<std::size_t>(i)] = std::sin(freq * t);
    enc[static_cast<std::size_t>(64 + i)] = std::cos(freq * t);
  }
  return enc;
}

VelocitySequence sample(const ConditioningBundle& cond,
                        const DenoiserFn& denoiser,
                        const NoiseSchedule& sched, uint64_t rng_seed) {
  require(cond.observation.space == VelocitySpace::normalized,
          "sample: observation must be normalized");
  const std::size_t n = 2 * cond.observation.length();
  Rng rng(rng_seed);
  Tensor2L x(n);
  for (auto& value : x) value = rng.normal();

  Tensor2L z(n, 0.0);
  for (int t = sched.steps; t >= 1; --t) {
    const Tensor2L eps_hat = denoiser(x, t, cond);
    if (t > 1) {
      for (auto& value : z) value = rng.normal();
    } else {
      std::fill(z.begin(), z.end(), 0.0);
    }
    x = reverse_step(x, t, eps_hat, sched, z);
  }
  for (auto& value : x) {
    require(std::isfinite(value), "sample: non-finite output");
    value = std::clamp(value, -1.0, 1.0);
  }
  return from_tensor(x, cond.observation.sample_rate);
}

Tensor2L to_tensor(const VelocitySequence& v) {
  Tensor2L x(2 * v.length());
  std::copy(v.vx.begin(), v.vx.end(), x.begin());
  std::copy(v.vy.begin(), v.vy.end(),
            x.begin() + static_cast<std::ptrdiff_t>(v.length()));
  return x;
}

VelocitySequence from_tensor(const Tensor2L& x, double sample_rate) {
  const std::size_t len = x.size() / 2;
  VelocitySequence v;
  v.sample_rate = sample_rate;
  v.space = VelocitySpace::normalized;
  v.vx.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(len));
  v.vy.assign(x.begin() + static_cast<std::ptrdiff_t>(len), x.end());
  return v;
}

}  // namespace gazediff::diffusion
