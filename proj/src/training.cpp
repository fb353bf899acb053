#include "gazediff/training.hpp"

#include <cmath>
#include <fstream>

#include "gazediff/signal.hpp"

namespace gazediff::training {
namespace {

void check_finite(const std::vector<double>& values, const char* stage) {
  for (double value : values)
    require(std::isfinite(value),
            std::string("train_step: non-finite value at stage ") + stage);
}

}  // namespace

VelocitySequence preprocess_gaze(const GazeSequence& g) {
  VelocitySequence v = signal::savgol_derivative(g);
  // invalid samples become NaN so preprocess maps them to zero velocity
  for (std::size_t i = 0; i < g.length(); ++i) {
    if (!g.valid[i]) {
      v.vx[i] = std::nan("");
      v.vy[i] = std::nan("");
    }
  }
  return signal::preprocess(v);
}

double loss_noise(const diffusion::Tensor2L& eps,
                  const diffusion::Tensor2L& eps_hat, NoiseNorm norm) {
  require(eps.size() == eps_hat.size(), "loss_noise: shape mismatch");
  require(!eps.empty(), "loss_noise: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = eps[i] - eps_hat[i];
    acc += norm == NoiseNorm::l1 ? std::abs(d) : d * d;
  }
  return acc / static_cast<double>(eps.size());
}

double loss_id(const embedder::EmbedderConfig& embedder_cfg,
               const nn::ParamStore& embedder_params,
               const VelocitySequence& x0, const VelocitySequence& x0_hat) {
  const UserEmbedding e0 = embedder::embed(embedder_cfg, embedder_params, x0);
  const UserEmbedding eh = embedder::embed(embedder_cfg, embedder_params, x0_hat);
  return 1.0 - embedder::cosine_similarity(e0, eh);
}

double combined_loss(double noise, double id) {
  // degenerate cases keep their raw values so logs stay meaningful
  if (noise <= 0.0 || id <= 0.0) return noise + 0.5 * id;
  return 1.5;  // noise/sg(noise) + 0.5 * id/sg(id)
}

LossBreakdown train_step(const std::vector<const GazeSequence*>& batch,
                         const denoiser::DenoiserConfig& cfg,
                         const nn::ParamStore& params,
                         const embedder::EmbedderConfig& embedder_cfg,
                         const nn::ParamStore& embedder_params,
                         const diffusion::NoiseSchedule& sched,
                         const TrainConfig& train_cfg, Rng& rng,
                         std::vector<double>& grads) {
  require(!batch.empty(), "train_step: empty batch");
  const auto len = static_cast<std::size_t>(cfg.sequence_length);
  const std::size_t n_elem = 2 * len;
  const auto batch_size = static_cast<double>(batch.size());

  struct ItemState {
    int t = 0;
    diffusion::Tensor2L eps;
    diffusion::Tensor2L eps_hat;
    diffusion::Tensor2L x_t;
    diffusion::ConditioningBundle cond;
    denoiser::ForwardCache cache;
    UserEmbedding e0;
    embedder::EmbedCache hat_cache;  // embedder pass over x0_hat
    double item_loss_id = 0.0;
  };
  std::vector<ItemState> items(batch.size());

  double total_noise = 0.0;
  double total_id = 0.0;

  for (std::size_t bi = 0; bi < batch.size(); ++bi) {
    const GazeSequence& g0 = *batch[bi];
    require(g0.length() == len, "train_step: sequence length mismatch");
    ItemState& it = items[bi];

    const GazeSequence g0_co =
        signal::remove_identity(g0, train_cfg.identity_low_rate);
    const VelocitySequence x0 = preprocess_gaze(g0);
    const VelocitySequence x0_co = preprocess_gaze(g0_co);
    check_finite(x0.vx, "preprocess");
    check_finite(x0.vy, "preprocess");

    it.e0 = embedder::embed(embedder_cfg, embedder_params, x0);
    it.cond.observation = x0_co;
    it.cond.user_embedding = it.e0;

    it.t = 1 + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(sched.steps)));
    it.eps.resize(n_elem);
    for (auto& value : it.eps) value = rng.normal();

    const diffusion::Tensor2L x0_tensor = diffusion::to_tensor(x0);
    it.x_t = diffusion::q_sample(x0_tensor, it.t, it.eps, sched);
    it.eps_hat = denoiser::forward(cfg, params, it.x_t, it.t, it.cond, &it.cache);
    check_finite(it.eps_hat, "denoiser forward");

    total_noise += loss_noise(it.eps, it.eps_hat, train_cfg.noise_norm);

    if (train_cfg.id_guidance) {
      const diffusion::Tensor2L x0_hat_tensor =
          diffusion::estimate_x0(it.x_t, it.t, it.eps_hat, sched);
      check_finite(x0_hat_tensor, "estimate_x0");
      const VelocitySequence x0_hat =
          diffusion::from_tensor(x0_hat_tensor, x0.sample_rate);
      const UserEmbedding eh =
          embedder::embed(embedder_cfg, embedder_params, x0_hat, &it.hat_cache);
      it.item_loss_id = 1.0 - embedder::cosine_similarity(it.e0, eh);
      total_id += it.item_loss_id;
    }
  }

  LossBreakdown losses;
  losses.loss_noise = total_noise / batch_size;
  losses.loss_id = train_cfg.id_guidance ? total_id / batch_size : 0.0;

  // gradient scale per objective term
  double noise_scale = 1.0;
  double id_scale = train_cfg.id_guidance ? train_cfg.lambda_id : 0.0;
  if (!train_cfg.raw_lambda_objective) {
    noise_scale = losses.loss_noise > 0.0 ? 1.0 / losses.loss_noise : 1.0;
    if (train_cfg.id_guidance)
      id_scale = losses.loss_id > 0.0 ? 0.5 / losses.loss_id : 0.5;
    losses.combined = combined_loss(losses.loss_noise,
                                    train_cfg.id_guidance ? losses.loss_id : 1.0);
    if (!train_cfg.id_guidance) losses.combined = losses.loss_noise > 0.0 ? 1.0 : 0.0;
  } else {
    losses.combined = losses.loss_noise + id_scale * losses.loss_id;
  }

  for (auto& it : items) {
    std::vector<double> d_eps(n_elem, 0.0);

    // noise-loss path
    const double noise_coef =
        noise_scale / (static_cast<double>(n_elem) * batch_size);
    for (std::size_t i = 0; i < n_elem; ++i) {
      const double diff = it.eps[i] - it.eps_hat[i];
      if (train_cfg.noise_norm == NoiseNorm::l1) {
        d_eps[i] = -noise_coef * (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0));
      } else {
        d_eps[i] = -noise_coef * 2.0 * diff;
      }
    }

    // identity-loss path: through estimate_x0 and the frozen embedder
    if (train_cfg.id_guidance && id_scale != 0.0) {
      std::vector<double> d_eh(it.e0.dim());
      for (std::size_t i = 0; i < it.e0.dim(); ++i)
        d_eh[i] = -it.e0.values[i] * id_scale / batch_size;
      const std::vector<double> d_x0_hat = embedder::backward(
          embedder_cfg, embedder_params, it.hat_cache, d_eh, nullptr, true);
      const double abar = sched.alpha_bar_at(it.t);
      const double coef = -std::sqrt(1.0 - abar) / std::sqrt(abar);
      for (std::size_t i = 0; i < n_elem; ++i) d_eps[i] += coef * d_x0_hat[i];
    }

    denoiser::backward(cfg, params, it.cache, d_eps, grads);
  }
  return losses;
}

TrainResult train(const std::vector<const GazeSequence*>& train_set,
                  const denoiser::DenoiserConfig& cfg,
                  nn::ParamStore& params,
                  const embedder::EmbedderConfig& embedder_cfg,
                  const nn::ParamStore& embedder_params,
                  const diffusion::NoiseSchedule& sched,
                  const TrainConfig& train_cfg,
                  const std::string& metrics_csv) {
  require(!train_set.empty(), "train: empty training set");
  require(train_cfg.steps >= 1 && train_cfg.batch_size >= 1,
          "train: positive step and batch counts required");

  std::ofstream log;
  if (!metrics_csv.empty()) {
    log.open(metrics_csv, std::ios::trunc);
    require(log.good(), "train: cannot open metrics log " + metrics_csv);
    log << "step,loss_noise,loss_id\n";
  }

  nn::AdamState opt(params.total_size());
  Rng rng(mix_seed(train_cfg.seed, 0x7121));
  TrainResult result;
  const int window = std::min(10, train_cfg.steps);

  std::vector<double> grads(params.total_size());
  for (int step = 0; step < train_cfg.steps; ++step) {
    std::vector<const GazeSequence*> batch;
    batch.reserve(static_cast<std::size_t>(train_cfg.batch_size));
    for (int b = 0; b < train_cfg.batch_size; ++b)
      batch.push_back(train_set[rng.uniform_index(train_set.size())]);

    std::fill(grads.begin(), grads.end(), 0.0);
    const LossBreakdown losses =
        train_step(batch, cfg, params, embedder_cfg, embedder_params, sched,
                   train_cfg, rng, grads);
    double lr = train_cfg.learning_rate;
    if (train_cfg.cosine_lr_decay && train_cfg.steps > 1) {
      lr *= 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(step) /
                                  static_cast<double>(train_cfg.steps)));
    }
    nn::adam_step(params.data, grads, opt, lr);

    if (step == 0) result.first = losses;
    result.last = losses;
    if (step < window) result.mean_initial_noise += losses.loss_noise / window;
    if (step >= train_cfg.steps - window)
      result.mean_final_noise += losses.loss_noise / window;
    if (log.is_open() && (step % train_cfg.log_every == 0 ||
                          step == train_cfg.steps - 1)) {
      log << step << ',' << losses.loss_noise << ',' << losses.loss_id << '\n';
    }
  }
  return result;
}

}  // namespace gazediff::training
