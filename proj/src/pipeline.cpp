#include "gazediff/pipeline.hpp"

namespace gazediff::pipeline {
namespace {

nlohmann::json schedule_meta(const diffusion::NoiseSchedule& sched) {
  return {{"steps", sched.steps},
          {"beta_start", sched.beta.front()},
          {"beta_end", sched.beta.back()}};
}

diffusion::NoiseSchedule schedule_from_meta(const nlohmann::json& meta) {
  return diffusion::linear_schedule(meta["steps"], meta["beta_start"],
                                    meta["beta_end"]);
}

}  // namespace

void save_denoiser(const std::string& path,
                   const denoiser::DenoiserConfig& cfg,
                   const nn::ParamStore& params,
                   const diffusion::NoiseSchedule& sched) {
  nlohmann::json meta;
  meta["kind"] = "denoiser";
  meta["config"] = {{"n_layers", cfg.n_layers},
                    {"channels", cfg.channels},
                    {"kernel_size", cfg.kernel_size},
                    {"dilation_cycle", cfg.dilation_cycle},
                    {"sequence_length", cfg.sequence_length},
                    {"embedding_dim", cfg.embedding_dim},
                    {"t_embed_hidden", cfg.t_embed_hidden}};
  meta["schedule"] = schedule_meta(sched);
  checkpoint::save(path, params, meta);
}

DenoiserCheckpoint load_denoiser(const std::string& path) {
  const nlohmann::json meta = checkpoint::read_meta(path);
  require(meta.value("kind", "") == "denoiser",
          "load_denoiser: checkpoint kind mismatch in " + path);
  DenoiserCheckpoint ckpt;
  const auto& c = meta["config"];
  ckpt.config.n_layers = c["n_layers"];
  ckpt.config.channels = c["channels"];
  ckpt.config.kernel_size = c["kernel_size"];
  ckpt.config.dilation_cycle = c["dilation_cycle"];
  ckpt.config.sequence_length = c["sequence_length"];
  ckpt.config.embedding_dim = c["embedding_dim"];
  ckpt.config.t_embed_hidden = c["t_embed_hidden"];
  ckpt.schedule = schedule_from_meta(meta["schedule"]);
  ckpt.params = denoiser::make_params(ckpt.config);
  checkpoint::load(path, ckpt.params);
  return ckpt;
}

void save_embedder(const std::string& path,
                   const embedder::EmbedderConfig& cfg,
                   const nn::ParamStore& params) {
  nlohmann::json meta;
  meta["kind"] = "embedder";
  meta["config"] = {{"sequence_length", cfg.sequence_length},
                    {"embedding_dim", cfg.embedding_dim},
                    {"n_users", cfg.n_users}};
  checkpoint::save(path, params, meta);
}

EmbedderCheckpoint load_embedder(const std::string& path) {
  const nlohmann::json meta = checkpoint::read_meta(path);
  require(meta.value("kind", "") == "embedder",
          "load_embedder: checkpoint kind mismatch in " + path);
  EmbedderCheckpoint ckpt;
  const auto& c = meta["config"];
  ckpt.config.sequence_length = c["sequence_length"];
  ckpt.config.embedding_dim = c["embedding_dim"];
  ckpt.config.n_users = c["n_users"];
  ckpt.params = embedder::make_params(ckpt.config);
  checkpoint::load(path, ckpt.params);
  return ckpt;
}

std::vector<eval::SequenceRef> make_refs(
    const corpus::Corpus& corpus,
    const std::vector<std::pair<int, int>>& side) {
  std::vector<eval::SequenceRef> refs;
  refs.reserve(side.size());
  for (const auto& [user, index] : side) {
    eval::SequenceRef ref;
    ref.gaze = &corpus.sequences[static_cast<std::size_t>(user)]
                                [static_cast<std::size_t>(index)];
    ref.user = user;
    refs.push_back(ref);
  }
  return refs;
}

std::vector<eval::SequenceRef> make_refs(const corpus::Corpus& corpus) {
  std::vector<eval::SequenceRef> refs;
  for (int u = 0; u < corpus.config.n_users; ++u)
    for (const auto& g : corpus.sequences[static_cast<std::size_t>(u)]) {
      eval::SequenceRef ref;
      ref.gaze = &g;
      ref.user = u;
      refs.push_back(ref);
    }
  return refs;
}

EmbedderDataset make_embedder_dataset(
    const corpus::Corpus& corpus,
    const std::vector<std::pair<int, int>>& side) {
  EmbedderDataset out;
  out.sequences.reserve(side.size());
  out.labels.reserve(side.size());
  for (const auto& [user, index] : side) {
    out.sequences.push_back(training::preprocess_gaze(
        corpus.sequences[static_cast<std::size_t>(user)]
                        [static_cast<std::size_t>(index)]));
    out.labels.push_back(user);
  }
  return out;
}

}  // namespace gazediff::pipeline
