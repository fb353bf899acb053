#pragma once

#include <string>

#include "gazediff/checkpoint.hpp"
#include "gazediff/eval.hpp"
#include "gazediff/training.hpp"

namespace gazediff::pipeline {

// Checkpoint helpers: configs and the noise schedule ride along in the
// manifest so a checkpoint is self-describing.

void save_denoiser(const std::string& path,
                   const denoiser::DenoiserConfig& cfg,
                   const nn::ParamStore& params,
                   const diffusion::NoiseSchedule& sched);

struct DenoiserCheckpoint {
  denoiser::DenoiserConfig config;
  nn::ParamStore params;
  diffusion::NoiseSchedule schedule;
};
DenoiserCheckpoint load_denoiser(const std::string& path);

void save_embedder(const std::string& path,
                   const embedder::EmbedderConfig& cfg,
                   const nn::ParamStore& params);

struct EmbedderCheckpoint {
  embedder::EmbedderConfig config;
  nn::ParamStore params;
};
EmbedderCheckpoint load_embedder(const std::string& path);

// Flattens one side of a corpus split into evaluation references.
std::vector<eval::SequenceRef> make_refs(const corpus::Corpus& corpus,
                                         const std::vector<std::pair<int, int>>& side);
std::vector<eval::SequenceRef> make_refs(const corpus::Corpus& corpus);

// Preprocessed velocity dataset for embedder training.
struct EmbedderDataset {
  std::vector<VelocitySequence> sequences;
  std::vector<int> labels;
};
EmbedderDataset make_embedder_dataset(const corpus::Corpus& corpus,
                                      const std::vector<std::pair<int, int>>& side);

}  // namespace gazediff::pipeline
