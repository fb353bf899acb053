#pragma once

#include <string>
#include <vector>

#include "gazediff/corpus.hpp"
#include "gazediff/denoiser.hpp"
#include "gazediff/diffusion.hpp"
#include "gazediff/embedder.hpp"

namespace gazediff::eval {

enum class EventClass { fixation, saccade, other };

// I-VT thresholds: < 100 deg/s fixation, > 300 deg/s saccade.
EventClass ivt_classify(double speed_deg_per_s);

struct HistogramSpec {
  int bin_count = 500;        // 500 all, 350 saccade, 50 fixation
  double bin_width = 2.0;     // deg/s
};

enum class EventFilter { all, fixation, saccade };

// Normalized histogram of velocity magnitudes clipped to [0, 1000].
std::vector<double> velocity_histogram(
    const std::vector<const VelocitySequence*>& sequences,
    const HistogramSpec& spec, EventFilter filter);

// Jensen-Shannon divergence with base-2 logs; bounded in [0, 1].
double js_divergence(const std::vector<double>& p, const std::vector<double>& q);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

struct SequenceRef {
  const GazeSequence* gaze = nullptr;
  int user = 0;
};

using EmbeddingTable = std::vector<std::pair<int, UserEmbedding>>;  // (user, E)

EmbeddingTable embed_all(const std::vector<SequenceRef>& sequences,
                         const embedder::EmbedderConfig& cfg,
                         const nn::ParamStore& params);

MeanStd within_user_baseline(const EmbeddingTable& table);
MeanStd cross_user_baseline(const EmbeddingTable& table);

struct ModelBundle {
  const denoiser::DenoiserConfig* config = nullptr;
  const nn::ParamStore* params = nullptr;
  const diffusion::NoiseSchedule* schedule = nullptr;
};

struct EvalOptions {
  int samples_per_sequence = 5;
  uint64_t seed = 0;
  int max_sequences = 0;  // 0 = no cap
};

struct EvalReport {
  MeanStd similarity;
  std::size_t invalid_outputs = 0;          // non-finite baseline outputs
  std::size_t pairing_fallbacks = 0;        // manipulation pairs outside [0, 0.05]
  std::vector<VelocitySequence> synthesized;  // raw deg/s outputs
};

// Identity recovery: condition on (identity-removed sequence, E(ground
// truth)) and compare E(synthetic) with E(ground truth).
EvalReport recovery_eval(const std::vector<SequenceRef>& test_set,
                         const ModelBundle& model,
                         const embedder::EmbedderConfig& embedder_cfg,
                         const nn::ParamStore& embedder_params,
                         const EvalOptions& options);

// Identity manipulation: inject E(target) into a dissimilar user's base.
EvalReport manipulation_eval(const std::vector<SequenceRef>& test_set,
                             const ModelBundle& model,
                             const embedder::EmbedderConfig& embedder_cfg,
                             const nn::ParamStore& embedder_params,
                             const EvalOptions& options);

// High-pass-filter baseline under the recovery protocol.
EvalReport highpass_recovery_eval(const std::vector<SequenceRef>& test_set,
                                  const embedder::EmbedderConfig& embedder_cfg,
                                  const nn::ParamStore& embedder_params,
                                  const EvalOptions& options);

// Nearest-centroid identification accuracy over embeddings.
double identify_user(const EmbeddingTable& train, const EmbeddingTable& test,
                     int n_users);

}  // namespace gazediff::eval
