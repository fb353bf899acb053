#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gazediff/types.hpp"

namespace gazediff::corpus {

// Per-user generative parameters; the ground-truth identity signal.
struct UserSignature {
  int user_id = 0;
  double tremor_amplitude = 0.05;     // deg, fixational jitter sigma
  double tremor_color = 1.0;          // spectral exponent of 1/f^a noise
  double microsaccade_rate = 1.0;     // events/s during fixation
  double microsaccade_amplitude = 0.3;  // deg
  double saccade_vmax = 500.0;        // deg/s, main-sequence asymptote
  double saccade_amplitude_const = 5.0;  // deg, main-sequence curvature
  double fixation_mu = 5.35;          // lognormal location, log(ms)
  double fixation_sigma = 0.35;       // lognormal scale
};

struct CorpusConfig {
  int n_users = 8;
  int sequences_per_user = 40;
  int sequence_length = 1000;
  double sample_rate = 1000.0;
  uint64_t seed = 7;
  double workspace_deg = 15.0;  // positions stay within +-workspace_deg
};

// Deterministic per-user signature draw from documented ranges.
UserSignature generate_user(uint64_t seed, int user_id);

// Fixation/saccade alternation with 1/f tremor, Poisson microsaccades and
// minimum-jerk saccades obeying the signature's main sequence.
GazeSequence generate_sequence(const UserSignature& sig, int length,
                               double sample_rate, uint64_t seq_seed,
                               double workspace_deg = 15.0);

// Gaze CSV: header `n,x,y`; n = integer milliseconds, x/y = degrees with
// 6 decimals, empty field = invalid sample.
GazeSequence load_csv(const std::string& path);
void save_csv(const GazeSequence& g, const std::string& path);

struct Corpus {
  CorpusConfig config;
  std::vector<UserSignature> signatures;
  // sequences[user][k]
  std::vector<std::vector<GazeSequence>> sequences;
};

Corpus generate(const CorpusConfig& config);

// Directory layout: <dir>/<user_id>/<seq_id>.csv + manifest.json.
void save(const Corpus& corpus, const std::string& dir);
Corpus load(const std::string& dir);

// Per-user stratified split of sequence indices; deterministic.
struct Split {
  // (user, sequence index) pairs
  std::vector<std::pair<int, int>> train;
  std::vector<std::pair<int, int>> test;
};
Split split(const Corpus& corpus, double train_ratio, uint64_t seed);

}  // namespace gazediff::corpus
