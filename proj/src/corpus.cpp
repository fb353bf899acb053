#include "gazediff/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "gazediff/rng.hpp"

namespace gazediff::corpus {
namespace {

namespace fs = std::filesystem;
constexpr double kPi = 3.14159265358979323846;

// iterative radix-2 FFT, in place
void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t length = 2; length <= n; length <<= 1) {
    const double angle = 2.0 * kPi / static_cast<double>(length) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += length) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < length / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + length / 2] * w;
        a[i + k] = u + v;
        a[i + k + length / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& value : a) value /= static_cast<double>(n);
}

// unit-variance 1/f^color noise via frequency-domain amplitude shaping
std::vector<double> colored_noise(std::size_t length, double color, Rng& rng) {
  std::size_t n = 1;
  while (n < length) n <<= 1;
  std::vector<std::complex<double>> spec(n);
  spec[0] = 0.0;  // no DC
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double amp = std::pow(static_cast<double>(k), -color / 2.0);
    const std::complex<double> value(rng.normal() * amp, rng.normal() * amp);
    spec[k] = value;
    if (k < n / 2) spec[n - k] = std::conj(value);
  }
  spec[n / 2] = std::complex<double>(spec[n / 2].real(), 0.0);
  fft(spec, true);
  std::vector<double> out(length);
  double mean = 0.0;
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = spec[i].real();
    mean += out[i];
  }
  mean /= static_cast<double>(length);
  double var = 0.0;
  for (auto& value : out) {
    value -= mean;
    var += value * value;
  }
  var /= static_cast<double>(length);
  const double inv_std = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
  for (auto& value : out) value *= inv_std;
  return out;
}

// minimum-jerk position profile on [0, 1]
double min_jerk(double s) {
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

void append_csv_value(std::string& line, double value, bool valid) {
  if (valid) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    line += buf;
  }
}

}  // namespace

UserSignature generate_user(uint64_t seed, int user_id) {
  Rng rng(mix_seed(seed, 0xc0ffee00ULL + static_cast<uint64_t>(user_id)));
  UserSignature sig;
  sig.user_id = user_id;
  sig.tremor_amplitude = rng.uniform(0.02, 0.12);
  sig.tremor_color = rng.uniform(0.6, 1.6);
  sig.microsaccade_rate = rng.uniform(0.5, 2.5);
  sig.microsaccade_amplitude = rng.uniform(0.1, 0.5);
  sig.saccade_vmax = rng.uniform(300.0, 650.0);
  sig.saccade_amplitude_const = rng.uniform(3.0, 8.0);
  sig.fixation_mu = rng.uniform(5.0, 6.0);     // mean fixation ~150-400 ms
  sig.fixation_sigma = rng.uniform(0.2, 0.5);
  return sig;
}

GazeSequence generate_sequence(const UserSignature& sig, int length,
                               double sample_rate, uint64_t seq_seed,
                               double workspace_deg) {
  require(length >= 7, "generate_sequence: length below SG window");
  Rng rng(seq_seed);
  const auto len = static_cast<std::size_t>(length);
  const double dt = 1.0 / sample_rate;
  const double w = workspace_deg;

  // tremor traces for the full sequence, one per channel
  Rng tremor_rng(mix_seed(seq_seed, 0x7e));
  const std::vector<double> tx = colored_noise(len, sig.tremor_color, tremor_rng);
  const std::vector<double> ty = colored_noise(len, sig.tremor_color, tremor_rng);

  GazeSequence g;
  g.sample_rate = sample_rate;
  g.x.resize(len);
  g.y.resize(len);
  g.valid.assign(len, 1);

  double fx = rng.uniform(-w / 2.0, w / 2.0);
  double fy = rng.uniform(-w / 2.0, w / 2.0);

  std::size_t n = 0;
  bool in_fixation = true;
  while (n < len) {
    if (in_fixation) {
      double dur_ms = rng.lognormal(sig.fixation_mu, sig.fixation_sigma);
      dur_ms = std::clamp(dur_ms, 50.0, 1200.0);
      auto dur = static_cast<std::size_t>(dur_ms / 1000.0 * sample_rate);
      dur = std::max<std::size_t>(dur, 20);

      // Poisson-scheduled microsaccades within this fixation
      const int n_ms = rng.poisson(sig.microsaccade_rate * dur_ms / 1000.0);
      struct Micro {
        std::size_t onset;
        double dx, dy;
      };
      std::vector<Micro> micros;
      for (int k = 0; k < n_ms; ++k) {
        Micro m;
        m.onset = static_cast<std::size_t>(rng.uniform() * static_cast<double>(dur));
        const double amp = sig.microsaccade_amplitude * rng.uniform(0.4, 1.0);
        const double dir = rng.uniform(0.0, 2.0 * kPi);
        m.dx = amp * std::cos(dir);
        m.dy = amp * std::sin(dir);
        micros.push_back(m);
      }
      std::sort(micros.begin(), micros.end(),
                [](const Micro& a, const Micro& b) { return a.onset < b.onset; });

      const std::size_t ms_dur = static_cast<std::size_t>(0.02 * sample_rate);  // 20 ms
      for (std::size_t i = 0; i < dur && n < len; ++i, ++n) {
        double px = fx, py = fy;
        for (const auto& m : micros) {
          if (i < m.onset) break;
          const std::size_t into = i - m.onset;
          const double s = ms_dur > 0
                               ? std::min(1.0, static_cast<double>(into) /
                                                   static_cast<double>(ms_dur))
                               : 1.0;
          px += m.dx * min_jerk(s);
          py += m.dy * min_jerk(s);
        }
        g.x[n] = std::clamp(px + sig.tremor_amplitude * tx[n], -w, w);
        g.y[n] = std::clamp(py + sig.tremor_amplitude * ty[n], -w, w);
      }
      for (const auto& m : micros) {
        fx += m.dx;
        fy += m.dy;
      }
      in_fixation = false;
    } else {
      const double gx = rng.uniform(-w, w);
      const double gy = rng.uniform(-w, w);
      const double amp = std::hypot(gx - fx, gy - fy);
      if (amp < 0.5) {
        in_fixation = true;  // too close, extend fixation instead
        continue;
      }
      // main sequence: v_peak = vmax * (1 - exp(-A/c)); min-jerk peak is
      // 1.875 * A / T, which fixes the duration
      const double v_peak =
          sig.saccade_vmax * (1.0 - std::exp(-amp / sig.saccade_amplitude_const));
      double dur_s = 1.875 * amp / v_peak;
      auto dur = static_cast<std::size_t>(std::max(dur_s / dt, 8.0));
      const double sx = fx, sy = fy;
      for (std::size_t i = 0; i < dur && n < len; ++i, ++n) {
        const double s = min_jerk(static_cast<double>(i + 1) / static_cast<double>(dur));
        g.x[n] = std::clamp(sx + (gx - sx) * s + sig.tremor_amplitude * tx[n], -w, w);
        g.y[n] = std::clamp(sy + (gy - sy) * s + sig.tremor_amplitude * ty[n], -w, w);
      }
      fx = gx;
      fy = gy;
      in_fixation = true;
    }
  }
  return g;
}

GazeSequence load_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_csv: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "load_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "n,x,y", "load_csv: bad header in " + path);

  GazeSequence g;
  std::vector<long> stamps;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string n_str, x_str, y_str;
    std::getline(ss, n_str, ',');
    std::getline(ss, x_str, ',');
    std::getline(ss, y_str, ',');

    std::size_t pos = 0;
    long stamp = 0;
    try {
      stamp = std::stol(n_str, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    require(pos == n_str.size() && !n_str.empty(),
            "load_csv: bad timestamp at line " + std::to_string(line_no) +
                " of " + path);
    stamps.push_back(stamp);

    auto parse_coord = [&](const std::string& field, double& out) {
      if (field.empty()) return false;
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      require(used == field.size(),
              "load_csv: bad value at line " + std::to_string(line_no) +
                  " of " + path);
      if (!std::isfinite(value)) return false;
      out = value;
      return true;
    };
    double x = 0.0, y = 0.0;
    const bool vx = parse_coord(x_str, x);
    const bool vy = parse_coord(y_str, y);
    g.x.push_back(vx ? x : 0.0);
    g.y.push_back(vy ? y : 0.0);
    g.valid.push_back(vx && vy ? 1 : 0);
  }
  require(!stamps.empty(), "load_csv: no samples in " + path);

  // infer the rate from the median timestamp delta (ms)
  if (stamps.size() >= 2) {
    std::vector<long> deltas;
    for (std::size_t i = 1; i < stamps.size(); ++i)
      deltas.push_back(stamps[i] - stamps[i - 1]);
    std::nth_element(deltas.begin(), deltas.begin() + static_cast<std::ptrdiff_t>(deltas.size() / 2),
                     deltas.end());
    const long step = std::max(1L, deltas[deltas.size() / 2]);
    g.sample_rate = 1000.0 / static_cast<double>(step);
  }
  return g;
}

void save_csv(const GazeSequence& g, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "save_csv: cannot open " + path);
  out << "n,x,y\n";
  for (std::size_t i = 0; i < g.length(); ++i) {
    const long stamp = std::lround(static_cast<double>(i) * 1000.0 / g.sample_rate);
    std::string line = std::to_string(stamp);
    line += ',';
    append_csv_value(line, g.x[i], g.valid[i] != 0);
    line += ',';
    append_csv_value(line, g.y[i], g.valid[i] != 0);
    line += '\n';
    out << line;
  }
  require(out.good(), "save_csv: write failed for " + path);
}

Corpus generate(const CorpusConfig& config) {
  require(config.n_users >= 2, "corpus: need at least 2 users");
  require(config.workspace_deg > 0.0, "corpus: workspace must be positive");
  Corpus corpus;
  corpus.config = config;
  corpus.signatures.reserve(static_cast<std::size_t>(config.n_users));
  corpus.sequences.resize(static_cast<std::size_t>(config.n_users));
  for (int u = 0; u < config.n_users; ++u) {
    corpus.signatures.push_back(generate_user(config.seed, u));
    auto& seqs = corpus.sequences[static_cast<std::size_t>(u)];
    seqs.reserve(static_cast<std::size_t>(config.sequences_per_user));
    for (int k = 0; k < config.sequences_per_user; ++k) {
      const uint64_t seq_seed =
          mix_seed(config.seed, (static_cast<uint64_t>(u) << 20) + static_cast<uint64_t>(k) + 1);
      seqs.push_back(generate_sequence(corpus.signatures.back(),
                                       config.sequence_length,
                                       config.sample_rate, seq_seed,
                                       config.workspace_deg));
    }
  }
  return corpus;
}

void save(const Corpus& corpus, const std::string& dir) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["config"] = {{"n_users", corpus.config.n_users},
                        {"sequences_per_user", corpus.config.sequences_per_user},
                        {"sequence_length", corpus.config.sequence_length},
                        {"sample_rate", corpus.config.sample_rate},
                        {"seed", corpus.config.seed},
                        {"workspace_deg", corpus.config.workspace_deg}};
  nlohmann::json signatures = nlohmann::json::array();
  for (const auto& sig : corpus.signatures) {
    signatures.push_back({{"user_id", sig.user_id},
                          {"tremor_amplitude", sig.tremor_amplitude},
                          {"tremor_color", sig.tremor_color},
                          {"microsaccade_rate", sig.microsaccade_rate},
                          {"microsaccade_amplitude", sig.microsaccade_amplitude},
                          {"saccade_vmax", sig.saccade_vmax},
                          {"saccade_amplitude_const", sig.saccade_amplitude_const},
                          {"fixation_mu", sig.fixation_mu},
                          {"fixation_sigma", sig.fixation_sigma}});
  }
  manifest["signatures"] = signatures;
  std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::trunc);
  require(mf.good(), "corpus save: cannot write manifest");
  mf << manifest.dump(2) << "\n";

  for (int u = 0; u < corpus.config.n_users; ++u) {
    const fs::path user_dir = fs::path(dir) / std::to_string(u);
    fs::create_directories(user_dir);
    const auto& seqs = corpus.sequences[static_cast<std::size_t>(u)];
    for (std::size_t k = 0; k < seqs.size(); ++k)
      save_csv(seqs[k], (user_dir / (std::to_string(k) + ".csv")).string());
  }
}

Corpus load(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  require(mf.good(), "corpus load: cannot open manifest in " + dir);
  const nlohmann::json manifest = nlohmann::json::parse(mf);
  Corpus corpus;
  const auto& cfg = manifest["config"];
  corpus.config.n_users = cfg["n_users"];
  corpus.config.sequences_per_user = cfg["sequences_per_user"];
  corpus.config.sequence_length = cfg["sequence_length"];
  corpus.config.sample_rate = cfg["sample_rate"];
  corpus.config.seed = cfg["seed"];
  corpus.config.workspace_deg = cfg["workspace_deg"];
  for (const auto& s : manifest["signatures"]) {
    UserSignature sig;
    sig.user_id = s["user_id"];
    sig.tremor_amplitude = s["tremor_amplitude"];
    sig.tremor_color = s["tremor_color"];
    sig.microsaccade_rate = s["microsaccade_rate"];
    sig.microsaccade_amplitude = s["microsaccade_amplitude"];
    sig.saccade_vmax = s["saccade_vmax"];
    sig.saccade_amplitude_const = s["saccade_amplitude_const"];
    sig.fixation_mu = s["fixation_mu"];
    sig.fixation_sigma = s["fixation_sigma"];
    corpus.signatures.push_back(sig);
  }
  corpus.sequences.resize(static_cast<std::size_t>(corpus.config.n_users));
  for (int u = 0; u < corpus.config.n_users; ++u) {
    auto& seqs = corpus.sequences[static_cast<std::size_t>(u)];
    for (int k = 0; k < corpus.config.sequences_per_user; ++k) {
      const fs::path p = fs::path(dir) / std::to_string(u) / (std::to_string(k) + ".csv");
      seqs.push_back(load_csv(p.string()));
      seqs.back().sample_rate = corpus.config.sample_rate;
    }
  }
  return corpus;
}

Split split(const Corpus& corpus, double train_ratio, uint64_t seed) {
  require(train_ratio > 0.0 && train_ratio < 1.0,
          "split: ratio must lie in (0, 1)");
  Split out;
  for (int u = 0; u < corpus.config.n_users; ++u) {
    const auto k = corpus.sequences[static_cast<std::size_t>(u)].size();
    require(k >= 2, "split: user " + std::to_string(u) + " has < 2 sequences");
    std::vector<int> indices(k);
    std::iota(indices.begin(), indices.end(), 0);
    Rng rng(mix_seed(seed, 0x59117 + static_cast<uint64_t>(u)));
    for (std::size_t i = k - 1; i > 0; --i) {
      const std::size_t j = rng.uniform_index(i + 1);
      std::swap(indices[i], indices[j]);
    }
    auto n_train = static_cast<std::size_t>(
        std::lround(train_ratio * static_cast<double>(k)));
    n_train = std::clamp<std::size_t>(n_train, 1, k - 1);
    for (std::size_t i = 0; i < k; ++i) {
      if (i < n_train)
        out.train.emplace_back(u, indices[i]);
      else
        out.test.emplace_back(u, indices[i]);
    }
  }
  return out;
}

}  // namespace gazediff::corpus
