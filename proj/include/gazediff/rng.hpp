#pragma once

#include <cmath>
#include <cstdint>

namespace gazediff {

// splitmix64; used to derive independent stream seeds from (seed, index).
inline uint64_t mix_seed(uint64_t seed, uint64_t index) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic generator: xoshiro-free, self-contained uniform/normal
// draws so outputs do not depend on libstdc++ distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 0x853c49e6748fea9bULL) {}

  uint64_t next_u64() {
    // splitmix64 stream
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // index in [0, n)
  uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

  // standard normal via Box-Muller (caches the second draw)
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double lognormal(double mu, double sigma) {
    return std::exp(mu + sigma * normal());
  }

  // Poisson via inversion (small means only)
  int poisson(double lambda) {
    const double l = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > l);
    return k - 1;
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gazediff
