#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gazediff {

// Gaze angles in degrees of visual angle, two channels, with a validity
// mask (false = tracking loss / blink).
struct GazeSequence {
  double sample_rate = 1000.0;  // Hz
  std::vector<double> x;        // degrees
  std::vector<double> y;        // degrees
  std::vector<uint8_t> valid;   // 1 = valid sample

  std::size_t length() const { return x.size(); }
};

enum class VelocitySpace {
  raw_deg_per_s,  // components in [-1000, 1000] deg/s
  normalized,     // components in [-1, 1]
};

// Angular velocities, either raw deg/s or sine-normalized to [-1, 1].
struct VelocitySequence {
  double sample_rate = 1000.0;
  std::vector<double> vx;
  std::vector<double> vy;
  VelocitySpace space = VelocitySpace::raw_deg_per_s;

  std::size_t length() const { return vx.size(); }
};

// Fixed-dimension unit-norm vector summarizing a user's gaze signature.
struct UserEmbedding {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace gazediff
