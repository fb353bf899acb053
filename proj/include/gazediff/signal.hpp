#pragma once

#include <array>

#include "gazediff/types.hpp"

namespace gazediff::signal {

inline constexpr int kSgWindow = 7;
inline constexpr double kVelocityClamp = 1000.0;  // deg/s

// First-derivative Savitzky-Golay kernel, window 7, polynomial order 2.
// coefficients[k] weights sample n-3+k; unit sample spacing.
struct SGKernel {
  std::array<double, kSgWindow> coefficients;
};

// The closed-form window-7/order-2/deriv-1 kernel [-3..3]/28.
SGKernel sg_derivative_kernel();

// Per-channel SG derivative scaled by sample_rate -> deg/s, edge-replicated
// padding at the boundaries. Output space is raw_deg_per_s, pre-clamp.
VelocitySequence savgol_derivative(const GazeSequence& g);

// NaN->0, clamp to +-1000 deg/s, sine-normalize to [-1, 1]
// (s = sin(v/1000 * 90 deg)).
VelocitySequence preprocess(const VelocitySequence& v);

// Inverse of preprocess on [-1, 1]; values outside by <= 1e-6 are clipped.
VelocitySequence denormalize(const VelocitySequence& s);

// Cumulative sum of v / sample_rate from a starting gaze position.
GazeSequence integrate(const VelocitySequence& v, double start_x,
                       double start_y);

// Downsample to low_rate by decimation, then zero-order-hold back to the
// original rate; strips high-frequency user-specific content.
GazeSequence remove_identity(const GazeSequence& g, double low_rate = 20.0);

// 2nd-order Butterworth high-pass, forward-then-backward (zero phase).
// Non-finite outputs are preserved for the caller to count, not clamped.
VelocitySequence butterworth_highpass(const VelocitySequence& v,
                                      double cutoff_hz = 20.0);

// Classical baseline: velocities of the identity-removed base plus the
// high-pass-filtered velocities of the target.
VelocitySequence highpass_inject(const GazeSequence& base,
                                 const GazeSequence& target,
                                 double cutoff_hz = 20.0);

}  // namespace gazediff::signal
