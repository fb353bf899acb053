#include "gazediff/signal.hpp"

#include <algorithm>
#include <cmath>

namespace gazediff::signal {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;

double sg_filter_at(const std::vector<double>& x, std::ptrdiff_t n,
                    const SGKernel& k) {
  const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(x.size());
  double acc = 0.0;
  for (int j = 0; j < kSgWindow; ++j) {
    std::ptrdiff_t idx = n - 3 + j;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, len - 1);  // edge replication
    acc += k.coefficients[static_cast<std::size_t>(j)]
           * x[static_cast<std::size_t>(idx)];
  }
  return acc;
}

}  // namespace

SGKernel sg_derivative_kernel() {
  SGKernel k;
  for (int j = 0; j < kSgWindow; ++j)
    k.coefficients[static_cast<std::size_t>(j)] = (j - 3) / 28.0;
  return k;
}

VelocitySequence savgol_derivative(const GazeSequence& g) {
  const std::size_t len = g.length();
  require(len >= kSgWindow, "savgol_derivative: sequence shorter than window");
  require(g.sample_rate > 0.0, "savgol_derivative: sample_rate must be > 0");

  const SGKernel k = sg_derivative_kernel();
  VelocitySequence v;
  v.sample_rate = g.sample_rate;
  v.space = VelocitySpace::raw_deg_per_s;
  v.vx.resize(len);
  v.vy.resize(len);
  for (std::size_t n = 0; n < len; ++n) {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    v.vx[n] = sg_filter_at(g.x, sn, k) * g.sample_rate;
    v.vy[n] = sg_filter_at(g.y, sn, k) * g.sample_rate;
  }
  return v;
}

VelocitySequence preprocess(const VelocitySequence& v) {
  require(v.space == VelocitySpace::raw_deg_per_s,
          "preprocess: expects raw deg/s input");
  auto normalize = [](double value) {
    if (!std::isfinite(value)) value = 0.0;  // eyes assumed fixated
    value = std::clamp(value, -kVelocityClamp, kVelocityClamp);
    return std::sin(value / kVelocityClamp * 90.0 * kDegToRad);
  };
  VelocitySequence out = v;
  out.space = VelocitySpace::normalized;
  for (auto& value : out.vx) value = normalize(value);
  for (auto& value : out.vy) value = normalize(value);
  return out;
}

VelocitySequence denormalize(const VelocitySequence& s) {
  require(s.space == VelocitySpace::normalized,
          "denormalize: expects normalized input");
  auto invert = [](double value) {
    require(std::abs(value) <= 1.0 + 1e-6,
            "denormalize: value outside [-1, 1]");
    value = std::clamp(value, -1.0, 1.0);
    return std::asin(value) / kDegToRad * kVelocityClamp / 90.0;
  };
  VelocitySequence out = s;
  out.space = VelocitySpace::raw_deg_per_s;
  for (auto& value : out.vx) value = invert(value);
  for (auto& value : out.vy) value = invert(value);
  return out;
}

GazeSequence integrate(const VelocitySequence& v, double start_x,
                       double start_y) {
  require(v.space == VelocitySpace::raw_deg_per_s,
          "integrate: expects raw deg/s input");
  const std::size_t len = v.length();
  GazeSequence g;
  g.sample_rate = v.sample_rate;
  g.x.resize(len);
  g.y.resize(len);
  g.valid.assign(len, 1);
  const double dt = 1.0 / v.sample_rate;
  double px = start_x, py = start_y;
  for (std::size_t n = 0; n < len; ++n) {
    if (n > 0) {
      px += v.vx[n] * dt;
      py += v.vy[n] * dt;
    }
    g.x[n] = px;
    g.y[n] = py;
  }
  return g;
}

GazeSequence remove_identity(const GazeSequence& g, double low_rate) {
  require(low_rate > 0.0, "remove_identity: low_rate must be > 0");
  const double ratio = g.sample_rate / low_rate;
  const auto hold = static_cast<std::size_t>(std::llround(ratio));
  require(std::abs(ratio - static_cast<double>(hold)) < 1e-9 && hold >= 1,
          "remove_identity: sample_rate not divisible by low_rate");

  GazeSequence out = g;
  for (std::size_t n = 0; n < g.length(); ++n) {
    const std::size_t src = (n / hold) * hold;
    out.x[n] = g.x[src];
    out.y[n] = g.y[src];
    out.valid[n] = g.valid[src];
  }
  return out;
}

VelocitySequence butterworth_highpass(const VelocitySequence& v,
                                      double cutoff_hz) {
  require(v.space == VelocitySpace::raw_deg_per_s,
          "butterworth_highpass: expects raw deg/s input");
  require(cutoff_hz > 0.0 && cutoff_hz < v.sample_rate / 2.0,
          "butterworth_highpass: cutoff must lie below Nyquist");

  // RBJ biquad high-pass, Q = 1/sqrt(2) (2nd-order Butterworth), bilinear
  // transform with prewarp at the cutoff.
  const double w0 = 2.0 * kPi * cutoff_hz / v.sample_rate;
  const double cw = std::cos(w0);
  const double alpha = std::sin(w0) / std::sqrt(2.0);
  const double a0 = 1.0 + alpha;
  const double b0 = (1.0 + cw) / 2.0 / a0;
  const double b1 = -(1.0 + cw) / a0;
  const double b2 = b0;
  const double a1 = -2.0 * cw / a0;
  const double a2 = (1.0 - alpha) / a0;

  auto biquad = [&](std::vector<double>& x) {
    double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
    for (double& sample : x) {
      const double y = b0 * sample + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = sample;
      y2 = y1;
      y1 = y;
      sample = y;
    }
  };
  auto filtfilt = [&](std::vector<double>& x) {
    biquad(x);
    std::reverse(x.begin(), x.end());
    biquad(x);
    std::reverse(x.begin(), x.end());
  };

  VelocitySequence out = v;
  filtfilt(out.vx);
  filtfilt(out.vy);
  return out;
}

VelocitySequence highpass_inject(const GazeSequence& base,
                                 const GazeSequence& target,
                                 double cutoff_hz) {
  require(base.length() == target.length(),
          "highpass_inject: length mismatch");
  require(base.sample_rate == target.sample_rate,
          "highpass_inject: sample-rate mismatch");

  VelocitySequence out = savgol_derivative(remove_identity(base));
  const VelocitySequence high =
      butterworth_highpass(savgol_derivative(target), cutoff_hz);
  for (std::size_t n = 0; n < out.length(); ++n) {
    out.vx[n] += high.vx[n];
    out.vy[n] += high.vy[n];
  }
  return out;
}

}  // namespace gazediff::signal
