#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "gazediff/rng.hpp"
#include "gazediff/types.hpp"

namespace gazediff::nn {

struct TensorSpec {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  int fan_in = 1;  // 0 = keep zero-initialized
};

// All parameters of a network live in one flat buffer; tensors are named
// views with (shape, offset). Gradients use shape-congruent flat buffers.
struct ParamStore {
  std::vector<TensorSpec> tensors;
  std::vector<double> data;

  std::size_t add(std::string name, std::vector<int> shape, int fan_in) {
    TensorSpec spec;
    spec.name = std::move(name);
    spec.shape = std::move(shape);
    spec.fan_in = fan_in;
    spec.offset = data.size();
    spec.size = 1;
    for (int d : spec.shape) spec.size *= static_cast<std::size_t>(d);
    data.resize(data.size() + spec.size, 0.0);
    tensors.push_back(spec);
    return tensors.size() - 1;
  }

  double* ptr(std::size_t tensor_index) {
    return data.data() + tensors[tensor_index].offset;
  }
  const double* ptr(std::size_t tensor_index) const {
    return data.data() + tensors[tensor_index].offset;
  }

  const TensorSpec* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }

  std::size_t total_size() const { return data.size(); }
};

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init in registration order;
// tensors registered with fan_in = 0 stay zero.
inline void init_uniform(ParamStore& params, Rng& rng) {
  for (const auto& spec : params.tensors) {
    double* p = params.data.data() + spec.offset;
    if (spec.fan_in <= 0) continue;  // already zero
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
    for (std::size_t i = 0; i < spec.size; ++i) p[i] = rng.uniform(-bound, bound);
  }
}

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Standard Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(std::vector<double>& params,
                      const std::vector<double>& grads, AdamState& state,
                      double lr, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8) {
  require(params.size() == grads.size() && params.size() == state.m.size(),
          "adam_step: shape mismatch");
  for (double g : grads)
    require(std::isfinite(g), "adam_step: non-finite gradient");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace gazediff::nn
