// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace antispoof::nn {

template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState& state, double lr, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state does not match parameters");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.numel()) throw std::invalid_argument("adam_step: state size mismatch");
    auto w = p.data();
    const bool has = p.has_grad();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double g = (has ? static_cast<double>(p.node().grad[j]) : 0.0) + cfg.weight_decay * w[j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double mhat = c1 > 0.0 ? m[j] / c1 : m[j];
      const double vhat = c2 > 0.0 ? v[j] / c2 : v[j];
      w[j] = static_cast<T>(w[j] - lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

double steplr(double base_lr, int epoch, int step_size, double gamma) {
  if (epoch < 0) throw std::invalid_argument("steplr: negative epoch");
  if (step_size <= 0) throw std::invalid_argument("steplr: step size must be positive");
  return base_lr * std::pow(gamma, epoch / step_size);
}

template void adam_step(std::vector<Tensor<float>>&, AdamState&, double, const AdamConfig&);
template void adam_step(std::vector<Tensor<double>>&, AdamState&, double, const AdamConfig&);

}  // namespace antispoof::nn
