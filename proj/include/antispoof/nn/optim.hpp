// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <vector>

#include "antispoof/nn/tensor.hpp"

namespace antispoof::nn {

inline constexpr double kBaseLearningRate = 3e-4;

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  double weight_decay = 1e-4;  // L2 term added to the gradient
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

/// One Adam update with bias correction over every tensor in params, using
/// the gradients currently stored on them (missing gradients count as zero).
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState& state, double lr, const AdamConfig& cfg = {});

/// base_lr * gamma^floor(epoch / step_size).
double steplr(double base_lr, int epoch, int step_size = 10, double gamma = 0.5);

}  // namespace antispoof::nn
