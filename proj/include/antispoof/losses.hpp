// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <span>
#include <string>

#include "antispoof/nn/ops.hpp"

namespace antispoof {

enum class LossKind { kAmSoftmax, kCenterJoint };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& text);

struct LossConfig {
  LossKind kind = LossKind::kAmSoftmax;
  double s = 20.0;
  double m = 0.9;
  double center_lambda = 0.05;
  double center_alpha = 0.5;

  void validate() const;
};

/// Mean over the batch of -log softmax(s * (cos - m * onehot))[y], with
/// cos the cosine between each embedding and each row of w.
template <typename T>
nn::Tensor<T> am_softmax_loss(const nn::Tensor<T>& embeddings, std::span<const int> labels, const nn::Tensor<T>& w,
                              double s, double m);

template <typename T>
nn::Tensor<T> cross_entropy_loss(const nn::Tensor<T>& logits, std::span<const int> labels);

/// lambda / 2 * mean_i |x_i - c_{y_i}|^2. Centers are treated as constants.
template <typename T>
nn::Tensor<T> center_term(const nn::Tensor<T>& embeddings, std::span<const int> labels, const nn::Tensor<T>& centers,
                          double lambda);

/// Cross-entropy on logits plus center_term.
template <typename T>
nn::Tensor<T> center_joint_loss(const nn::Tensor<T>& embeddings, const nn::Tensor<T>& logits,
                                std::span<const int> labels, const nn::Tensor<T>& centers, double lambda);

/// Delta rule: c_j -= alpha * sum_{i: y_i = j} (c_j - x_i) / (1 + n_j).
template <typename T>
void update_centers(nn::Tensor<T>& centers, const nn::Tensor<T>& embeddings, std::span<const int> labels,
                    double alpha);

}  // namespace antispoof
