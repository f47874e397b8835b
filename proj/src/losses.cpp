// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/losses.hpp"

#include <stdexcept>

namespace antispoof {

using nn::Tensor;

std::string to_string(LossKind kind) { return kind == LossKind::kAmSoftmax ? "am_softmax" : "center_joint"; }

LossKind parse_loss_kind(const std::string& text) {
  if (text == "am_softmax") return LossKind::kAmSoftmax;
  if (text == "center_joint") return LossKind::kCenterJoint;
  throw std::invalid_argument("unknown loss '" + text + "'");
}

void LossConfig::validate() const {
  if (!(s > 0.0)) throw std::invalid_argument("loss: s must be positive");
  if (!(m >= 0.0 && m < 1.0)) throw std::invalid_argument("loss: m must be in [0, 1)");
  if (!(center_lambda >= 0.0)) throw std::invalid_argument("loss: center_lambda must be non-negative");
  if (!(center_alpha >= 0.0 && center_alpha <= 1.0)) throw std::invalid_argument("loss: center_alpha must be in [0, 1]");
}

template <typename T>
Tensor<T> am_softmax_loss(const Tensor<T>& embeddings, std::span<const int> labels, const Tensor<T>& w, double s,
                          double m) {
  return nn::softmax_cross_entropy(nn::cosine_similarity(embeddings, w), labels, s, m);
}

template <typename T>
Tensor<T> cross_entropy_loss(const Tensor<T>& logits, std::span<const int> labels) {
  return nn::softmax_cross_entropy(logits, labels);
}

template <typename T>
Tensor<T> center_term(const Tensor<T>& embeddings, std::span<const int> labels, const Tensor<T>& centers,
                      double lambda) {
  if (embeddings.rank() != 2 || centers.rank() != 2 || centers.dim(1) != embeddings.dim(1))
    throw std::invalid_argument("center_term: shape mismatch");
  const std::size_t batch = embeddings.dim(0), e = embeddings.dim(1);
  if (labels.size() != batch) throw std::invalid_argument("center_term: label count mismatch");
  std::vector<T> neg(batch * e);
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= centers.dim(0))
      throw std::invalid_argument("center_term: label out of range");
    for (std::size_t j = 0; j < e; ++j) neg[b * e + j] = -centers.data()[static_cast<std::size_t>(labels[b]) * e + j];
  }
  const Tensor<T> diff = nn::add(embeddings, Tensor<T>(embeddings.shape(), std::move(neg)));
  return nn::scale(nn::sum(nn::mul(diff, diff)), static_cast<T>(lambda * 0.5 / static_cast<double>(batch)));
}

template <typename T>
Tensor<T> center_joint_loss(const Tensor<T>& embeddings, const Tensor<T>& logits, std::span<const int> labels,
                            const Tensor<T>& centers, double lambda) {
  return nn::add(cross_entropy_loss(logits, labels), center_term(embeddings, labels, centers, lambda));
}

template <typename T>
void update_centers(Tensor<T>& centers, const Tensor<T>& embeddings, std::span<const int> labels, double alpha) {
  const std::size_t k = centers.dim(0), e = centers.dim(1);
  if (embeddings.rank() != 2 || embeddings.dim(1) != e || labels.size() != embeddings.dim(0))
    throw std::invalid_argument("update_centers: shape mismatch");
  std::vector<double> delta(k * e, 0.0);
  std::vector<std::size_t> count(k, 0);
  auto c = centers.data();
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const auto y = static_cast<std::size_t>(labels[b]);
    if (y >= k) throw std::invalid_argument("update_centers: label out of range");
    ++count[y];
    for (std::size_t j = 0; j < e; ++j) delta[y * e + j] += c[y * e + j] - embeddings.data()[b * e + j];
  }
  for (std::size_t y = 0; y < k; ++y) {
    if (count[y] == 0) continue;
    const double f = alpha / (1.0 + static_cast<double>(count[y]));
    for (std::size_t j = 0; j < e; ++j) c[y * e + j] = static_cast<T>(c[y * e + j] - f * delta[y * e + j]);
  }
}

#define ANTISPOOF_INSTANTIATE_LOSSES(T)                                                                       \
  template Tensor<T> am_softmax_loss(const Tensor<T>&, std::span<const int>, const Tensor<T>&, double, double); \
  template Tensor<T> cross_entropy_loss(const Tensor<T>&, std::span<const int>);                              \
  template Tensor<T> center_term(const Tensor<T>&, std::span<const int>, const Tensor<T>&, double);           \
  template Tensor<T> center_joint_loss(const Tensor<T>&, const Tensor<T>&, std::span<const int>,              \
                                       const Tensor<T>&, double);                                             \
  template void update_centers(Tensor<T>&, const Tensor<T>&, std::span<const int>, double);

ANTISPOOF_INSTANTIATE_LOSSES(float)
ANTISPOOF_INSTANTIATE_LOSSES(double)

#undef ANTISPOOF_INSTANTIATE_LOSSES

}  // namespace antispoof
