// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

// Differentiable kernels. Image tensors are [batch, channel, freq, time];
// sequence tensors are [batch, time, feature].

#include <cstdint>
#include <random>
#include <span>

#include "antispoof/nn/tensor.hpp"

namespace antispoof::nn {

/// Stride-1 2-D convolution with symmetric zero padding.
/// x [B,Ci,H,W], weight [Co,Ci,k,k], bias [Co].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, std::size_t pad);

/// Winners chosen by the max-type ops (MFM, max pooling), one entry per op
/// call in call order.
struct RoutingTape {
  std::vector<std::vector<std::uint32_t>> choices;
};

/// While alive, max-type ops on this thread either append their winners to
/// the tape or reuse the recorded winners instead of comparing values.
/// Replaying pins the network to the linear piece of the recorded point,
/// which finite-difference gradient checks need near ties.
class RoutingScope {
 public:
  enum class Mode { kRecord, kReplay };
  RoutingScope(RoutingTape& tape, Mode mode);
  ~RoutingScope();
  RoutingScope(const RoutingScope&) = delete;
  RoutingScope& operator=(const RoutingScope&) = delete;

 private:
  RoutingTape* prev_tape_;
  Mode prev_mode_;
  std::size_t prev_cursor_;
};

/// Max-Feature-Map over dim 1: out[:, c] = max(x[:, c], x[:, c + C/2]).
/// Ties route the gradient to the first half.
template <typename T>
Tensor<T> mfm(const Tensor<T>& x);

/// 2x2 max pooling, stride 2, floor mode.
template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x);

/// Per-channel batch normalization. In train mode batch statistics are used
/// and the running buffers are updated in place (unbiased variance).
template <typename T>
Tensor<T> batch_norm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                       Tensor<T>& running_mean, Tensor<T>& running_var, bool train,
                       double momentum = 0.1, double eps = 1e-5);

/// [B,C,H,W] -> [B,W,C*H]; feature index is c * H + h.
template <typename T>
Tensor<T> time_sequence(const Tensor<T>& x);

template <typename T>
struct LstmWeights {
  Tensor<T> w_ih;  // [4H, In], gate order i, f, g, o
  Tensor<T> w_hh;  // [4H, H]
  Tensor<T> bias;  // [4H]
};

/// Single-direction LSTM over [B,T,In] -> [B,T,H]. With reverse the sequence
/// is consumed from the last step and outputs stay aligned to input steps.
template <typename T>
Tensor<T> lstm(const Tensor<T>& x, const LstmWeights<T>& w, bool reverse);

/// Concatenation along the last dimension of two rank-3 tensors.
template <typename T>
Tensor<T> concat_last(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> blstm(const Tensor<T>& x, const LstmWeights<T>& forward, const LstmWeights<T>& backward);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

template <typename T>
Tensor<T> sum(const Tensor<T>& a);

/// [B,T,F] -> [B,F]
template <typename T>
Tensor<T> mean_time(const Tensor<T>& x);

/// x [B,In], weight [Out,In], bias [Out] or undefined.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// Inverted dropout; identity when !train or rate == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool train, std::mt19937_64& rng);

/// Cosine between each row of x [B,E] and each row of w [K,E] -> [B,K].
/// Throws NumericalError on a zero-norm row.
template <typename T>
Tensor<T> cosine_similarity(const Tensor<T>& x, const Tensor<T>& w);

/// Mean over the batch of -log softmax(scale * (z - margin * onehot))[label].
/// scale 1 and margin 0 is ordinary cross-entropy.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels, double scale = 1.0,
                                double margin = 0.0);

}  // namespace antispoof::nn
