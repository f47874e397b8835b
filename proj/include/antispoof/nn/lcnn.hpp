// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "antispoof/nn/ops.hpp"

namespace antispoof::nn {

enum class HeadKind {
  kCosine,  // FC2 rows are the AM-Softmax class vectors, logits are cosines
  kLinear,  // plain affine FC2, used with cross-entropy + center loss
};

std::string to_string(HeadKind kind);
HeadKind parse_head_kind(const std::string& text);

struct LcnnConfig {
  std::size_t input_bins = 257;
  std::array<std::size_t, 9> conv_channels{64, 64, 96, 96, 128, 128, 64, 64, 64};
  double width_scale = 1.0;
  std::size_t embedding_dim = 512;
  double dropout_rate = 0.5;
  HeadKind head = HeadKind::kCosine;

  /// Output channels of conv layer i (0 based) after width scaling, rounded
  /// to an even count of at least 2.
  std::size_t channels(std::size_t i) const;
  /// Width of the per-frame vector after the last pool.
  std::size_t flatten_dim() const;
  /// Per-direction hidden size; both BLSTMs output flatten_dim.
  std::size_t lstm_hidden() const { return flatten_dim() / 2; }
  /// Throws std::invalid_argument when the configuration is unusable.
  void validate() const;
};

/// Ordered list of named tensors.
template <typename T>
struct NamedTensors {
  std::vector<std::string> names;
  std::vector<Tensor<T>> tensors;

  void add(std::string name, Tensor<T> t);
  Tensor<T>& at(const std::string& name);
  const Tensor<T>& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t size() const { return names.size(); }
};

template <typename T>
struct LcnnParams {
  NamedTensors<T> params;   // trainable
  NamedTensors<T> buffers;  // input standardization, batchnorm running stats, center-loss centers

  /// Deep copy with no autograd history.
  LcnnParams clone() const;
  std::size_t parameter_count() const;
};

template <typename To, typename From>
LcnnParams<To> cast_params(const LcnnParams<From>& p);

template <typename T>
LcnnParams<T> init_lcnn(const LcnnConfig& cfg, std::uint64_t seed);

/// One traced layer output. dims follow the (frequency, time, channels)
/// layout for the convolutional stack, (time, features) for sequences and
/// (features) after pooling; the batch axis is dropped.
struct ShapeRecord {
  std::string layer;
  std::vector<std::size_t> dims;
};

struct ForwardOptions {
  bool train = false;
  std::uint64_t dropout_seed = 0;
  std::vector<ShapeRecord>* trace = nullptr;
};

template <typename T>
struct LcnnOutput {
  Tensor<T> logits;     // [B, 2]
  Tensor<T> embedding;  // [B, embedding_dim]
};

/// batch is [B, bins, frames]; bins must equal cfg.input_bins and frames
/// must survive four poolings (>= 16). Shape problems raise
/// std::invalid_argument naming the layer.
template <typename T>
LcnnOutput<T> forward_lcnn(LcnnParams<T>& params, const LcnnConfig& cfg, const Tensor<T>& batch,
                           const ForwardOptions& opts = {});

/// logit(bonafide) - logit(spoof) per row.
template <typename T>
std::vector<double> detection_scores(const Tensor<T>& logits);

}  // namespace antispoof::nn
