// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "antispoof/augment.hpp"
#include "antispoof/dsp.hpp"
#include "antispoof/losses.hpp"
#include "antispoof/nn/lcnn.hpp"
#include "antispoof/nn/optim.hpp"

namespace antispoof {

/// Class index used by the network: 0 bonafide, 1 spoof.
int class_index(Label label);

struct TrainItem {
  std::string utt_id;
  int label = 0;
  AudioBuffer audio;                     // needed when augmenting online
  std::optional<Spectrogram> features;   // used as-is when not augmenting
};

struct TrainOptions {
  FeatureKind feature = FeatureKind::kStft1024;
  nn::LcnnConfig model;
  LossConfig loss;
  int epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  ChunkRange chunk{500, 700};
  std::size_t eval_frames = 600;  // fixed length for dev loss and scoring
  double base_lr = nn::kBaseLearningRate;
  int lr_step = 10;
  double lr_gamma = 0.5;
  nn::AdamConfig adam;
  bool augment = false;
  AugmentPolicy policy;
  const AugmentPools* pools = nullptr;
  const ExternalCodecHooks* hooks = nullptr;
};

struct EpochLog {
  int epoch = 0;  // 1 based
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  nn::LcnnParams<float> best;
  int best_epoch = 0;  // 0 when no epoch ran
  double initial_dev_loss = 0.0;
  std::vector<EpochLog> log;
};

/// Mini-batch training with one chunk length drawn per batch, optional
/// online augmentation seeded per (epoch, utterance), and selection of the
/// epoch with the lowest dev loss. Throws NumericalError naming the epoch
/// and batch when the loss becomes non-finite.
TrainResult train_loop(const std::vector<TrainItem>& train, const std::vector<TrainItem>& dev,
                       const TrainOptions& opts);

/// Mean loss over items in eval mode at opts.eval_frames.
double evaluate_loss(nn::LcnnParams<float>& params, const std::vector<TrainItem>& items, const TrainOptions& opts);

/// "epoch,train_loss,dev_loss,lr" header plus one row per epoch.
std::string format_training_log(const std::vector<EpochLog>& log);

/// Detection scores for fixed-length chunks of each spectrogram.
std::vector<double> score_spectrograms(nn::LcnnParams<float>& params, const nn::LcnnConfig& cfg,
                                       const std::vector<Spectrogram>& specs, std::size_t eval_frames,
                                       std::size_t batch_size = 32);

}  // namespace antispoof
