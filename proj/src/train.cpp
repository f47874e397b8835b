// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "antispoof/error.hpp"
#include "antispoof/hash.hpp"
#include "antispoof/text_util.hpp"

namespace antispoof {

namespace {

using nn::Tensor;

Tensor<float> stack(const std::vector<Spectrogram>& specs) {
  const std::size_t bins = specs.at(0).n_bins, frames = specs.at(0).n_frames;
  std::vector<float> v;
  v.reserve(specs.size() * bins * frames);
  for (const auto& s : specs) {
    if (s.n_bins != bins || s.n_frames != frames) throw std::invalid_argument("stack: ragged batch");
    v.insert(v.end(), s.values.begin(), s.values.end());
  }
  return Tensor<float>({specs.size(), bins, frames}, std::move(v));
}

Tensor<float> compute_loss(nn::LcnnParams<float>& params, const nn::LcnnOutput<float>& out,
                           const std::vector<int>& labels, const TrainOptions& opts) {
  if (opts.loss.kind == LossKind::kAmSoftmax) {
    return am_softmax_loss(out.embedding, labels, params.params.at("fc2.weight"), opts.loss.s, opts.loss.m);
  }
  return center_joint_loss(out.embedding, out.logits, labels, params.buffers.at("centers"), opts.loss.center_lambda);
}

// Per-bin mean and inverse deviation over every frame of the training features.
void fit_input_normalization(nn::LcnnParams<float>& params, const std::vector<Spectrogram>& specs) {
  auto mean = params.buffers.at("input.mean").data();
  auto scale = params.buffers.at("input.scale").data();
  const std::size_t bins = mean.size();
  std::vector<double> sum(bins, 0.0), sq(bins, 0.0);
  double count = 0.0;
  for (const auto& s : specs) {
    if (s.n_bins != bins) throw std::invalid_argument("training features do not match the model input bins");
    for (std::size_t f = 0; f < bins; ++f)
      for (std::size_t t = 0; t < s.n_frames; ++t) {
        const double v = s.values[f * s.n_frames + t];
        sum[f] += v;
        sq[f] += v * v;
      }
    count += static_cast<double>(s.n_frames);
  }
  if (count < 2.0) return;
  for (std::size_t f = 0; f < bins; ++f) {
    const double mu = sum[f] / count;
    const double var = std::max(sq[f] / count - mu * mu, 0.0);
    mean[f] = static_cast<float>(mu);
    scale[f] = static_cast<float>(1.0 / std::sqrt(var + 1e-6));
  }
}

void check_options(const TrainOptions& opts) {
  opts.model.validate();
  opts.loss.validate();
  const bool cosine = opts.model.head == nn::HeadKind::kCosine;
  if (cosine != (opts.loss.kind == LossKind::kAmSoftmax))
    throw std::invalid_argument("am_softmax needs the cosine head and center_joint the linear head");
  if (opts.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (opts.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (opts.augment && !opts.pools) throw std::invalid_argument("online augmentation needs noise and RIR pools");
}

}  // namespace

int class_index(Label label) {
  if (label == Label::kBonafide) return 0;
  if (label == Label::kSpoof) return 1;
  throw DataError("unlabeled trial in training data");
}

double evaluate_loss(nn::LcnnParams<float>& params, const std::vector<TrainItem>& items, const TrainOptions& opts) {
  double total = 0.0;
  for (std::size_t start = 0; start < items.size(); start += opts.batch_size) {
    const std::size_t end = std::min(items.size(), start + opts.batch_size);
    std::vector<Spectrogram> specs;
    std::vector<int> labels;
    for (std::size_t i = start; i < end; ++i) {
      const auto& it = items[i];
      const Spectrogram full = it.features ? *it.features : extract_features(it.audio, opts.feature);
      specs.push_back(chunk_to_length(full, opts.eval_frames, ChunkMode::kEval));
      labels.push_back(it.label);
    }
    const auto out = nn::forward_lcnn(params, opts.model, stack(specs), {});
    total += static_cast<double>(compute_loss(params, out, labels, opts).item()) * static_cast<double>(end - start);
  }
  return total / static_cast<double>(items.size());
}

TrainResult train_loop(const std::vector<TrainItem>& train, const std::vector<TrainItem>& dev,
                       const TrainOptions& opts) {
  if (train.empty() || dev.empty()) throw DataError("train_loop: train and dev sets must be non-empty");
  check_options(opts);

  TrainResult result;
  auto params = nn::init_lcnn<float>(opts.model, opts.seed);
  std::vector<Spectrogram> cached;
  for (const auto& it : train) cached.push_back(it.features ? *it.features : extract_features(it.audio, opts.feature));
  fit_input_normalization(params, cached);
  if (opts.augment) cached.clear();
  result.best = params.clone();
  result.initial_dev_loss = evaluate_loss(params, dev, opts);
  if (opts.epochs == 0) return result;

  nn::AdamState adam;
  double best_dev = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train.size());
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    const double lr = nn::steplr(opts.base_lr, epoch, opts.lr_step, opts.lr_gamma);
    std::mt19937_64 rng(splitmix64(opts.seed ^ splitmix64(static_cast<std::uint64_t>(epoch) + 1)));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t batch_id = 0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size, ++batch_id) {
      const std::size_t end = std::min(order.size(), start + opts.batch_size);
      const auto frames = static_cast<std::size_t>(sample_chunk_size(rng, opts.chunk));
      std::vector<Spectrogram> specs;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        const auto& it = train[order[i]];
        Spectrogram full;
        if (opts.augment) {
          const auto useed = derive_seed(opts.seed, static_cast<std::uint64_t>(epoch), it.utt_id);
          const auto recipe = sample_recipe(opts.policy, *opts.pools, useed);
          full = extract_features(apply_recipe(it.audio, recipe, *opts.pools, opts.hooks), opts.feature);
        } else {
          full = cached[order[i]];
        }
        specs.push_back(chunk_to_length(full, frames, ChunkMode::kTrain, &rng));
        labels.push_back(it.label);
      }

      for (auto& t : params.params.tensors) t.zero_grad();
      nn::ForwardOptions fo;
      fo.train = true;
      fo.dropout_seed = splitmix64(opts.seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(epoch) << 32 | batch_id));
      const auto out = nn::forward_lcnn(params, opts.model, stack(specs), fo);
      const auto loss = compute_loss(params, out, labels, opts);
      const double lv = loss.item();
      if (!std::isfinite(lv))
        throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1) + " batch " +
                             std::to_string(batch_id));
      nn::backward(loss);
      nn::adam_step(params.params.tensors, adam, lr, opts.adam);
      if (opts.loss.kind == LossKind::kCenterJoint) {
        update_centers(params.buffers.at("centers"), out.embedding.detach(), labels, opts.loss.center_alpha);
      }
      loss_sum += lv * static_cast<double>(end - start);
    }

    const double dev_loss = evaluate_loss(params, dev, opts);
    if (!std::isfinite(dev_loss))
      throw NumericalError("training diverged: non-finite dev loss after epoch " + std::to_string(epoch + 1));
    result.log.push_back({epoch + 1, loss_sum / static_cast<double>(train.size()), dev_loss, lr});
    if (dev_loss < best_dev) {
      best_dev = dev_loss;
      result.best = params.clone();
      result.best_epoch = epoch + 1;
    }
  }
  return result;
}

std::string format_training_log(const std::vector<EpochLog>& log) {
  std::string out = "epoch,train_loss,dev_loss,lr\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.dev_loss) + "," +
           format_double(e.lr) + "\n";
  }
  return out;
}

std::vector<double> score_spectrograms(nn::LcnnParams<float>& params, const nn::LcnnConfig& cfg,
                                       const std::vector<Spectrogram>& specs, std::size_t eval_frames,
                                       std::size_t batch_size) {
  std::vector<double> scores;
  scores.reserve(specs.size());
  for (std::size_t start = 0; start < specs.size(); start += batch_size) {
    const std::size_t end = std::min(specs.size(), start + batch_size);
    std::vector<Spectrogram> chunk;
    for (std::size_t i = start; i < end; ++i) chunk.push_back(chunk_to_length(specs[i], eval_frames, ChunkMode::kEval));
    const auto out = nn::forward_lcnn(params, cfg, stack(chunk), {});
    for (double s : nn::detection_scores(out.logits)) {
      if (!std::isfinite(s)) throw NumericalError("non-finite detection score");
      scores.push_back(s);
    }
  }
  return scores;
}

}  // namespace antispoof
