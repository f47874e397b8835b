// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include <cmath>
#include <random>

#include "antispoof/error.hpp"
#include "antispoof/train.hpp"
#include "doctest.h"

using namespace antispoof;

namespace {

constexpr std::size_t kBins = 32;

// Spoof items carry extra energy in the upper half of the bins.
std::vector<TrainItem> toy_items(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::uniform_int_distribution<std::size_t> len(40, 80);
  std::vector<TrainItem> items;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int label = static_cast<int>(i % 2);
    Spectrogram s;
    s.n_bins = kBins;
    s.n_frames = len(rng);
    s.values.resize(s.n_bins * s.n_frames);
    for (std::size_t f = 0; f < kBins; ++f)
      for (std::size_t t = 0; t < s.n_frames; ++t)
        s.at(f, t) = -4.0f + n(rng) + (label == 1 && f >= kBins / 2 ? 1.5f : 0.0f);
    TrainItem it;
    it.utt_id = "u" + std::to_string(seed) + "_" + std::to_string(i);
    it.label = label;
    it.features = std::move(s);
    items.push_back(std::move(it));
  }
  return items;
}

TrainOptions toy_options(LossKind loss) {
  TrainOptions o;
  o.model.input_bins = kBins;
  o.model.width_scale = 0.125;
  o.model.embedding_dim = 128;
  o.model.dropout_rate = 0.0;
  o.model.head = loss == LossKind::kAmSoftmax ? nn::HeadKind::kCosine : nn::HeadKind::kLinear;
  o.loss.kind = loss;
  o.batch_size = 8;
  o.chunk = {32, 48};
  o.eval_frames = 48;
  o.base_lr = 1e-3;
  o.seed = 17;
  return o;
}

bool same_params(const nn::LcnnParams<float>& a, const nn::LcnnParams<float>& b) {
  if (a.params.tensors.size() != b.params.tensors.size()) return false;
  for (std::size_t i = 0; i < a.params.tensors.size(); ++i) {
    const auto x = a.params.tensors[i].data(), y = b.params.tensors[i].data();
    if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("zero epochs returns the initial parameters") {
  const auto train = toy_items(8, 1), dev = toy_items(4, 2);
  auto opts = toy_options(LossKind::kAmSoftmax);
  opts.epochs = 0;
  const auto r = train_loop(train, dev, opts);
  CHECK(r.log.empty());
  CHECK(r.best_epoch == 0);
  CHECK(std::isfinite(r.initial_dev_loss));
  const auto init = nn::init_lcnn<float>(opts.model, opts.seed);
  CHECK(same_params(r.best, init));
  CHECK(format_training_log(r.log) == "epoch,train_loss,dev_loss,lr\n");
}

TEST_CASE("training fits the input standardization on the training features") {
  const auto train = toy_items(8, 1), dev = toy_items(4, 2);
  auto opts = toy_options(LossKind::kAmSoftmax);
  opts.epochs = 0;
  auto r = train_loop(train, dev, opts);
  const auto mean = r.best.buffers.at("input.mean").data();
  const auto scale = r.best.buffers.at("input.scale").data();
  // Lower bins are N(-4, 1) for both classes.
  CHECK(mean[0] == doctest::Approx(-4.0).epsilon(0.1));
  CHECK(scale[0] == doctest::Approx(1.0).epsilon(0.15));
  // Upper bins mix the two classes, so the mean sits between -4 and -2.5.
  CHECK(mean[kBins - 1] > -4.0f);
  CHECK(mean[kBins - 1] < -2.5f);
}

TEST_CASE("training reduces the dev loss on a separable toy task") {
  const auto train = toy_items(24, 3), dev = toy_items(12, 4);
  for (auto loss : {LossKind::kAmSoftmax, LossKind::kCenterJoint}) {
    auto opts = toy_options(loss);
    opts.epochs = 5;
    const auto r = train_loop(train, dev, opts);
    REQUIRE(r.log.size() == 5);
    double best = r.log.front().dev_loss;
    for (const auto& e : r.log) best = std::min(best, e.dev_loss);
    CHECK(best < r.initial_dev_loss);
    CHECK(r.best_epoch >= 1);
    CHECK(r.log[static_cast<std::size_t>(r.best_epoch - 1)].dev_loss == best);
    for (const auto& e : r.log) CHECK(e.lr == doctest::Approx(1e-3));
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto train = toy_items(8, 5), dev = toy_items(4, 6);
  auto opts = toy_options(LossKind::kCenterJoint);
  opts.epochs = 2;
  opts.model.dropout_rate = 0.5;
  const auto a = train_loop(train, dev, opts);
  const auto b = train_loop(train, dev, opts);
  CHECK(format_training_log(a.log) == format_training_log(b.log));
  CHECK(same_params(a.best, b.best));
  opts.seed = 18;
  const auto c = train_loop(train, dev, opts);
  CHECK(format_training_log(a.log) != format_training_log(c.log));
}

TEST_CASE("training option checks") {
  const auto train = toy_items(2, 7), dev = toy_items(2, 8);
  auto opts = toy_options(LossKind::kAmSoftmax);
  opts.model.head = nn::HeadKind::kLinear;
  CHECK_THROWS_AS(train_loop(train, dev, opts), std::invalid_argument);
  opts = toy_options(LossKind::kAmSoftmax);
  opts.batch_size = 0;
  CHECK_THROWS_AS(train_loop(train, dev, opts), std::invalid_argument);
  opts = toy_options(LossKind::kAmSoftmax);
  opts.augment = true;
  CHECK_THROWS_AS(train_loop(train, dev, opts), std::invalid_argument);
  CHECK_THROWS_AS(train_loop({}, dev, toy_options(LossKind::kAmSoftmax)), DataError);
  CHECK(class_index(Label::kBonafide) == 0);
  CHECK(class_index(Label::kSpoof) == 1);
  CHECK_THROWS_AS(class_index(Label::kUnknown), DataError);
}

TEST_CASE("scoring uses a fixed length and returns one score per input") {
  const auto items = toy_items(3, 9);
  auto opts = toy_options(LossKind::kAmSoftmax);
  auto params = nn::init_lcnn<float>(opts.model, 1);
  std::vector<Spectrogram> specs;
  for (const auto& it : items) specs.push_back(*it.features);
  const auto a = score_spectrograms(params, opts.model, specs, 48, 4);
  const auto b = score_spectrograms(params, opts.model, specs, 48, 1);
  REQUIRE(a.size() == specs.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-5));
}
