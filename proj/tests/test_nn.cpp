// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include <cmath>
#include <random>
#include <vector>

#include "antispoof/binary_io.hpp"
#include "antispoof/error.hpp"
#include "antispoof/nn/checkpoint.hpp"
#include "antispoof/nn/lcnn.hpp"
#include "antispoof/nn/ops.hpp"
#include "antispoof/nn/optim.hpp"
#include "antispoof/nn/tensor.hpp"
#include "doctest.h"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace antispoof;
using namespace antispoof::nn;
using antispoof::testing::TempDir;

namespace {

Tensor<double> randn(const Shape& shape, std::uint64_t seed, bool requires_grad = false, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = d(rng);
  return Tensor<double>(shape, std::move(v), requires_grad);
}

double at4(const Tensor<double>& t, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  return t.data()[((a * t.dim(1) + b) * t.dim(2) + c) * t.dim(3) + d];
}

Tensor<double> reverse_time(const Tensor<double>& x) {
  const std::size_t n = x.dim(0), t = x.dim(1), f = x.dim(2);
  std::vector<double> v(x.numel());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t k = 0; k < f; ++k) v[(b * t + i) * f + k] = x.data()[(b * t + (t - 1 - i)) * f + k];
  return Tensor<double>(x.shape(), std::move(v));
}

LstmWeights<double> random_lstm(std::size_t in, std::size_t hidden, std::uint64_t seed) {
  return {randn({4 * hidden, in}, seed, true, 0.3), randn({4 * hidden, hidden}, seed + 1, true, 0.3),
          randn({4 * hidden}, seed + 2, true, 0.3)};
}

LcnnConfig tiny_config(HeadKind head = HeadKind::kCosine) {
  LcnnConfig cfg;
  cfg.input_bins = 32;
  cfg.width_scale = 0.125;
  cfg.embedding_dim = 128;
  cfg.head = head;
  return cfg;
}

}  // namespace

TEST_CASE("backward of a square") {
  Tensor<double> x({}, {3.0}, true);
  const auto y = mul(x, x);
  backward(y);
  CHECK(x.grad()[0] == 6.0);
  Tensor<double> leaf({}, {1.0}, true);
  CHECK_THROWS_AS(backward(leaf), std::logic_error);
}

TEST_CASE("mfm examples and routing") {
  Tensor<double> x({1, 2, 1, 1}, {3.0, -1.0}, true);
  auto y = mfm(x);
  CHECK(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y.data()[0] == 3.0);
  backward(sum(y));
  CHECK(x.grad()[0] == 1.0);
  CHECK(x.grad()[1] == 0.0);

  Tensor<double> tie({1, 2, 1, 1}, {2.0, 2.0}, true);
  backward(sum(mfm(tie)));
  CHECK(tie.grad()[0] == 1.0);
  CHECK(tie.grad()[1] == 0.0);

  const auto a = randn({2, 6, 3, 4}, 1);
  std::vector<double> swapped(a.numel());
  const std::size_t half = 3 * 3 * 4;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < half; ++i) {
      swapped[b * 2 * half + i] = a.data()[b * 2 * half + half + i];
      swapped[b * 2 * half + half + i] = a.data()[b * 2 * half + i];
    }
  const auto m1 = mfm(a);
  const auto m2 = mfm(Tensor<double>(a.shape(), swapped));
  CHECK(m1.shape() == Shape{2, 3, 3, 4});
  CHECK(std::equal(m1.data().begin(), m1.data().end(), m2.data().begin()));
  CHECK_THROWS_AS(mfm(randn({1, 3, 2, 2}, 2)), std::invalid_argument);
}

TEST_CASE("conv2d matches a direct convolution") {
  for (std::size_t k : {1u, 3u, 5u}) {
    const auto x = randn({2, 3, 7, 9}, 10 + k);
    const auto w = randn({4, 3, k, k}, 20 + k);
    const auto b = randn({4}, 30 + k);
    const std::size_t pad = k / 2;
    const auto y = conv2d(x, w, b, pad);
    REQUIRE(y.shape() == Shape{2, 4, 7, 9});
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t o = 0; o < 4; ++o)
        for (std::size_t h = 0; h < 7; ++h)
          for (std::size_t t = 0; t < 9; ++t) {
            double acc = b.data()[o];
            for (std::size_t c = 0; c < 3; ++c)
              for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                  const long hh = static_cast<long>(h + i) - static_cast<long>(pad);
                  const long tt = static_cast<long>(t + j) - static_cast<long>(pad);
                  if (hh < 0 || tt < 0 || hh >= 7 || tt >= 9) continue;
                  acc += at4(x, n, c, static_cast<std::size_t>(hh), static_cast<std::size_t>(tt)) * at4(w, o, c, i, j);
                }
            CHECK(at4(y, n, o, h, t) == doctest::Approx(acc).epsilon(1e-12));
          }
  }
}

TEST_CASE("max pool uses floor mode") {
  const auto x = randn({1, 2, 257, 9}, 3);
  const auto y = max_pool2d(x);
  CHECK(y.shape() == Shape{1, 2, 128, 4});
  CHECK(at4(y, 0, 1, 5, 2) == std::max({at4(x, 0, 1, 10, 4), at4(x, 0, 1, 10, 5), at4(x, 0, 1, 11, 4),
                                         at4(x, 0, 1, 11, 5)}));
}

TEST_CASE("batch norm running statistics and eval affine map") {
  const auto x = randn({3, 2, 2, 2}, 4, false, 2.0);
  Tensor<double> gamma({2}, {1.5, 0.5}, true), beta({2}, {0.1, -0.2}, true);
  Tensor<double> rm({2}, {0.0, 0.0}), rv({2}, {1.0, 1.0});
  const auto y = batch_norm2d(x, gamma, beta, rm, rv, true);
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<double> vals;
    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t i = 0; i < 4; ++i) vals.push_back(x.data()[(n * 2 + c) * 4 + i]);
    double mu = 0.0;
    for (double v : vals) mu += v;
    mu /= 12.0;
    double ss = 0.0;
    for (double v : vals) ss += (v - mu) * (v - mu);
    CHECK(rm.data()[c] == doctest::Approx(0.1 * mu));
    CHECK(rv.data()[c] == doctest::Approx(0.9 + 0.1 * ss / 11.0));
    const double out0 = y.data()[(0 * 2 + c) * 4];
    CHECK(out0 == doctest::Approx(gamma.data()[c] * (vals[0] - mu) / std::sqrt(ss / 12.0 + 1e-5) + beta.data()[c]));
  }
  const auto e1 = batch_norm2d(x, gamma, beta, rm, rv, false);
  const auto e2 = batch_norm2d(x, gamma, beta, rm, rv, false);
  CHECK(std::equal(e1.data().begin(), e1.data().end(), e2.data().begin()));
  const double c0 = gamma.data()[0] / std::sqrt(rv.data()[0] + 1e-5);
  CHECK(e1.data()[0] == doctest::Approx(c0 * (x.data()[0] - rm.data()[0]) + beta.data()[0]));
}

TEST_CASE("blstm time reversal swaps directions") {
  const auto x = randn({2, 5, 3}, 5);
  const auto a = random_lstm(3, 4, 100), b = random_lstm(3, 4, 200);
  const auto out = blstm(x, b, a);
  const auto rev = reverse_time(blstm(reverse_time(x), a, b));
  REQUIRE(out.shape() == Shape{2, 5, 8});
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t k = 0; k < 4; ++k) {
        const double* o = out.data().data() + (n * 5 + t) * 8;
        const double* r = rev.data().data() + (n * 5 + t) * 8;
        CHECK(r[k] == doctest::Approx(o[4 + k]).epsilon(1e-12));
        CHECK(r[4 + k] == doctest::Approx(o[k]).epsilon(1e-12));
      }
}

TEST_CASE("op gradients match finite differences") {
  NamedTensors<double> t;
  t.add("x", randn({2, 4, 6, 6}, 6, true));
  t.add("w", randn({4, 4, 3, 3}, 7, true, 0.3));
  t.add("b", randn({4}, 8, true));
  t.add("gamma", randn({2}, 9, true));
  t.add("beta", randn({2}, 10, true));
  auto lw = random_lstm(6, 3, 300);
  t.add("w_ih", lw.w_ih);
  t.add("w_hh", lw.w_hh);
  t.add("bias", lw.bias);
  t.add("fc", randn({5, 6}, 11, true, 0.3));
  t.add("fcb", randn({5}, 12, true));
  t.add("cls", randn({2, 5}, 13, true));
  const auto proj = randn({2, 2}, 14);
  auto loss = [&] {
    Tensor<double> rm({2}, {0.0, 0.0}), rv({2}, {1.0, 1.0});
    auto h = mfm(conv2d(t.at("x"), t.at("w"), t.at("b"), 1));
    h = batch_norm2d(h, t.at("gamma"), t.at("beta"), rm, rv, true);
    h = max_pool2d(h);
    auto seq = time_sequence(h);
    const LstmWeights<double> w{t.at("w_ih"), t.at("w_hh"), t.at("bias")};
    auto pooled = mean_time(add(seq, blstm(seq, w, w)));
    auto emb = linear(pooled, t.at("fc"), t.at("fcb"));
    auto logits = cosine_similarity(emb, t.at("cls"));
    const std::vector<int> labels{0, 1};
    return add(softmax_cross_entropy(logits, labels, 5.0, 0.3), sum(mul(logits, proj)));
  };
  for (const auto& e : antispoof::testing::check_gradients_pinned(t, loss)) {
    INFO(e.name);
    CHECK(e.rel_error < 1e-4);
  }
}

TEST_CASE("dropout masks in train mode only") {
  const auto x = randn({4, 100}, 15);
  std::mt19937_64 rng(1);
  const auto eval = dropout(x, 0.5, false, rng);
  CHECK(std::equal(eval.data().begin(), eval.data().end(), x.data().begin()));
  const auto tr = dropout(x, 0.5, true, rng);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (tr.data()[i] == 0.0) {
      ++zeros;
    } else {
      CHECK(tr.data()[i] == doctest::Approx(2.0 * x.data()[i]));
    }
  }
  CHECK(zeros > 150);
  CHECK(zeros < 250);
}

TEST_CASE("lcnn config widths") {
  LcnnConfig cfg;
  CHECK(cfg.channels(0) == 64);
  CHECK(cfg.flatten_dim() == 512);
  CHECK(cfg.lstm_hidden() == 256);
  cfg.width_scale = 0.125;
  CHECK(cfg.channels(0) == 8);
  CHECK(cfg.channels(2) == 12);
  cfg.width_scale = 0.01;
  for (std::size_t i = 0; i < 9; ++i) CHECK(cfg.channels(i) == 2);
  cfg.embedding_dim = 100;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("lcnn forward shapes at small scale") {
  const auto cfg = tiny_config();
  auto p = init_lcnn<double>(cfg, 1);
  std::vector<ShapeRecord> trace;
  ForwardOptions fo;
  fo.trace = &trace;
  const auto out = forward_lcnn(p, cfg, randn({2, 32, 64}, 16), fo);
  CHECK(out.logits.shape() == Shape{2, 2});
  CHECK(out.embedding.shape() == Shape{2, 128});
  REQUIRE(trace.size() == 35);
  CHECK(trace.front().layer == "Conv1");
  CHECK(trace.front().dims == std::vector<std::size_t>{32, 64, 8});
  CHECK(trace[15].layer == "MaxPool3");
  CHECK(trace[27].layer == "MaxPool4");
  CHECK(trace[27].dims == std::vector<std::size_t>{2, 4, 4});
  CHECK(trace[28].layer == "Flatten");
  CHECK(trace[28].dims == std::vector<std::size_t>{4, 8});
  CHECK(trace.back().layer == "FC2");
  CHECK_THROWS_WITH_AS(forward_lcnn(p, cfg, randn({1, 31, 64}, 1)), doctest::Contains("bins"), std::invalid_argument);
  CHECK_THROWS_AS(forward_lcnn(p, cfg, randn({1, 32, 8}, 1)), std::invalid_argument);
}

TEST_CASE("zero input gives identical logits across the batch") {
  for (auto head : {HeadKind::kCosine, HeadKind::kLinear}) {
    const auto cfg = tiny_config(head);
    auto p = init_lcnn<double>(cfg, 2);
    const auto out = forward_lcnn(p, cfg, Tensor<double>({3, 32, 64}));
    for (std::size_t b = 1; b < 3; ++b) {
      CHECK(out.logits.data()[2 * b] == out.logits.data()[0]);
      CHECK(out.logits.data()[2 * b + 1] == out.logits.data()[1]);
    }
  }
}

TEST_CASE("train and eval differ only through batch norm and dropout") {
  auto cfg = tiny_config(HeadKind::kLinear);
  cfg.dropout_rate = 0.0;
  auto p = init_lcnn<double>(cfg, 3);
  const auto x = randn({2, 32, 64}, 17);
  const auto e1 = forward_lcnn(p, cfg, x);
  ForwardOptions tr;
  tr.train = true;
  forward_lcnn(p, cfg, x, tr);
  const auto e2 = forward_lcnn(p, cfg, x);
  // Train mode moved the running statistics, so eval output changes.
  CHECK(e1.logits.data()[0] != e2.logits.data()[0]);
  auto q = init_lcnn<double>(cfg, 3);
  const auto e3 = forward_lcnn(q, cfg, x);
  CHECK(std::equal(e1.logits.data().begin(), e1.logits.data().end(), e3.logits.data().begin()));
}

TEST_CASE("lcnn gradients at small scale") {
  for (auto head : {HeadKind::kCosine, HeadKind::kLinear}) {
    auto cfg = tiny_config(head);
    cfg.dropout_rate = 0.0;
    auto p = init_lcnn<double>(cfg, 4);
    const auto x = randn({2, 32, 64}, 18);
    ForwardOptions fo;
    fo.train = true;
    auto loss = [&] { return antispoof::testing::projected_output(forward_lcnn(p, cfg, x, fo), 5); };
    for (const auto& e : antispoof::testing::check_gradients_pinned(p.params, loss)) {
      INFO(e.name);
      CHECK(e.rel_error < 1e-4);
    }
  }
}

TEST_CASE("lcnn gradients without pinning at a small step") {
  auto cfg = tiny_config(HeadKind::kCosine);
  cfg.dropout_rate = 0.0;
  auto p = init_lcnn<double>(cfg, 6);
  const auto x = randn({1, 32, 64}, 19);
  auto loss = [&] { return antispoof::testing::projected_output(forward_lcnn(p, cfg, x), 7); };
  for (const auto& e : antispoof::testing::check_gradients(p.params, loss, 1e-5)) {
    INFO(e.name);
    CHECK(e.rel_error < 1e-4);
  }
}

TEST_CASE("routing replay reproduces the recorded winners") {
  const auto x = randn({1, 4, 6, 6}, 20);
  RoutingTape tape;
  Tensor<double> a, b;
  {
    RoutingScope rec(tape, RoutingScope::Mode::kRecord);
    a = max_pool2d(mfm(x));
  }
  CHECK(tape.choices.size() == 2);
  // Replaying on a different input keeps the recorded positions.
  auto shifted = x.clone();
  for (auto& v : shifted.data()) v = -v;
  {
    RoutingScope rep(tape, RoutingScope::Mode::kReplay);
    b = max_pool2d(mfm(shifted));
  }
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(b.data()[i] == -a.data()[i]);
  RoutingScope rep(tape, RoutingScope::Mode::kReplay);
  CHECK_THROWS_AS(mfm(randn({1, 2, 3, 3}, 1)), std::logic_error);
}

TEST_CASE("detection score is the logit difference") {
  Tensor<float> logits({2, 2}, {1.0f, 0.25f, -1.0f, 2.0f});
  CHECK(detection_scores(logits) == std::vector<double>{0.75, -3.0});
}

TEST_CASE("steplr schedule") {
  CHECK(steplr(kBaseLearningRate, 0) == doctest::Approx(0.0003));
  CHECK(steplr(kBaseLearningRate, 9) == doctest::Approx(0.0003));
  CHECK(steplr(kBaseLearningRate, 10) == doctest::Approx(0.00015));
  CHECK(steplr(kBaseLearningRate, 25) == doctest::Approx(0.000075));
}

TEST_CASE("adam single step closed forms") {
  Tensor<double> w({3}, {1.0, -2.0, 0.5}, true);
  std::vector<Tensor<double>> params{w};
  AdamState state;
  w.zero_grad();
  adam_step(params, state, 0.1);
  // Zero gradient: only the weight-decay term drives the step, which Adam
  // normalizes to a full lr-sized move against the sign of w.
  CHECK(w.data()[0] == doctest::Approx(0.9));
  CHECK(w.data()[1] == doctest::Approx(-1.9));

  Tensor<double> v({2}, {0.0, 0.0}, true);
  std::vector<Tensor<double>> vp{v};
  AdamState s2;
  AdamConfig no_decay;
  no_decay.weight_decay = 0.0;
  v.grad()[0] = 0.3;
  v.grad()[1] = -7.0;
  adam_step(vp, s2, 1e-3, no_decay);
  CHECK(v.data()[0] == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(v.data()[1] == doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(s2.step == 1);

  // beta1 = beta2 = 0 reduces to sign-like RMS-normalized SGD each step.
  AdamConfig plain;
  plain.beta1 = 0.0;
  plain.beta2 = 0.0;
  plain.weight_decay = 0.0;
  Tensor<double> u({1}, {0.0}, true);
  std::vector<Tensor<double>> up{u};
  AdamState s3;
  for (double g : {2.0, 2.0}) {
    u.grad()[0] = g;
    adam_step(up, s3, 0.01, plain);
  }
  CHECK(u.data()[0] == doctest::Approx(-0.02).epsilon(1e-6));
}

TEST_CASE("checkpoint round trip") {
  TempDir dir;
  auto cfg = tiny_config(HeadKind::kLinear);
  auto p = init_lcnn<float>(cfg, 9);
  p.buffers.at("centers").data()[3] = 1.25f;
  save_checkpoint(dir / "m.ckpt", cfg, p);
  const auto ck = load_checkpoint(dir / "m.ckpt");
  CHECK(ck.config.input_bins == cfg.input_bins);
  CHECK(ck.config.width_scale == cfg.width_scale);
  CHECK(ck.config.head == HeadKind::kLinear);
  CHECK(ck.params.params.names == p.params.names);
  CHECK(ck.params.buffers.names == p.buffers.names);
  CHECK(encode_checkpoint(ck.config, ck.params) == encode_checkpoint(cfg, p));
  CHECK(ck.params.buffers.at("centers").data()[3] == 1.25f);
  CHECK(p.buffers.contains("centers"));
  CHECK_FALSE(init_lcnn<float>(tiny_config(), 1).buffers.contains("centers"));

  const auto bytes = binio::read_file(dir / "m.ckpt");
  CHECK(bytes.substr(0, 4) == "LCNN");
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() / 2)), DataError);
  CHECK_THROWS_AS(decode_checkpoint("XXXX" + bytes.substr(4)), DataError);
}
