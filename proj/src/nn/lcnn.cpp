// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/nn/lcnn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace antispoof::nn {

namespace {

constexpr std::array<std::size_t, 9> kKernels{5, 1, 3, 1, 3, 1, 3, 1, 3};

// Block layout of the convolutional stack.
enum class Step { kConv, kPool, kNorm };
struct StackStep {
  Step step;
  int index;  // conv 1..9, pool 1..4, norm 1..6
};
constexpr StackStep kStack[] = {
    {Step::kConv, 1}, {Step::kPool, 1}, {Step::kConv, 2}, {Step::kNorm, 1}, {Step::kConv, 3},
    {Step::kPool, 2}, {Step::kNorm, 2}, {Step::kConv, 4}, {Step::kNorm, 3}, {Step::kConv, 5},
    {Step::kPool, 3}, {Step::kConv, 6}, {Step::kNorm, 4}, {Step::kConv, 7}, {Step::kNorm, 5},
    {Step::kConv, 8}, {Step::kNorm, 6}, {Step::kConv, 9}, {Step::kPool, 4},
};
// Conv layer (1 based) whose MFM output feeds each batchnorm.
constexpr int kNormAfterConv[] = {0, 2, 3, 4, 6, 7, 8};

std::string conv_name(int i) { return "conv" + std::to_string(i); }
std::string norm_name(int i) { return "bn" + std::to_string(i); }

template <typename T>
Tensor<T> uniform(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> v(numel(shape));
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return Tensor<T>(std::move(shape), std::move(v), true);
}

template <typename T>
Tensor<T> filled(Shape shape, T value, bool requires_grad) {
  std::vector<T> v(numel(shape), value);
  return Tensor<T>(std::move(shape), std::move(v), requires_grad);
}

template <typename F>
auto at_layer(const std::string& layer, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(layer + ": " + e.what());
  }
}

void record(std::vector<ShapeRecord>* trace, const std::string& layer, std::vector<std::size_t> dims) {
  if (trace) trace->push_back({layer, std::move(dims)});
}

template <typename T>
std::vector<std::size_t> fhc(const Tensor<T>& x) {
  return {x.dim(2), x.dim(3), x.dim(1)};
}

}  // namespace

std::string to_string(HeadKind kind) { return kind == HeadKind::kCosine ? "cosine" : "linear"; }

HeadKind parse_head_kind(const std::string& text) {
  if (text == "cosine") return HeadKind::kCosine;
  if (text == "linear") return HeadKind::kLinear;
  throw std::invalid_argument("unknown head kind '" + text + "'");
}

std::size_t LcnnConfig::channels(std::size_t i) const {
  const double scaled = static_cast<double>(conv_channels.at(i)) * width_scale;
  const auto pairs = static_cast<std::size_t>(std::llround(scaled / 2.0));
  return std::max<std::size_t>(2, 2 * pairs);
}

std::size_t LcnnConfig::flatten_dim() const { return channels(8) / 2 * (input_bins / 16); }

void LcnnConfig::validate() const {
  if (embedding_dim != 128 && embedding_dim != 512)
    throw std::invalid_argument("embedding_dim must be 128 or 512");
  if (!(width_scale > 0.0)) throw std::invalid_argument("width_scale must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("dropout_rate must be in [0, 1)");
  if (input_bins < 16) throw std::invalid_argument("input_bins must be at least 16");
  if (flatten_dim() % 2 != 0)
    throw std::invalid_argument("flatten width " + std::to_string(flatten_dim()) + " is odd");
}

template <typename T>
void NamedTensors<T>::add(std::string name, Tensor<T> t) {
  if (contains(name)) throw std::logic_error("duplicate tensor name " + name);
  names.push_back(std::move(name));
  tensors.push_back(std::move(t));
}

template <typename T>
Tensor<T>& NamedTensors<T>::at(const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return tensors[i];
  }
  throw std::out_of_range("no tensor named " + name);
}

template <typename T>
const Tensor<T>& NamedTensors<T>::at(const std::string& name) const {
  return const_cast<NamedTensors*>(this)->at(name);
}

template <typename T>
bool NamedTensors<T>::contains(const std::string& name) const {
  for (const auto& n : names) {
    if (n == name) return true;
  }
  return false;
}

template <typename T>
LcnnParams<T> LcnnParams<T>::clone() const {
  return cast_params<T, T>(*this);
}

template <typename T>
std::size_t LcnnParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : params.tensors) n += t.numel();
  return n;
}

template <typename To, typename From>
LcnnParams<To> cast_params(const LcnnParams<From>& p) {
  auto convert = [](const NamedTensors<From>& src, NamedTensors<To>& dst) {
    for (std::size_t i = 0; i < src.size(); ++i) {
      const auto& t = src.tensors[i];
      std::vector<To> v(t.data().begin(), t.data().end());
      dst.add(src.names[i], Tensor<To>(t.shape(), std::move(v), t.requires_grad()));
    }
  };
  LcnnParams<To> out;
  convert(p.params, out.params);
  convert(p.buffers, out.buffers);
  return out;
}

template <typename T>
LcnnParams<T> init_lcnn(const LcnnConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  LcnnParams<T> p;
  p.buffers.add("input.mean", filled<T>({cfg.input_bins}, T(0), false));
  p.buffers.add("input.scale", filled<T>({cfg.input_bins}, T(1), false));
  std::size_t in_ch = 1;
  for (int i = 1; i <= 9; ++i) {
    const std::size_t out_ch = cfg.channels(static_cast<std::size_t>(i - 1));
    const std::size_t k = kKernels[static_cast<std::size_t>(i - 1)];
    const double fan_in = static_cast<double>(in_ch * k * k);
    p.params.add(conv_name(i) + ".weight", uniform<T>({out_ch, in_ch, k, k}, std::sqrt(6.0 / fan_in), rng));
    p.params.add(conv_name(i) + ".bias", filled<T>({out_ch}, T(0), true));
    in_ch = out_ch / 2;
  }
  for (int j = 1; j <= 6; ++j) {
    const std::size_t c = cfg.channels(static_cast<std::size_t>(kNormAfterConv[j] - 1)) / 2;
    p.params.add(norm_name(j) + ".gamma", filled<T>({c}, T(1), true));
    p.params.add(norm_name(j) + ".beta", filled<T>({c}, T(0), true));
    p.buffers.add(norm_name(j) + ".running_mean", filled<T>({c}, T(0), false));
    p.buffers.add(norm_name(j) + ".running_var", filled<T>({c}, T(1), false));
  }
  const std::size_t width = cfg.flatten_dim();
  const std::size_t hidden = cfg.lstm_hidden();
  const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (int layer = 1; layer <= 2; ++layer) {
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string base = "blstm" + std::to_string(layer) + "." + dir;
      p.params.add(base + ".w_ih", uniform<T>({4 * hidden, width}, lstm_bound, rng));
      p.params.add(base + ".w_hh", uniform<T>({4 * hidden, hidden}, lstm_bound, rng));
      p.params.add(base + ".bias", uniform<T>({4 * hidden}, lstm_bound, rng));
    }
  }
  const std::size_t emb = cfg.embedding_dim;
  p.params.add("fc1.weight", uniform<T>({emb, width}, std::sqrt(6.0 / static_cast<double>(width)), rng));
  p.params.add("fc1.bias", filled<T>({emb}, T(0), true));
  p.params.add("fc2.weight", uniform<T>({2, emb}, std::sqrt(6.0 / static_cast<double>(emb)), rng));
  if (cfg.head == HeadKind::kLinear) {
    p.params.add("fc2.bias", filled<T>({2}, T(0), true));
    p.buffers.add("centers", filled<T>({2, emb}, T(0), false));
  }
  return p;
}

template <typename T>
LcnnOutput<T> forward_lcnn(LcnnParams<T>& params, const LcnnConfig& cfg, const Tensor<T>& batch,
                           const ForwardOptions& opts) {
  if (batch.rank() != 3)
    throw std::invalid_argument("Input: expected [B, bins, frames], got " + shape_string(batch.shape()));
  const std::size_t n = batch.dim(0), bins = batch.dim(1), frames = batch.dim(2);
  if (bins != cfg.input_bins)
    throw std::invalid_argument("Input: " + std::to_string(bins) + " bins, model expects " +
                                std::to_string(cfg.input_bins));
  if (frames < 16) throw std::invalid_argument("Input: " + std::to_string(frames) + " frames, need at least 16");
  if (n == 0) throw std::invalid_argument("Input: empty batch");

  auto* trace = opts.trace;
  auto& P = params.params;
  std::vector<T> input(batch.data().begin(), batch.data().end());
  const auto& mean = params.buffers.at("input.mean").data();
  const auto& scale = params.buffers.at("input.scale").data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t f = 0; f < bins; ++f) {
      T* row = input.data() + (b * bins + f) * frames;
      for (std::size_t t = 0; t < frames; ++t) row[t] = (row[t] - mean[f]) * scale[f];
    }
  Tensor<T> x(Shape{n, 1, bins, frames}, std::move(input));

  for (const auto& s : kStack) {
    const std::string idx = std::to_string(s.index);
    switch (s.step) {
      case Step::kConv: {
        const auto k = kKernels[static_cast<std::size_t>(s.index - 1)];
        x = at_layer("Conv" + idx, [&] {
          return conv2d(x, P.at(conv_name(s.index) + ".weight"), P.at(conv_name(s.index) + ".bias"), k / 2);
        });
        record(trace, "Conv" + idx, fhc(x));
        x = at_layer("MFM" + idx, [&] { return mfm(x); });
        record(trace, "MFM" + idx, fhc(x));
        break;
      }
      case Step::kPool:
        x = at_layer("MaxPool" + idx, [&] { return max_pool2d(x); });
        record(trace, "MaxPool" + idx, fhc(x));
        break;
      case Step::kNorm: {
        const std::string nm = norm_name(s.index);
        x = at_layer("BatchNorm" + idx, [&] {
          return batch_norm2d(x, P.at(nm + ".gamma"), P.at(nm + ".beta"), params.buffers.at(nm + ".running_mean"),
                              params.buffers.at(nm + ".running_var"), opts.train);
        });
        record(trace, "BatchNorm" + idx, fhc(x));
        break;
      }
    }
  }

  Tensor<T> seq = time_sequence(x);
  record(trace, "Flatten", {seq.dim(1), seq.dim(2)});
  auto lstm_weights = [&](int layer, const char* dir) {
    const std::string base = "blstm" + std::to_string(layer) + "." + dir;
    return LstmWeights<T>{P.at(base + ".w_ih"), P.at(base + ".w_hh"), P.at(base + ".bias")};
  };
  Tensor<T> h = at_layer("BLSTM1", [&] { return blstm(seq, lstm_weights(1, "fwd"), lstm_weights(1, "bwd")); });
  record(trace, "BLSTM1", {h.dim(1), h.dim(2)});
  h = at_layer("BLSTM2", [&] { return blstm(h, lstm_weights(2, "fwd"), lstm_weights(2, "bwd")); });
  record(trace, "BLSTM2", {h.dim(1), h.dim(2)});
  Tensor<T> pooled = at_layer("MeanPool", [&] { return mean_time(add(seq, h)); });
  record(trace, "MeanPool", {pooled.dim(1)});

  Tensor<T> emb = at_layer("FC1", [&] { return linear(pooled, P.at("fc1.weight"), P.at("fc1.bias")); });
  record(trace, "FC1", {emb.dim(1)});
  std::mt19937_64 rng(opts.dropout_seed);
  emb = dropout(emb, cfg.dropout_rate, opts.train, rng);
  record(trace, "Dropout", {emb.dim(1)});

  Tensor<T> logits = at_layer("FC2", [&] {
    if (cfg.head == HeadKind::kCosine) return cosine_similarity(emb, P.at("fc2.weight"));
    return linear(emb, P.at("fc2.weight"), P.at("fc2.bias"));
  });
  record(trace, "FC2", {logits.dim(1)});
  return {logits, emb};
}

template <typename T>
std::vector<double> detection_scores(const Tensor<T>& logits) {
  if (logits.rank() != 2 || logits.dim(1) != 2)
    throw std::invalid_argument("detection_scores: expected [B, 2] logits");
  std::vector<double> out(logits.dim(0));
  for (std::size_t b = 0; b < out.size(); ++b) {
    out[b] = static_cast<double>(logits.data()[2 * b]) - static_cast<double>(logits.data()[2 * b + 1]);
  }
  return out;
}

#define ANTISPOOF_INSTANTIATE_LCNN(T)                                                                   \
  template struct NamedTensors<T>;                                                                      \
  template struct LcnnParams<T>;                                                                        \
  template LcnnParams<T> init_lcnn<T>(const LcnnConfig&, std::uint64_t);                                \
  template LcnnOutput<T> forward_lcnn(LcnnParams<T>&, const LcnnConfig&, const Tensor<T>&,              \
                                      const ForwardOptions&);                                           \
  template std::vector<double> detection_scores(const Tensor<T>&);

ANTISPOOF_INSTANTIATE_LCNN(float)
ANTISPOOF_INSTANTIATE_LCNN(double)
template LcnnParams<float> cast_params<float, float>(const LcnnParams<float>&);
template LcnnParams<double> cast_params<double, double>(const LcnnParams<double>&);
template LcnnParams<double> cast_params<double, float>(const LcnnParams<float>&);
template LcnnParams<float> cast_params<float, double>(const LcnnParams<double>&);

#undef ANTISPOOF_INSTANTIATE_LCNN

}  // namespace antispoof::nn
