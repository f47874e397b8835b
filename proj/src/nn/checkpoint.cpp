// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/nn/checkpoint.hpp"

#include "antispoof/binary_io.hpp"
#include "antispoof/error.hpp"

namespace antispoof::nn {

namespace {

constexpr std::uint32_t kVersion = 1;

void put_tensors(std::string& out, const NamedTensors<float>& set, bool is_buffer) {
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& t = set.tensors[i];
    binio::put_str(out, set.names[i]);
    out.push_back(static_cast<char>(is_buffer));
    binio::put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) binio::put_u64(out, d);
    for (float v : t.data()) binio::put_f32(out, v);
  }
}

}  // namespace

std::string encode_checkpoint(const LcnnConfig& cfg, const LcnnParams<float>& params) {
  std::string out = "LCNN";
  binio::put_u32(out, kVersion);
  binio::put_u32(out, static_cast<std::uint32_t>(cfg.input_bins));
  for (auto c : cfg.conv_channels) binio::put_u32(out, static_cast<std::uint32_t>(c));
  binio::put_f64(out, cfg.width_scale);
  binio::put_u32(out, static_cast<std::uint32_t>(cfg.embedding_dim));
  binio::put_f64(out, cfg.dropout_rate);
  binio::put_u32(out, cfg.head == HeadKind::kCosine ? 0 : 1);
  binio::put_u32(out, static_cast<std::uint32_t>(params.params.size() + params.buffers.size()));
  put_tensors(out, params.params, false);
  put_tensors(out, params.buffers, true);
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  binio::Reader r(bytes, "checkpoint");
  if (r.take(4) != "LCNN") throw DataError("checkpoint: bad magic");
  if (const auto v = r.u32(); v != kVersion) throw DataError("checkpoint: unsupported version " + std::to_string(v));
  Checkpoint ck;
  auto& cfg = ck.config;
  cfg.input_bins = r.u32();
  for (auto& c : cfg.conv_channels) c = r.u32();
  cfg.width_scale = r.f64();
  cfg.embedding_dim = r.u32();
  cfg.dropout_rate = r.f64();
  const auto head = r.u32();
  if (head > 1) throw DataError("checkpoint: bad head kind");
  cfg.head = head == 0 ? HeadKind::kCosine : HeadKind::kLinear;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const bool is_buffer = r.take(1)[0] != 0;
    const auto rank = r.u32();
    if (rank > 8) throw DataError("checkpoint: bad rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    std::vector<float> values(numel(shape));
    for (auto& v : values) v = r.f32();
    Tensor<float> t(std::move(shape), std::move(values), !is_buffer);
    (is_buffer ? ck.params.buffers : ck.params.params).add(std::move(name), std::move(t));
  }
  if (!r.done()) throw DataError("checkpoint: trailing bytes");

  // Cross-check against a freshly built model of the stored config.
  const auto ref = init_lcnn<float>(cfg, 0);
  auto check = [](const NamedTensors<float>& want, const NamedTensors<float>& got) {
    if (want.names != got.names) throw DataError("checkpoint: tensor table does not match the stored config");
    for (std::size_t i = 0; i < want.size(); ++i) {
      if (want.tensors[i].shape() != got.tensors[i].shape())
        throw DataError("checkpoint: shape mismatch for " + want.names[i]);
    }
  };
  check(ref.params, ck.params.params);
  check(ref.buffers, ck.params.buffers);
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const LcnnConfig& cfg, const LcnnParams<float>& params) {
  binio::write_file(path, encode_checkpoint(cfg, params));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(binio::read_file(path)); }

}  // namespace antispoof::nn
