// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "antispoof/nn/lcnn.hpp"

namespace antispoof::nn {

// Layout, little endian:
//   "LCNN" u32 version
//   config: u32 input_bins, 9 x u32 conv_channels, f64 width_scale,
//           u32 embedding_dim, f64 dropout_rate, u32 head
//   u32 tensor count, then per tensor:
//     str name, u8 is_buffer, u32 rank, rank x u64 dims, f32 values
// str is u32 length followed by bytes.

struct Checkpoint {
  LcnnConfig config;
  LcnnParams<float> params;
};

std::string encode_checkpoint(const LcnnConfig& cfg, const LcnnParams<float>& params);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const LcnnConfig& cfg, const LcnnParams<float>& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace antispoof::nn
