// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

// ITU-T G.711 companding on 16-bit linear PCM (A-law: 13-bit segments,
// mu-law: 14-bit segments with bias 0x84).

#include <cstdint>

namespace antispoof::g711 {

std::uint8_t linear_to_alaw(std::int16_t pcm);
std::int16_t alaw_to_linear(std::uint8_t code);

std::uint8_t linear_to_ulaw(std::int16_t pcm);
std::int16_t ulaw_to_linear(std::uint8_t code);

}  // namespace antispoof::g711
