// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <vector>

namespace antispoof {

/// Mono waveform. Samples are nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Reads a RIFF/WAVE file holding PCM16 or IEEE float32 samples.
/// Multichannel audio is averaged down to mono. Throws DataError on
/// malformed headers, unsupported encodings and empty audio.
AudioBuffer read_wav(const std::filesystem::path& path);

/// Writes 16-bit little-endian mono PCM. Samples are clamped to [-1, 1]
/// and rounded to the nearest step of 1/32768.
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

/// Speed change by linear interpolation: output[i] = input(i * factor),
/// holding the last sample past the end. The sample rate is unchanged.
/// factor must lie in [0.5, 2.0].
AudioBuffer resample_linear(const AudioBuffer& audio, double factor);

double rms(const std::vector<double>& x);

}  // namespace antispoof
