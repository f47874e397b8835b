// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "antispoof/audio_io.hpp"
#include "antispoof/dsp.hpp"
#include "antispoof/manifest.hpp"

namespace antispoof {

// ---- additive noise -------------------------------------------------------

enum class MixStatus {
  kOk,
  kNoNoise,      // snr_db = +inf, clean returned unchanged
  kSilentClean,  // gain undefined, clean returned unchanged
};

struct MixResult {
  AudioBuffer audio;
  double noise_gain = 0.0;  // g applied to the length-fitted noise
  double mix_scale = 1.0;   // whole-mix rescale applied when the peak exceeded 1
  MixStatus status = MixStatus::kOk;
};

/// Loops or crops noise to the requested length.
std::vector<double> fit_length(const std::vector<double>& noise, std::size_t length);

/// clean + g * noise with g = rms(clean) / (rms(noise) * 10^(snr/20)). When
/// the mix peaks above 1 the whole mix is scaled down, which keeps the SNR.
MixResult mix_noise_at_snr(const AudioBuffer& clean, const AudioBuffer& noise, double snr_db);

// ---- reverberation --------------------------------------------------------

/// Linear convolution; FFT based for long inputs.
std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b);

/// Convolution aligned on the RIR's strongest tap, truncated to the input
/// length and rescaled to the input RMS.
AudioBuffer convolve_rir(const AudioBuffer& clean, const AudioBuffer& rir);

// ---- speed ----------------------------------------------------------------

/// factor in [0.9, 1.1]; duration scales by 1 / factor.
AudioBuffer speed_perturb(const AudioBuffer& audio, double factor);

// ---- active speech level --------------------------------------------------

struct ActiveLevel {
  double level_dbov = 0.0;  // mean power over active samples, 0 dBov = full-scale square
  double activity = 0.0;    // fraction of samples judged active
};

/// P.56 method B style estimate: two-stage envelope (30 ms), 200 ms
/// hangover, threshold ladder of powers of two, 15.9 dB margin.
/// Throws DataError if no active region exists.
ActiveLevel measure_active_level(const AudioBuffer& audio);

struct LevelResult {
  AudioBuffer audio;
  double measured_dbov = 0.0;
  double gain_db = 0.0;
  std::size_t clipped_samples = 0;  // samples hard-limited to [-1, 1]
};

inline constexpr double kDefaultTargetDbov = -26.0;

LevelResult active_level_normalize(const AudioBuffer& audio, double target_dbov = kDefaultTargetDbov);

// ---- codecs ---------------------------------------------------------------

enum class CompandLaw { kALaw, kMuLaw };

/// Encode to 8-bit G.711 and decode back.
AudioBuffer codec_compand(const AudioBuffer& audio, CompandLaw law);

/// External encoder hooks: codec name -> shell command template containing
/// "{in}" and "{out}" (both WAV paths). The command must leave a decoded WAV
/// at {out}.
struct ExternalCodecHooks {
  std::map<std::string, std::string> commands;
  std::filesystem::path scratch_dir = std::filesystem::temp_directory_path();

  bool available(const std::string& codec) const { return commands.count(codec) != 0; }
};

AudioBuffer run_external_codec(const AudioBuffer& audio, const std::string& codec,
                               const ExternalCodecHooks& hooks);

/// Native codecs plus every codec with a configured hook.
std::vector<std::string> available_codecs(const ExternalCodecHooks& hooks);

// ---- chunking -------------------------------------------------------------

enum class ChunkMode { kEval, kTrain };

/// Exactly n_frames frames: longer inputs are cut from offset 0 (eval) or a
/// uniform random offset (train); shorter inputs are repeated cyclically.
Spectrogram chunk_to_length(const Spectrogram& spec, std::size_t n_frames, ChunkMode mode,
                            std::mt19937_64* rng = nullptr);

struct ChunkRange {
  int min_frames = 500;
  int max_frames = 700;
};

/// Uniform integer in [min_frames, max_frames]; one draw per training batch.
int sample_chunk_size(std::mt19937_64& rng, ChunkRange range = {});

// ---- online augmentation --------------------------------------------------

struct PoolItem {
  std::string id;
  std::string category;  // noise pools: "noise", "music" or "babble"; RIR pool: "rir"
  AudioBuffer audio;
};

struct AugmentPools {
  std::vector<PoolItem> noises;
  std::vector<PoolItem> rirs;

  const PoolItem& noise(const std::string& id) const;
  const PoolItem& rir(const std::string& id) const;
};

struct SnrRange {
  double lo = 0.0;
  double hi = 15.0;
};

/// Kaldi-style online policy: each utterance draws one of clean / reverb /
/// noise / music / babble, plus an optional speed change and codec.
struct AugmentPolicy {
  double weight_clean = 1.0;
  double weight_reverb = 1.0;
  double weight_noise = 1.0;
  double weight_music = 1.0;
  double weight_babble = 1.0;
  SnrRange noise_snr{0.0, 15.0};
  SnrRange music_snr{5.0, 15.0};
  SnrRange babble_snr{13.0, 20.0};
  double speed_probability = 0.0;
  std::vector<double> speed_factors{0.9, 1.1};
  double codec_probability = 0.0;
  std::vector<std::string> codecs{"alaw", "mulaw"};
  bool normalize = false;
};

/// Draws a recipe from the policy; deterministic in seed.
AugmentRecipe sample_recipe(const AugmentPolicy& policy, const AugmentPools& pools, std::uint64_t seed);

/// Applies speed, reverb, noise, codec, then normalization.
AudioBuffer apply_recipe(const AudioBuffer& audio, const AugmentRecipe& recipe,
                         const AugmentPools& pools, const ExternalCodecHooks* hooks = nullptr);

}  // namespace antispoof
