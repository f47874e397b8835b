// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "antispoof/audio_io.hpp"
#include "antispoof/augment.hpp"
#include "antispoof/manifest.hpp"

namespace antispoof {

/// Spoof artifact families.
const std::vector<std::string>& artifact_families();

struct VoiceParams {
  double f0 = 120.0;                     // Hz, base of the pitch contour
  double duration = 2.0;                 // seconds
  double tilt = 0.0;                     // amplitude exponent: gain (f / 1 kHz)^tilt
  std::array<double, 3> formants{500.0, 1500.0, 2500.0};
  std::array<double, 3> formants_end{500.0, 1500.0, 2500.0};
  std::array<double, 3> bandwidths{80.0, 120.0, 180.0};
  double am_rate = 4.0;                  // syllabic modulation, Hz
  double phase_jitter_above_hz = 0.0;    // > 0: redraw harmonic phases above this frequency every 10 ms
  double peak = 0.5;
};

/// Harmonic complex with a formant envelope and amplitude modulation.
AudioBuffer synth_voice(const VoiceParams& p, std::mt19937_64& rng, int sample_rate = 16000);

/// Random bonafide voice parameters (F0 80-300 Hz, 1-3 s).
VoiceParams random_voice(std::mt19937_64& rng);

/// Repeats short segments at random positions, keeping the length.
AudioBuffer frame_repeat_splice(const AudioBuffer& audio, std::mt19937_64& rng);

struct SynthUtterance {
  std::string utt_id;
  Label label = Label::kBonafide;
  std::string family = "-";  // artifact family, "-" for bonafide
  AudioBuffer audio;
};

/// Bonafide or spoof utterance. Spoofs get a spectral tilt offset plus the
/// artifact of their family.
SynthUtterance synth_utterance(const std::string& utt_id, Label label, const std::string& family,
                               std::uint64_t seed);

struct SplitSpec {
  std::string name;
  std::size_t n_per_class = 0;
  std::vector<std::string> families;  // spoof families cycled over the split
};

struct CorpusSpec {
  std::vector<SplitSpec> splits;
  std::uint64_t seed = 0;
  std::size_t pool_items_per_category = 3;
  std::size_t rir_items = 4;
};

/// Writes wav/<utt>.wav, <split>.tsv manifests, corpus_meta.tsv
/// (utt_id, split, label, family), pools/*.wav and pools.tsv
/// (id, category, path) under dir. Returns the manifest per split.
std::map<std::string, TrialManifest> generate_synthetic_corpus(const std::filesystem::path& dir,
                                                               const CorpusSpec& spec);

/// Noise, music, babble and RIR pools.
AugmentPools synth_pools(std::uint64_t seed, std::size_t per_category, std::size_t rir_items);

AugmentPools read_pools(const std::filesystem::path& pools_tsv);

struct CorpusMeta {
  std::string split;
  Label label = Label::kUnknown;
  std::string family;
};
std::map<std::string, CorpusMeta> read_corpus_meta(const std::filesystem::path& path);

}  // namespace antispoof
