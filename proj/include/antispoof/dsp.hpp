// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "antispoof/audio_io.hpp"

namespace antispoof {

using Complex = std::complex<double>;

/// Radix-2 FFT. Forward uses e^{-2 pi i k n / N}; the inverse includes 1/N.
/// Throws std::invalid_argument if the length is not a power of two.
void fft_inplace(std::vector<Complex>& x, bool inverse = false);
std::vector<Complex> fft(std::vector<Complex> x, bool inverse = false);

bool is_power_of_two(std::size_t n);

/// Floor applied to power values before the natural log.
inline constexpr double kLogPowerFloor = 1e-10;

/// Log power time-frequency matrix, row-major [bin][frame].
struct Spectrogram {
  std::size_t n_bins = 0;
  std::size_t n_frames = 0;
  std::vector<float> values;
  std::vector<double> bin_frequencies;
  int frame_hop = 0;  // 0 when unknown (e.g. loaded from disk)

  float at(std::size_t bin, std::size_t frame) const { return values[bin * n_frames + frame]; }
  float& at(std::size_t bin, std::size_t frame) { return values[bin * n_frames + frame]; }
};

struct StftConfig {
  std::size_t window_length = 1024;
  std::size_t n_fft = 1024;
  std::size_t hop_length = 160;
  double low_band_max_hz = 4000.0;

  static StftConfig stft1024() { return {1024, 1024, 160, 4000.0}; }
  static StftConfig stft2048() { return {2048, 2048, 160, 4000.0}; }
};

struct CqtConfig {
  int bins_per_octave = 49;
  double f_min = 15.6;
  double f_max = 4000.0;
  std::size_t hop_length = 160;

  static CqtConfig paper() { return {}; }
};

/// Periodic Hann window of the given length.
std::vector<double> hann_window(std::size_t length);

/// Frames lie fully inside the signal (no edge centering): for a signal of
/// L >= window samples there are floor((L - window) / hop) + 1 frames.
/// Shorter signals are zero padded to exactly one frame. Returns all
/// n_fft / 2 + 1 bins of ln(max(|X|^2, 1e-10)).
Spectrogram stft_log_power(const AudioBuffer& audio, const StftConfig& cfg);

/// Keeps rows whose centre frequency is <= max_hz.
Spectrogram low_band_slice(const Spectrogram& spec, double max_hz, double nyquist_hz);

/// Centre frequencies f_min * 2^(k / bins_per_octave) up to f_max inclusive.
std::vector<double> cqt_frequencies(const CqtConfig& cfg);

/// Constant-Q analyser. Bin k uses a Hann window of Q * sr / f_k samples,
/// Q = 1 / (2^(1/b) - 1), centred on frame m at sample m * hop (zero padded
/// outside the signal). Kernels are built once per sample rate.
class CqtAnalyzer {
 public:
  CqtAnalyzer(const CqtConfig& cfg, int sample_rate);

  Spectrogram log_power(const AudioBuffer& audio) const;
  std::size_t n_bins() const { return freqs_.size(); }
  double q_factor() const { return q_; }

 private:
  struct Kernel {
    std::vector<double> re;
    std::vector<double> im;
  };
  CqtConfig cfg_;
  int sample_rate_;
  double q_;
  std::vector<double> freqs_;
  std::vector<Kernel> kernels_;
};

Spectrogram cqt_log_power(const AudioBuffer& audio, const CqtConfig& cfg);

/// Front-ends used by the detection systems.
enum class FeatureKind { kStft1024, kStft2048, kCqt };

FeatureKind parse_feature_kind(const std::string& name);
std::string to_string(FeatureKind kind);

/// Full front-end: log power spectrogram restricted to 0-4 kHz.
Spectrogram extract_features(const AudioBuffer& audio, FeatureKind kind);

/// Row count of extract_features output.
std::size_t feature_bins(FeatureKind kind, int sample_rate = 16000);

/// "SPG1" feature file: magic, u32 n_bins, u32 n_frames, f32-LE row-major
/// values, then f64-LE bin frequencies.
void write_spectrogram(const std::filesystem::path& path, const Spectrogram& spec);
Spectrogram read_spectrogram(const std::filesystem::path& path);
std::string encode_spectrogram(const Spectrogram& spec);
Spectrogram decode_spectrogram(std::string_view bytes);

}  // namespace antispoof
