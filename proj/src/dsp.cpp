// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "antispoof/binary_io.hpp"
#include "antispoof/error.hpp"

namespace antispoof {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::vector<Complex>& x, bool inverse) {
  const std::size_t n = x.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("fft: length must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> twiddle;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    twiddle.resize(half);
    for (std::size_t k = 0; k < half; ++k) {
      const double a = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / len;
      twiddle[k] = {std::cos(a), std::sin(a)};
    }
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = x[i + k];
        const Complex v = x[i + k + half] * twiddle[k];
        x[i + k] = u + v;
        x[i + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / n;
    for (auto& v : x) v *= scale;
  }
}

std::vector<Complex> fft(std::vector<Complex> x, bool inverse) {
  fft_inplace(x, inverse);
  return x;
}

std::vector<double> hann_window(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  }
  return w;
}

Spectrogram stft_log_power(const AudioBuffer& audio, const StftConfig& cfg) {
  if (audio.empty()) throw std::invalid_argument("stft_log_power: empty audio");
  if (cfg.hop_length == 0 || cfg.window_length == 0 || cfg.window_length > cfg.n_fft) {
    throw std::invalid_argument("stft_log_power: invalid config");
  }
  const std::size_t len = audio.size();
  const std::size_t win = cfg.window_length;
  const std::size_t n_frames = len < win ? 1 : (len - win) / cfg.hop_length + 1;
  const std::size_t n_bins = cfg.n_fft / 2 + 1;
  const auto window = hann_window(win);

  Spectrogram spec;
  spec.n_bins = n_bins;
  spec.n_frames = n_frames;
  spec.frame_hop = static_cast<int>(cfg.hop_length);
  spec.values.resize(n_bins * n_frames);
  spec.bin_frequencies.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    spec.bin_frequencies[k] = static_cast<double>(k) * audio.sample_rate / cfg.n_fft;
  }

  std::vector<Complex> buf(cfg.n_fft);
  for (std::size_t f = 0; f < n_frames; ++f) {
    std::fill(buf.begin(), buf.end(), Complex{});
    const std::size_t start = f * cfg.hop_length;
    for (std::size_t n = 0; n < win && start + n < len; ++n) {
      buf[n] = audio.samples[start + n] * window[n];
    }
    fft_inplace(buf);
    for (std::size_t k = 0; k < n_bins; ++k) {
      spec.at(k, f) = static_cast<float>(std::log(std::max(std::norm(buf[k]), kLogPowerFloor)));
    }
  }
  return spec;
}

Spectrogram low_band_slice(const Spectrogram& spec, double max_hz, double nyquist_hz) {
  if (max_hz > nyquist_hz) throw std::invalid_argument("low_band_slice: max_hz above Nyquist");
  if (spec.bin_frequencies.empty() || max_hz < spec.bin_frequencies.front()) {
    throw std::invalid_argument("low_band_slice: max_hz below first bin");
  }
  std::size_t keep = 0;
  while (keep < spec.n_bins && spec.bin_frequencies[keep] <= max_hz) ++keep;

  Spectrogram out;
  out.n_bins = keep;
  out.n_frames = spec.n_frames;
  out.frame_hop = spec.frame_hop;
  out.values.assign(spec.values.begin(),
                    spec.values.begin() + static_cast<std::ptrdiff_t>(keep * spec.n_frames));
  out.bin_frequencies.assign(spec.bin_frequencies.begin(),
                             spec.bin_frequencies.begin() + static_cast<std::ptrdiff_t>(keep));
  return out;
}

std::vector<double> cqt_frequencies(const CqtConfig& cfg) {
  if (cfg.bins_per_octave <= 0 || !(cfg.f_min > 0.0) || !(cfg.f_min < cfg.f_max)) {
    throw std::invalid_argument("cqt: invalid config");
  }
  std::vector<double> freqs;
  for (int k = 0;; ++k) {
    const double f = cfg.f_min * std::exp2(static_cast<double>(k) / cfg.bins_per_octave);
    if (f > cfg.f_max * (1.0 + 1e-12)) break;
    freqs.push_back(f);
  }
  return freqs;
}

CqtAnalyzer::CqtAnalyzer(const CqtConfig& cfg, int sample_rate)
    : cfg_(cfg), sample_rate_(sample_rate) {
  if (cfg.hop_length == 0) throw std::invalid_argument("cqt: hop must be positive");
  if (cfg.f_max > sample_rate / 2.0) throw std::invalid_argument("cqt: f_max above Nyquist");
  freqs_ = cqt_frequencies(cfg);
  q_ = 1.0 / (std::exp2(1.0 / cfg.bins_per_octave) - 1.0);
  kernels_.reserve(freqs_.size());
  for (double f : freqs_) {
    const auto n = static_cast<std::size_t>(std::ceil(q_ * sample_rate / f));
    const auto w = hann_window(n);
    Kernel k;
    k.re.resize(n);
    k.im.resize(n);
    const double centre = n / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double phase = -2.0 * std::numbers::pi * f * (i - centre) / sample_rate;
      k.re[i] = w[i] * std::cos(phase) / n;
      k.im[i] = w[i] * std::sin(phase) / n;
    }
    kernels_.push_back(std::move(k));
  }
}

Spectrogram CqtAnalyzer::log_power(const AudioBuffer& audio) const {
  if (audio.empty()) throw std::invalid_argument("cqt_log_power: empty audio");
  if (audio.sample_rate != sample_rate_) {
    throw std::invalid_argument("cqt_log_power: sample rate differs from analyser");
  }
  const auto len = static_cast<std::ptrdiff_t>(audio.size());
  const std::size_t n_frames = (audio.size() - 1) / cfg_.hop_length + 1;

  Spectrogram spec;
  spec.n_bins = freqs_.size();
  spec.n_frames = n_frames;
  spec.frame_hop = static_cast<int>(cfg_.hop_length);
  spec.bin_frequencies = freqs_;
  spec.values.resize(spec.n_bins * n_frames);

  const double* x = audio.samples.data();
  for (std::size_t k = 0; k < kernels_.size(); ++k) {
    const auto& ker = kernels_[k];
    const auto n = static_cast<std::ptrdiff_t>(ker.re.size());
    for (std::size_t f = 0; f < n_frames; ++f) {
      const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(f * cfg_.hop_length) - n / 2;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -start);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, len - start);
      double re = 0.0, im = 0.0;
      for (std::ptrdiff_t i = lo; i < hi; ++i) {
        const double v = x[start + i];
        re += v * ker.re[i];
        im += v * ker.im[i];
      }
      spec.at(k, f) = static_cast<float>(std::log(std::max(re * re + im * im, kLogPowerFloor)));
    }
  }
  return spec;
}

Spectrogram cqt_log_power(const AudioBuffer& audio, const CqtConfig& cfg) {
  return CqtAnalyzer(cfg, audio.sample_rate).log_power(audio);
}

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "stft1024") return FeatureKind::kStft1024;
  if (name == "stft2048") return FeatureKind::kStft2048;
  if (name == "cqt") return FeatureKind::kCqt;
  throw UsageError("unknown feature kind: " + name);
}

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kStft1024: return "stft1024";
    case FeatureKind::kStft2048: return "stft2048";
    case FeatureKind::kCqt: return "cqt";
  }
  return "?";
}

Spectrogram extract_features(const AudioBuffer& audio, FeatureKind kind) {
  const double nyquist = audio.sample_rate / 2.0;
  switch (kind) {
    case FeatureKind::kStft1024: {
      const auto cfg = StftConfig::stft1024();
      return low_band_slice(stft_log_power(audio, cfg), cfg.low_band_max_hz, nyquist);
    }
    case FeatureKind::kStft2048: {
      const auto cfg = StftConfig::stft2048();
      return low_band_slice(stft_log_power(audio, cfg), cfg.low_band_max_hz, nyquist);
    }
    case FeatureKind::kCqt: {
      // Kernel construction dominates for short clips, so the analyser is reused.
      static std::mutex mu;
      static std::unique_ptr<CqtAnalyzer> cached;
      static int cached_rate = 0;
      std::lock_guard lock(mu);
      if (!cached || cached_rate != audio.sample_rate) {
        cached = std::make_unique<CqtAnalyzer>(CqtConfig::paper(), audio.sample_rate);
        cached_rate = audio.sample_rate;
      }
      return cached->log_power(audio);
    }
  }
  throw std::invalid_argument("extract_features: unknown kind");
}

std::size_t feature_bins(FeatureKind kind, int sample_rate) {
  switch (kind) {
    case FeatureKind::kStft1024:
    case FeatureKind::kStft2048: {
      const auto cfg = kind == FeatureKind::kStft1024 ? StftConfig::stft1024() : StftConfig::stft2048();
      const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(cfg.n_fft);
      return static_cast<std::size_t>(std::floor(cfg.low_band_max_hz / bin_hz)) + 1;
    }
    case FeatureKind::kCqt:
      return cqt_frequencies(CqtConfig::paper()).size();
  }
  throw std::invalid_argument("feature_bins: unknown kind");
}

std::string encode_spectrogram(const Spectrogram& spec) {
  if (spec.values.size() != spec.n_bins * spec.n_frames ||
      spec.bin_frequencies.size() != spec.n_bins) {
    throw std::invalid_argument("encode_spectrogram: inconsistent shape");
  }
  std::string out = "SPG1";
  out.reserve(12 + 4 * spec.values.size() + 8 * spec.n_bins);
  binio::put_u32(out, static_cast<std::uint32_t>(spec.n_bins));
  binio::put_u32(out, static_cast<std::uint32_t>(spec.n_frames));
  for (float v : spec.values) binio::put_f32(out, v);
  for (double f : spec.bin_frequencies) binio::put_f64(out, f);
  return out;
}

Spectrogram decode_spectrogram(std::string_view bytes) {
  binio::Reader r(bytes, "SPG1 feature file");
  if (r.take(4) != "SPG1") throw DataError("bad SPG1 magic");
  Spectrogram spec;
  spec.n_bins = r.u32();
  spec.n_frames = r.u32();
  if (spec.n_bins == 0 || spec.n_frames == 0) throw DataError("empty SPG1 spectrogram");
  spec.values.resize(spec.n_bins * spec.n_frames);
  for (auto& v : spec.values) v = r.f32();
  spec.bin_frequencies.resize(spec.n_bins);
  for (auto& f : spec.bin_frequencies) f = r.f64();
  if (!r.done()) throw DataError("trailing bytes in SPG1 file");
  return spec;
}

void write_spectrogram(const std::filesystem::path& path, const Spectrogram& spec) {
  binio::write_file(path, encode_spectrogram(spec));
}

Spectrogram read_spectrogram(const std::filesystem::path& path) {
  return decode_spectrogram(binio::read_file(path));
}

}  // namespace antispoof
