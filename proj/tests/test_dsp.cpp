// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <random>
#include <vector>

#include "antispoof/dsp.hpp"
#include "antispoof/error.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace antispoof;
using antispoof::testing::sine;
using antispoof::testing::TempDir;
using antispoof::testing::white_noise;

namespace {

std::vector<Complex> naive_dft(const std::vector<Complex>& x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += x[j] * std::polar(1.0, -2.0 * M_PI * double(k * j % n) / double(n));
    out[k] = acc;
  }
  return out;
}

std::vector<Complex> random_complex(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Complex> x(n);
  for (auto& v : x) v = {u(rng), u(rng)};
  return x;
}

std::size_t argmax_bin(const Spectrogram& s) {
  std::vector<double> mean(s.n_bins, 0.0);
  for (std::size_t b = 0; b < s.n_bins; ++b)
    for (std::size_t t = 0; t < s.n_frames; ++t) mean[b] += s.at(b, t);
  return static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
}

}  // namespace

TEST_CASE("fft of impulse and constant") {
  const auto imp = fft({1, 0, 0, 0});
  for (const auto& v : imp) CHECK(std::abs(v - Complex(1, 0)) < 1e-15);
  const auto dc = fft({1, 1, 1, 1});
  CHECK(std::abs(dc[0] - Complex(4, 0)) < 1e-15);
  for (int k = 1; k < 4; ++k) CHECK(std::abs(dc[static_cast<std::size_t>(k)]) < 1e-15);
}

TEST_CASE("fft matches the naive dft") {
  for (std::size_t n : {1u, 2u, 16u, 64u, 512u}) {
    const auto x = random_complex(n, n);
    const auto fast = fft(x);
    const auto slow = naive_dft(x);
    double err = 0.0, ref = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      err = std::max(err, std::abs(fast[k] - slow[k]));
      ref = std::max(ref, std::abs(slow[k]));
    }
    CHECK(err / ref < 1e-9);
  }
}

TEST_CASE("fft inverse round trip") {
  for (std::size_t n : {8u, 1024u, 4096u}) {
    const auto x = random_complex(n, 99 + n);
    const auto back = fft(fft(x), true);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(back[i] - x[i]));
    CHECK(err < 1e-9);
  }
}

TEST_CASE("fft rejects non power of two lengths") {
  CHECK_THROWS_AS(fft(std::vector<Complex>(12)), std::invalid_argument);
  CHECK_THROWS_AS(fft(std::vector<Complex>{}), std::invalid_argument);
}

TEST_CASE("hann window is periodic") {
  const auto w = hann_window(8);
  CHECK(w[0] == 0.0);
  CHECK(w[4] == doctest::Approx(1.0));
  CHECK(w[2] == doctest::Approx(0.5));
  CHECK(w[6] == doctest::Approx(0.5));
}

TEST_CASE("stft of one second of silence") {
  AudioBuffer a;
  a.samples.assign(16000, 0.0);
  const auto s = stft_log_power(a, StftConfig::stft1024());
  CHECK(s.n_bins == 513);
  // Frames lie fully inside the signal: floor((16000 - 1024) / 160) + 1.
  CHECK(s.n_frames == 94);
  CHECK(s.frame_hop == 160);
  const float floor_value = static_cast<float>(std::log(1e-10));
  CHECK(std::all_of(s.values.begin(), s.values.end(), [&](float v) { return v == floor_value; }));
}

TEST_CASE("stft pads audio shorter than one window") {
  AudioBuffer a;
  a.samples.assign(100, 0.1);
  const auto s = stft_log_power(a, StftConfig::stft1024());
  CHECK(s.n_frames == 1);
  AudioBuffer empty;
  CHECK_THROWS_AS(stft_log_power(empty, StftConfig::stft1024()), std::invalid_argument);
}

TEST_CASE("stft peak of a 1 kHz sine") {
  const auto s = stft_log_power(sine(1000.0, 1.0), StftConfig::stft1024());
  const double width = 16000.0 / 1024.0;
  CHECK(std::abs(s.bin_frequencies[argmax_bin(s)] - 1000.0) <= width);
}

TEST_CASE("stft doubling amplitude adds ln 4") {
  const auto a = white_noise(8000, 0.1, 3);
  auto b = a;
  for (auto& v : b.samples) v *= 2.0;
  const auto sa = stft_log_power(a, StftConfig::stft1024());
  const auto sb = stft_log_power(b, StftConfig::stft1024());
  const float floor_value = static_cast<float>(std::log(1e-10));
  for (std::size_t i = 0; i < sa.values.size(); ++i) {
    if (sa.values[i] > floor_value + 1.0f) CHECK(sb.values[i] - sa.values[i] == doctest::Approx(std::log(4.0)).epsilon(1e-4));
  }
}

TEST_CASE("stft single frame satisfies parseval") {
  const auto a = white_noise(1024, 0.2, 17);
  const auto s = stft_log_power(a, StftConfig::stft1024());
  REQUIRE(s.n_frames == 1);
  const auto w = hann_window(1024);
  double time_energy = 0.0;
  for (std::size_t n = 0; n < 1024; ++n) time_energy += (w[n] * a.samples[n]) * (w[n] * a.samples[n]);
  double freq_energy = 0.0;
  for (std::size_t k = 0; k < s.n_bins; ++k) {
    const double p = std::exp(static_cast<double>(s.at(k, 0)));
    freq_energy += (k == 0 || k == 512) ? p : 2.0 * p;
  }
  CHECK(std::abs(freq_energy - 1024.0 * time_energy) / (1024.0 * time_energy) < 1e-6);
}

TEST_CASE("low band slice row counts") {
  AudioBuffer a = white_noise(4000, 0.1, 1);
  const auto s1024 = stft_log_power(a, StftConfig::stft1024());
  CHECK(low_band_slice(s1024, 4000.0, 8000.0).n_bins == 257);
  const auto s2048 = stft_log_power(a, StftConfig::stft2048());
  CHECK(s2048.n_bins == 1025);
  CHECK(low_band_slice(s2048, 4000.0, 8000.0).n_bins == 513);
  const auto same = low_band_slice(s1024, 8000.0, 8000.0);
  CHECK(same.n_bins == s1024.n_bins);
  CHECK(same.values == s1024.values);
  CHECK_THROWS_AS(low_band_slice(s1024, -1.0, 8000.0), std::invalid_argument);
  CHECK_THROWS_AS(low_band_slice(s1024, 9000.0, 8000.0), std::invalid_argument);
}

TEST_CASE("feature kinds have the expected bin counts") {
  const auto a = white_noise(16000, 0.1, 2);
  for (auto kind : {FeatureKind::kStft1024, FeatureKind::kStft2048, FeatureKind::kCqt}) {
    const auto s = extract_features(a, kind);
    CHECK(s.n_bins == feature_bins(kind));
    CHECK(s.bin_frequencies.size() == s.n_bins);
  }
  CHECK(feature_bins(FeatureKind::kStft1024) == 257);
  CHECK(feature_bins(FeatureKind::kStft2048) == 513);
  CHECK(feature_bins(FeatureKind::kCqt) == 393);
  CHECK(parse_feature_kind(to_string(FeatureKind::kCqt)) == FeatureKind::kCqt);
  CHECK_THROWS_AS(parse_feature_kind("mfcc"), UsageError);
}

TEST_CASE("cqt frequencies") {
  const auto f = cqt_frequencies(CqtConfig::paper());
  CHECK(f.size() == static_cast<std::size_t>(std::ceil(49.0 * std::log2(4000.0 / 15.6))));
  CHECK(f.size() == 393);
  CHECK(f.front() == 15.6);
  CHECK(f.back() <= 4000.0);
  const double ratio = std::pow(2.0, 1.0 / 49.0);
  for (std::size_t k = 1; k < f.size(); ++k) CHECK(f[k] / f[k - 1] == doctest::Approx(ratio).epsilon(1e-12));
  CqtAnalyzer an(CqtConfig::paper(), 16000);
  CHECK(an.q_factor() == doctest::Approx(1.0 / (ratio - 1.0)));
  CHECK_THROWS_AS(CqtAnalyzer(CqtConfig::paper(), 6000), std::invalid_argument);
}

TEST_CASE("cqt peak of a 440 Hz sine and silence") {
  const auto s = cqt_log_power(sine(440.0, 1.0), CqtConfig::paper());
  CHECK(s.n_bins == 393);
  const double f = s.bin_frequencies[argmax_bin(s)];
  CHECK(std::abs(std::log2(f / 440.0)) <= 1.0 / 24.0);

  AudioBuffer quiet;
  quiet.samples.assign(4000, 0.0);
  const auto z = cqt_log_power(quiet, CqtConfig::paper());
  const float floor_value = static_cast<float>(std::log(1e-10));
  CHECK(std::all_of(z.values.begin(), z.values.end(), [&](float v) { return v == floor_value; }));
}

TEST_CASE("spg1 round trip is bit exact") {
  TempDir dir;
  const auto s = extract_features(white_noise(5000, 0.3, 8), FeatureKind::kStft1024);
  write_spectrogram(dir / "x.spg", s);
  const auto r = read_spectrogram(dir / "x.spg");
  CHECK(r.n_bins == s.n_bins);
  CHECK(r.n_frames == s.n_frames);
  CHECK(std::memcmp(r.values.data(), s.values.data(), s.values.size() * sizeof(float)) == 0);
  CHECK(r.bin_frequencies == s.bin_frequencies);
  CHECK(encode_spectrogram(r) == encode_spectrogram(s));
  auto bytes = encode_spectrogram(s);
  CHECK_THROWS_AS(decode_spectrogram(bytes.substr(0, bytes.size() - 3)), DataError);
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_spectrogram(bytes), DataError);
}
