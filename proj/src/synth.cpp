// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "antispoof/error.hpp"
#include "antispoof/hash.hpp"
#include "antispoof/text_util.hpp"

namespace antispoof {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxHarmonicHz = 5000.0;
constexpr std::size_t kBlock = 32;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double envelope_gain(double f, const std::array<double, 3>& fm, const std::array<double, 3>& bw, double tilt) {
  double g = 0.05;
  for (int k = 0; k < 3; ++k) {
    const double d = (f - fm[static_cast<std::size_t>(k)]) / bw[static_cast<std::size_t>(k)];
    g += 1.0 / (1.0 + d * d);
  }
  // Glottal roll-off near 1/f, then the tilt term.
  return g * (100.0 / std::max(f, 50.0)) * std::pow(f / 1000.0, tilt);
}

void scale_to_peak(std::vector<double>& x, double peak) {
  double mx = 0.0;
  for (double v : x) mx = std::max(mx, std::abs(v));
  if (mx > 0.0) {
    for (auto& v : x) v *= peak / mx;
  }
}

std::vector<double> colored_noise(std::size_t n, double pole, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> out(n);
  double s = 0.0;
  for (auto& v : out) {
    s = pole * s + g(rng);
    v = s;
  }
  return out;
}

std::string split_tag(Label l) { return l == Label::kBonafide ? "bona" : "spoof"; }

std::string zero_pad(std::size_t i, int width) {
  std::string s = std::to_string(i);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

}  // namespace

const std::vector<std::string>& artifact_families() {
  static const std::vector<std::string> kFamilies{"tilt", "phase", "splice"};
  return kFamilies;
}

AudioBuffer synth_voice(const VoiceParams& p, std::mt19937_64& rng, int sample_rate) {
  const auto n = static_cast<std::size_t>(std::llround(p.duration * sample_rate));
  const double sr = sample_rate;
  const double nyq = std::min(kMaxHarmonicHz, 0.45 * sr);
  const auto max_h = static_cast<std::size_t>(nyq / 60.0) + 1;

  std::vector<std::complex<double>> phase(max_h + 1);
  for (auto& c : phase) c = std::polar(1.0, uniform(rng, 0.0, kTwoPi));
  const double intonation_rate = uniform(rng, 0.4, 1.2);
  const double intonation_phase = uniform(rng, 0.0, kTwoPi);
  const double am_phase = uniform(rng, 0.0, kTwoPi);
  const std::size_t jitter_period = static_cast<std::size_t>(sr / 100.0);

  std::vector<double> out(n, 0.0);
  std::vector<double> amp(max_h + 1, 0.0);
  double phi = 0.0;
  for (std::size_t start = 0; start < n; start += kBlock) {
    const double t = static_cast<double>(start) / sr;
    const double frac = p.duration > 0.0 ? t / p.duration : 0.0;
    const double f0 = p.f0 * (1.0 + 0.08 * std::sin(kTwoPi * intonation_rate * t + intonation_phase) +
                              0.015 * std::sin(kTwoPi * 5.5 * t));
    std::array<double, 3> fm{};
    for (std::size_t k = 0; k < 3; ++k) fm[k] = p.formants[k] + frac * (p.formants_end[k] - p.formants[k]);
    std::size_t nh = 0;
    for (std::size_t h = 1; h <= max_h; ++h) {
      const double f = static_cast<double>(h) * f0;
      if (f >= nyq) break;
      amp[h] = envelope_gain(f, fm, p.bandwidths, p.tilt);
      nh = h;
    }
    if (p.phase_jitter_above_hz > 0.0 && start % jitter_period < kBlock) {
      for (std::size_t h = 1; h <= nh; ++h) {
        if (static_cast<double>(h) * f0 > p.phase_jitter_above_hz) phase[h] = std::polar(1.0, uniform(rng, 0.0, kTwoPi));
      }
    }
    const std::size_t end = std::min(n, start + kBlock);
    for (std::size_t i = start; i < end; ++i) {
      phi += kTwoPi * f0 / sr;
      if (phi > kTwoPi) phi -= kTwoPi;
      const std::complex<double> z = std::polar(1.0, phi);
      std::complex<double> w = 1.0;
      double s = 0.0;
      for (std::size_t h = 1; h <= nh; ++h) {
        w *= z;
        s += amp[h] * (w * phase[h]).imag();
      }
      const double ti = static_cast<double>(i) / sr;
      const double am = 0.55 + 0.45 * std::sin(kTwoPi * p.am_rate * ti + am_phase);
      out[i] = s * am * am;
    }
  }
  // Breath noise keeps every band above the log floor.
  std::normal_distribution<double> g(0.0, 1.0);
  double mx = 0.0;
  for (double v : out) mx = std::max(mx, std::abs(v));
  for (auto& v : out) v += 0.002 * mx * g(rng);
  const auto fade = std::min(n / 2, static_cast<std::size_t>(0.02 * sr));
  for (std::size_t i = 0; i < fade; ++i) {
    const double w = static_cast<double>(i) / static_cast<double>(fade);
    out[i] *= w;
    out[n - 1 - i] *= w;
  }
  scale_to_peak(out, p.peak);
  AudioBuffer a;
  a.samples = std::move(out);
  a.sample_rate = sample_rate;
  return a;
}

VoiceParams random_voice(std::mt19937_64& rng) {
  VoiceParams p;
  p.f0 = uniform(rng, 80.0, 300.0);
  p.duration = uniform(rng, 1.0, 3.0);
  p.tilt = uniform(rng, -0.1, 0.1);
  p.formants = {uniform(rng, 300.0, 800.0), uniform(rng, 900.0, 2200.0), uniform(rng, 2300.0, 3200.0)};
  for (std::size_t k = 0; k < 3; ++k) p.formants_end[k] = p.formants[k] * uniform(rng, 0.85, 1.15);
  p.bandwidths = {uniform(rng, 60.0, 120.0), uniform(rng, 80.0, 160.0), uniform(rng, 120.0, 250.0)};
  p.am_rate = uniform(rng, 3.0, 6.0);
  p.peak = uniform(rng, 0.3, 0.7);
  return p;
}

AudioBuffer frame_repeat_splice(const AudioBuffer& audio, std::mt19937_64& rng) {
  const auto& x = audio.samples;
  const std::size_t n = x.size();
  const auto sr = static_cast<std::size_t>(audio.sample_rate);
  std::vector<double> out;
  out.reserve(n + n / 2);
  std::size_t pos = 0;
  while (out.size() < n && pos < n) {
    const auto run = static_cast<std::size_t>(uniform(rng, 0.06, 0.15) * static_cast<double>(sr));
    const auto seg = static_cast<std::size_t>(uniform(rng, 0.02, 0.04) * static_cast<double>(sr));
    const std::size_t run_end = std::min(n, pos + run);
    out.insert(out.end(), x.begin() + static_cast<std::ptrdiff_t>(pos), x.begin() + static_cast<std::ptrdiff_t>(run_end));
    if (run_end >= seg) {
      const int repeats = 1 + static_cast<int>(rng() % 2);
      for (int r = 0; r < repeats; ++r)
        out.insert(out.end(), x.begin() + static_cast<std::ptrdiff_t>(run_end - seg),
                   x.begin() + static_cast<std::ptrdiff_t>(run_end));
    }
    pos = run_end;
  }
  out.resize(n);
  AudioBuffer a;
  a.samples = std::move(out);
  a.sample_rate = audio.sample_rate;
  return a;
}

SynthUtterance synth_utterance(const std::string& utt_id, Label label, const std::string& family,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VoiceParams p = random_voice(rng);
  SynthUtterance u;
  u.utt_id = utt_id;
  u.label = label;
  if (label == Label::kSpoof) {
    if (std::find(artifact_families().begin(), artifact_families().end(), family) == artifact_families().end())
      throw std::invalid_argument("unknown artifact family '" + family + "'");
    u.family = family;
    p.tilt += uniform(rng, 0.25, 0.5);
    if (family == "tilt") p.tilt += uniform(rng, 0.3, 0.6);
    if (family == "phase") p.phase_jitter_above_hz = 2000.0;
  } else if (label != Label::kBonafide) {
    throw std::invalid_argument("synth_utterance: label must be bonafide or spoof");
  }
  u.audio = synth_voice(p, rng);
  if (u.family == "splice") u.audio = frame_repeat_splice(u.audio, rng);
  return u;
}

AugmentPools synth_pools(std::uint64_t seed, std::size_t per_category, std::size_t rir_items) {
  constexpr int kSr = 16000;
  constexpr std::size_t kLen = 5 * kSr;
  AugmentPools pools;
  for (std::size_t i = 0; i < per_category; ++i) {
    std::mt19937_64 rng(derive_seed(seed, 1, "noise" + std::to_string(i)));
    AudioBuffer a;
    a.samples = colored_noise(kLen, uniform(rng, 0.0, 0.95), rng);
    scale_to_peak(a.samples, 0.5);
    pools.noises.push_back({"noise" + zero_pad(i, 2), "noise", std::move(a)});
  }
  for (std::size_t i = 0; i < per_category; ++i) {
    std::mt19937_64 rng(derive_seed(seed, 2, "music" + std::to_string(i)));
    std::vector<double> x(kLen, 0.0);
    const std::size_t note_len = kSr / 2;
    for (std::size_t start = 0; start < kLen; start += note_len) {
      for (int v = 0; v < 3; ++v) {
        const double f = 110.0 * std::pow(2.0, std::floor(uniform(rng, 0.0, 36.0)) / 12.0);
        for (std::size_t j = 0; j < note_len && start + j < kLen; ++j) {
          const double t = static_cast<double>(j) / kSr;
          const double env = std::exp(-3.0 * t);
          for (int h = 1; h <= 4; ++h) x[start + j] += env * std::sin(kTwoPi * f * h * t) / h;
        }
      }
    }
    scale_to_peak(x, 0.5);
    AudioBuffer a;
    a.samples = std::move(x);
    pools.noises.push_back({"music" + zero_pad(i, 2), "music", std::move(a)});
  }
  for (std::size_t i = 0; i < per_category; ++i) {
    std::mt19937_64 rng(derive_seed(seed, 3, "babble" + std::to_string(i)));
    std::vector<double> x(kLen, 0.0);
    for (int talker = 0; talker < 4; ++talker) {
      std::size_t pos = static_cast<std::size_t>(uniform(rng, 0.0, 0.3) * kSr);
      while (pos < kLen) {
        auto p = random_voice(rng);
        const auto v = synth_voice(p, rng, kSr);
        for (std::size_t j = 0; j < v.size() && pos + j < kLen; ++j) x[pos + j] += v.samples[j];
        pos += v.size();
      }
    }
    scale_to_peak(x, 0.5);
    AudioBuffer a;
    a.samples = std::move(x);
    pools.noises.push_back({"babble" + zero_pad(i, 2), "babble", std::move(a)});
  }
  for (std::size_t i = 0; i < rir_items; ++i) {
    std::mt19937_64 rng(derive_seed(seed, 4, "rir" + std::to_string(i)));
    const double rt60 = uniform(rng, 0.2, 0.8);
    const auto len = static_cast<std::size_t>(uniform(rng, 0.25, 0.5) * kSr);
    const auto delay = static_cast<std::size_t>(uniform(rng, 0.0, 40.0));
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> h(len, 0.0);
    h[delay] = 1.0;
    for (std::size_t j = delay + 1; j < len; ++j) {
      const double t = static_cast<double>(j - delay) / kSr;
      h[j] = 0.3 * g(rng) * std::exp(-6.9 * t / rt60);
    }
    AudioBuffer a;
    a.samples = std::move(h);
    pools.rirs.push_back({"rir" + zero_pad(i, 2), "rir", std::move(a)});
  }
  return pools;
}

std::map<std::string, TrialManifest> generate_synthetic_corpus(const std::filesystem::path& dir,
                                                               const CorpusSpec& spec) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "wav", ec);
  fs::create_directories(dir / "pools", ec);
  if (ec) throw DataError("cannot create corpus directory " + dir.string() + ": " + ec.message());

  std::map<std::string, TrialManifest> manifests;
  std::string meta = "";
  for (std::size_t si = 0; si < spec.splits.size(); ++si) {
    const auto& split = spec.splits[si];
    if (split.n_per_class < 1) throw std::invalid_argument("split " + split.name + ": n_per_class must be >= 1");
    if (split.families.empty()) throw std::invalid_argument("split " + split.name + ": no spoof families");
    TrialManifest m;
    for (Label label : {Label::kBonafide, Label::kSpoof}) {
      for (std::size_t i = 0; i < split.n_per_class; ++i) {
        const std::string id = split.name + "_" + split_tag(label) + "_" + zero_pad(i, 4);
        const std::string family = label == Label::kSpoof ? split.families[i % split.families.size()] : "-";
        const auto u = synth_utterance(id, label, family, derive_seed(spec.seed, si, id));
        const fs::path rel = fs::path("wav") / (id + ".wav");
        write_wav(dir / rel, u.audio);
        m.entries.push_back({id, rel.string(), label, {}});
        meta += id + "\t" + split.name + "\t" + to_string(label) + "\t" + u.family + "\n";
      }
    }
    write_manifest(dir / (split.name + ".tsv"), m);
    manifests.emplace(split.name, std::move(m));
  }
  write_text_file(dir / "corpus_meta.tsv", meta);

  const auto pools = synth_pools(spec.seed, spec.pool_items_per_category, spec.rir_items);
  std::string pool_index;
  auto dump = [&](const PoolItem& item) {
    const fs::path rel = fs::path("pools") / (item.id + ".wav");
    write_wav(dir / rel, item.audio);
    pool_index += item.id + "\t" + item.category + "\t" + rel.string() + "\n";
  };
  for (const auto& it : pools.noises) dump(it);
  for (const auto& it : pools.rirs) dump(it);
  write_text_file(dir / "pools.tsv", pool_index);
  return manifests;
}

AugmentPools read_pools(const std::filesystem::path& pools_tsv) {
  std::ifstream in(pools_tsv, std::ios::binary);
  if (!in) throw DataError("cannot open pool index " + pools_tsv.string());
  AugmentPools pools;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 3) throw DataError("pool index: expected id, category, path in '" + line + "'");
    PoolItem item{f[0], f[1], read_wav(pools_tsv.parent_path() / f[2])};
    (item.category == "rir" ? pools.rirs : pools.noises).push_back(std::move(item));
  }
  return pools;
}

std::map<std::string, CorpusMeta> read_corpus_meta(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus metadata " + path.string());
  std::map<std::string, CorpusMeta> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 4) throw DataError("corpus metadata: expected 4 fields in '" + line + "'");
    out[f[0]] = {f[1], parse_label(f[2]), f[3]};
  }
  return out;
}

}  // namespace antispoof
