// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "antispoof/error.hpp"
#include "antispoof/g711.hpp"
#include "antispoof/hash.hpp"

namespace antispoof {

std::vector<double> fit_length(const std::vector<double>& noise, std::size_t length) {
  if (noise.empty()) throw std::invalid_argument("fit_length: empty noise");
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = noise[i % noise.size()];
  return out;
}

MixResult mix_noise_at_snr(const AudioBuffer& clean, const AudioBuffer& noise, double snr_db) {
  MixResult res;
  res.audio = clean;
  if (std::isinf(snr_db) && snr_db > 0) {
    res.status = MixStatus::kNoNoise;
    return res;
  }
  if (!std::isfinite(snr_db)) throw std::invalid_argument("mix_noise_at_snr: snr must be finite or +inf");
  if (clean.sample_rate != noise.sample_rate) {
    throw std::invalid_argument("mix_noise_at_snr: sample rates differ");
  }
  const auto fitted = fit_length(noise.samples, clean.size());
  const double noise_rms = rms(fitted);
  if (!(noise_rms > 0.0)) throw DataError("mix_noise_at_snr: noise is silent");
  const double clean_rms = rms(clean.samples);
  if (!(clean_rms > 0.0)) {
    res.status = MixStatus::kSilentClean;
    return res;
  }
  res.noise_gain = clean_rms / (noise_rms * std::pow(10.0, snr_db / 20.0));
  double peak = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    res.audio.samples[i] = clean.samples[i] + res.noise_gain * fitted[i];
    peak = std::max(peak, std::abs(res.audio.samples[i]));
  }
  if (peak > 1.0) {
    res.mix_scale = 1.0 / peak;
    for (auto& s : res.audio.samples) s *= res.mix_scale;
  }
  return res;
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t n_out = a.size() + b.size() - 1;
  if (std::min(a.size(), b.size()) <= 64) {
    std::vector<double> out(n_out, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
  }
  std::size_t n = 1;
  while (n < n_out) n <<= 1;
  std::vector<Complex> fa(n), fb(n);
  std::copy(a.begin(), a.end(), fa.begin());
  std::copy(b.begin(), b.end(), fb.begin());
  fft_inplace(fa);
  fft_inplace(fb);
  for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
  fft_inplace(fa, true);
  std::vector<double> out(n_out);
  for (std::size_t i = 0; i < n_out; ++i) out[i] = fa[i].real();
  return out;
}

AudioBuffer convolve_rir(const AudioBuffer& clean, const AudioBuffer& rir) {
  if (rir.empty()) throw std::invalid_argument("convolve_rir: empty RIR");
  if (clean.sample_rate != rir.sample_rate) throw std::invalid_argument("convolve_rir: sample rates differ");
  AudioBuffer out;
  out.sample_rate = clean.sample_rate;
  if (clean.empty()) return out;

  std::size_t peak = 0;
  for (std::size_t i = 1; i < rir.size(); ++i) {
    if (std::abs(rir.samples[i]) > std::abs(rir.samples[peak])) peak = i;
  }
  const auto full = convolve(clean.samples, rir.samples);
  out.samples.assign(full.begin() + static_cast<std::ptrdiff_t>(peak),
                     full.begin() + static_cast<std::ptrdiff_t>(peak + clean.size()));
  const double in_rms = rms(clean.samples);
  const double out_rms = rms(out.samples);
  if (out_rms > 0.0) {
    const double g = in_rms / out_rms;
    for (auto& s : out.samples) s *= g;
  }
  return out;
}

AudioBuffer speed_perturb(const AudioBuffer& audio, double factor) {
  if (!(factor >= 0.9 && factor <= 1.1)) {
    throw std::invalid_argument("speed_perturb: factor must be in [0.9, 1.1]");
  }
  if (factor == 1.0) return audio;
  return resample_linear(audio, factor);
}

namespace {

constexpr double kEnvelopeSeconds = 0.03;
constexpr double kHangoverSeconds = 0.2;
constexpr double kMarginDb = 15.9;
constexpr int kLowestThresholdExp = -30;  // thresholds 2^-30 ... 2^4
constexpr int kThresholdCount = 35;

}  // namespace

ActiveLevel measure_active_level(const AudioBuffer& audio) {
  if (audio.empty()) throw DataError("active level: empty audio");
  const double g = std::exp(-1.0 / (audio.sample_rate * kEnvelopeSeconds));
  const auto hang_max = static_cast<long>(std::floor(kHangoverSeconds * audio.sample_rate + 0.5));

  std::array<double, kThresholdCount> thresh{};
  for (int j = 0; j < kThresholdCount; ++j) thresh[j] = std::ldexp(1.0, kLowestThresholdExp + j);
  std::array<long, kThresholdCount> active{};
  std::array<long, kThresholdCount> hang;
  hang.fill(hang_max);

  double p = 0.0, q = 0.0, energy = 0.0;
  for (double x : audio.samples) {
    energy += x * x;
    p = g * p + (1.0 - g) * std::abs(x);
    q = g * q + (1.0 - g) * p;
    for (int j = 0; j < kThresholdCount; ++j) {
      if (q >= thresh[j]) {
        ++active[j];
        hang[j] = 0;
      } else if (hang[j] < hang_max) {
        ++active[j];
        ++hang[j];
      }
    }
  }
  if (active[0] == 0 || !(energy > 0.0)) throw DataError("active level: no active speech");

  auto level_db = [&](int j) { return 10.0 * std::log10(energy / active[j]); };
  auto thresh_db = [&](int j) { return 20.0 * std::log10(thresh[j]); };

  double prev_diff = level_db(0) - thresh_db(0);
  if (prev_diff <= kMarginDb) throw DataError("active level: signal below measurement range");
  for (int j = 1; j < kThresholdCount; ++j) {
    if (active[j] == 0) break;
    const double diff = level_db(j) - thresh_db(j);
    if (diff <= kMarginDb) {
      const double t = (prev_diff - kMarginDb) / (prev_diff - diff);
      ActiveLevel out;
      out.level_dbov = level_db(j - 1) + t * (level_db(j) - level_db(j - 1));
      const double act = active[j - 1] + t * (static_cast<double>(active[j]) - active[j - 1]);
      out.activity = act / static_cast<double>(audio.size());
      return out;
    }
    prev_diff = diff;
  }
  throw DataError("active level: no threshold crossing (signal too sparse)");
}

LevelResult active_level_normalize(const AudioBuffer& audio, double target_dbov) {
  LevelResult res;
  res.measured_dbov = measure_active_level(audio).level_dbov;
  res.gain_db = target_dbov - res.measured_dbov;
  const double g = std::pow(10.0, res.gain_db / 20.0);
  res.audio.sample_rate = audio.sample_rate;
  res.audio.samples.resize(audio.size());
  for (std::size_t i = 0; i < audio.size(); ++i) {
    double v = audio.samples[i] * g;
    if (std::abs(v) > 1.0) {
      v = std::clamp(v, -1.0, 1.0);
      ++res.clipped_samples;
    }
    res.audio.samples[i] = v;
  }
  return res;
}

AudioBuffer codec_compand(const AudioBuffer& audio, CompandLaw law) {
  AudioBuffer out;
  out.sample_rate = audio.sample_rate;
  out.samples.resize(audio.size());
  for (std::size_t i = 0; i < audio.size(); ++i) {
    const double q = std::clamp(std::round(audio.samples[i] * 32768.0), -32768.0, 32767.0);
    const auto pcm = static_cast<std::int16_t>(q);
    const std::int16_t dec = law == CompandLaw::kALaw ? g711::alaw_to_linear(g711::linear_to_alaw(pcm))
                                                      : g711::ulaw_to_linear(g711::linear_to_ulaw(pcm));
    out.samples[i] = dec / 32768.0;
  }
  return out;
}

AudioBuffer run_external_codec(const AudioBuffer& audio, const std::string& codec,
                               const ExternalCodecHooks& hooks) {
  const auto it = hooks.commands.find(codec);
  if (it == hooks.commands.end()) throw DataError("no external hook configured for codec " + codec);
  const std::string tag = hex64(fnv1a64(codec, fnv1a64(std::string_view(
      reinterpret_cast<const char*>(audio.samples.data()), audio.samples.size() * sizeof(double)))));
  const auto in_path = hooks.scratch_dir / ("codec_in_" + tag + ".wav");
  const auto out_path = hooks.scratch_dir / ("codec_out_" + tag + ".wav");
  write_wav(in_path, audio);
  std::string cmd = it->second;
  auto substitute = [&cmd](const std::string& key, const std::string& value) {
    for (auto pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
      cmd.replace(pos, key.size(), value);
    }
  };
  substitute("{in}", in_path.string());
  substitute("{out}", out_path.string());
  const int rc = std::system(cmd.c_str());
  std::filesystem::remove(in_path);
  if (rc != 0) {
    std::filesystem::remove(out_path);
    throw DataError("external codec '" + codec + "' failed with status " + std::to_string(rc));
  }
  AudioBuffer decoded = read_wav(out_path);
  std::filesystem::remove(out_path);
  return decoded;
}

std::vector<std::string> available_codecs(const ExternalCodecHooks& hooks) {
  std::vector<std::string> out;
  for (const auto& name : all_codec_names()) {
    if (is_native_codec(name) || hooks.available(name)) out.push_back(name);
  }
  return out;
}

Spectrogram chunk_to_length(const Spectrogram& spec, std::size_t n_frames, ChunkMode mode,
                            std::mt19937_64* rng) {
  if (n_frames == 0) throw std::invalid_argument("chunk_to_length: n_frames must be positive");
  if (spec.n_frames == 0) throw std::invalid_argument("chunk_to_length: empty spectrogram");
  std::size_t offset = 0;
  if (spec.n_frames > n_frames && mode == ChunkMode::kTrain) {
    if (!rng) throw std::invalid_argument("chunk_to_length: train mode needs a generator");
    std::uniform_int_distribution<std::size_t> dist(0, spec.n_frames - n_frames);
    offset = dist(*rng);
  }
  Spectrogram out;
  out.n_bins = spec.n_bins;
  out.n_frames = n_frames;
  out.frame_hop = spec.frame_hop;
  out.bin_frequencies = spec.bin_frequencies;
  out.values.resize(spec.n_bins * n_frames);
  for (std::size_t b = 0; b < spec.n_bins; ++b) {
    for (std::size_t f = 0; f < n_frames; ++f) {
      out.at(b, f) = spec.at(b, (offset + f) % spec.n_frames);
    }
  }
  return out;
}

int sample_chunk_size(std::mt19937_64& rng, ChunkRange range) {
  if (range.min_frames <= 0 || range.min_frames > range.max_frames) {
    throw std::invalid_argument("sample_chunk_size: invalid range");
  }
  std::uniform_int_distribution<int> dist(range.min_frames, range.max_frames);
  return dist(rng);
}

const PoolItem& AugmentPools::noise(const std::string& id) const {
  for (const auto& n : noises) {
    if (n.id == id) return n;
  }
  throw DataError("unknown noise id: " + id);
}

const PoolItem& AugmentPools::rir(const std::string& id) const {
  for (const auto& r : rirs) {
    if (r.id == id) return r;
  }
  throw DataError("unknown rir id: " + id);
}

AugmentRecipe sample_recipe(const AugmentPolicy& policy, const AugmentPools& pools, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto category_items = [&](const std::string& cat) {
    std::vector<const PoolItem*> items;
    for (const auto& n : pools.noises) {
      if (n.category == cat) items.push_back(&n);
    }
    return items;
  };
  const auto noise_items = category_items("noise");
  const auto music_items = category_items("music");
  const auto babble_items = category_items("babble");

  const std::array<double, 5> weights = {
      policy.weight_clean,
      pools.rirs.empty() ? 0.0 : policy.weight_reverb,
      noise_items.empty() ? 0.0 : policy.weight_noise,
      music_items.empty() ? 0.0 : policy.weight_music,
      babble_items.empty() ? 0.0 : policy.weight_babble,
  };
  AugmentRecipe r;
  const bool any = std::any_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; });
  const int choice = any ? std::discrete_distribution<int>(weights.begin(), weights.end())(rng) : 0;

  auto pick_noise = [&](const std::vector<const PoolItem*>& items, SnrRange range) {
    std::uniform_int_distribution<std::size_t> which(0, items.size() - 1);
    const auto* item = items[which(rng)];
    std::uniform_real_distribution<double> snr(range.lo, range.hi);
    r.noise = NoiseSpec{item->id, snr(rng)};
  };
  switch (choice) {
    case 1: {
      std::uniform_int_distribution<std::size_t> which(0, pools.rirs.size() - 1);
      r.rir = pools.rirs[which(rng)].id;
      break;
    }
    case 2: pick_noise(noise_items, policy.noise_snr); break;
    case 3: pick_noise(music_items, policy.music_snr); break;
    case 4: pick_noise(babble_items, policy.babble_snr); break;
    default: break;
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (!policy.speed_factors.empty() && coin(rng) < policy.speed_probability) {
    std::uniform_int_distribution<std::size_t> which(0, policy.speed_factors.size() - 1);
    r.speed = policy.speed_factors[which(rng)];
  }
  if (!policy.codecs.empty() && coin(rng) < policy.codec_probability) {
    std::uniform_int_distribution<std::size_t> which(0, policy.codecs.size() - 1);
    r.codec = policy.codecs[which(rng)];
  }
  r.normalize = policy.normalize;
  return r;
}

AudioBuffer apply_recipe(const AudioBuffer& audio, const AugmentRecipe& recipe,
                         const AugmentPools& pools, const ExternalCodecHooks* hooks) {
  AudioBuffer out = audio;
  if (recipe.speed) out = speed_perturb(out, *recipe.speed);
  if (recipe.rir) out = convolve_rir(out, pools.rir(*recipe.rir).audio);
  if (recipe.noise) {
    out = mix_noise_at_snr(out, pools.noise(recipe.noise->id).audio, recipe.noise->snr_db).audio;
  }
  if (recipe.codec) {
    if (*recipe.codec == "alaw") {
      out = codec_compand(out, CompandLaw::kALaw);
    } else if (*recipe.codec == "mulaw") {
      out = codec_compand(out, CompandLaw::kMuLaw);
    } else {
      if (!hooks) throw DataError("codec " + *recipe.codec + " needs an external hook");
      out = run_external_codec(out, *recipe.codec, *hooks);
    }
  }
  if (recipe.normalize) {
    // Silent clips have no active level; they pass through unchanged.
    try {
      out = active_level_normalize(out).audio;
    } catch (const DataError&) {
    }
  }
  return out;
}

}  // namespace antispoof
