// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>

#include "antispoof/error.hpp"

namespace antispoof {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open wav file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string where = " (" + path.string() + ")";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DataError("not a RIFF/WAVE file" + where);
  }

  std::optional<FmtChunk> fmt;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::size_t size = le32(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(size, bytes.size() - body);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (avail < 16) throw DataError("truncated fmt chunk" + where);
      const unsigned char* f = bytes.data() + body;
      FmtChunk c;
      c.format = le16(f);
      c.channels = le16(f + 2);
      c.sample_rate = le32(f + 4);
      c.bits = le16(f + 14);
      if (c.format == kFormatExtensible) {
        if (avail < 26) throw DataError("truncated extensible fmt chunk" + where);
        c.format = le16(f + 24);
      }
      fmt = c;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = avail;
    }
    pos = body + size + (size & 1);
  }
  if (!fmt) throw DataError("missing fmt chunk" + where);
  if (!data) throw DataError("missing data chunk" + where);
  if (fmt->channels == 0 || fmt->sample_rate == 0) throw DataError("malformed fmt chunk" + where);

  const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
  const bool f32 = fmt->format == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !f32) {
    throw DataError("unsupported wav encoding (format " + std::to_string(fmt->format) + ", " +
                    std::to_string(fmt->bits) + " bits)" + where);
  }
  const std::size_t width = fmt->bits / 8;
  const std::size_t frame_bytes = width * fmt->channels;
  const std::size_t n_frames = data_size / frame_bytes;
  if (n_frames == 0) throw DataError("zero-length audio" + where);

  AudioBuffer audio;
  audio.sample_rate = static_cast<int>(fmt->sample_rate);
  audio.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < fmt->channels; ++ch) {
      const unsigned char* p = data + i * frame_bytes + ch * width;
      if (pcm16) {
        acc += static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else {
        const std::uint32_t bits = le32(p);
        float v;
        std::memcpy(&v, &bits, sizeof v);
        acc += v;
      }
    }
    audio.samples[i] = acc / fmt->channels;
  }
  return audio;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  if (audio.sample_rate <= 0) throw std::invalid_argument("write_wav: sample rate must be positive");
  const auto n = static_cast<std::uint32_t>(audio.samples.size());
  std::string out;
  out.reserve(44 + 2 * n);
  out += "RIFF";
  put32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, 2 * n);
  for (double s : audio.samples) {
    if (!std::isfinite(s)) throw std::invalid_argument("write_wav: non-finite sample");
    const double q = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
    put16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failed: " + path.string());
}

AudioBuffer resample_linear(const AudioBuffer& audio, double factor) {
  if (!(factor >= 0.5 && factor <= 2.0)) {
    throw std::invalid_argument("resample_linear: factor must be in [0.5, 2.0]");
  }
  AudioBuffer out;
  out.sample_rate = audio.sample_rate;
  const std::size_t n_in = audio.samples.size();
  if (n_in == 0) return out;
  const auto n_out = static_cast<std::size_t>(std::llround(n_in / factor));
  out.samples.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = i * factor;
    const auto j = static_cast<std::size_t>(pos);
    if (j + 1 >= n_in) {
      out.samples[i] = audio.samples[n_in - 1];
      continue;
    }
    const double frac = pos - j;
    out.samples[i] = audio.samples[j] + frac * (audio.samples[j + 1] - audio.samples[j]);
  }
  return out;
}

double rms(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / x.size());
}

}  // namespace antispoof
