// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "antispoof/error.hpp"
#include "antispoof/text_util.hpp"

namespace antispoof {

std::string to_string(Label label) {
  switch (label) {
    case Label::kBonafide: return "bonafide";
    case Label::kSpoof: return "spoof";
    case Label::kUnknown: return "unknown";
  }
  return "unknown";
}

Label parse_label(const std::string& text) {
  if (text == "bonafide") return Label::kBonafide;
  if (text == "spoof") return Label::kSpoof;
  if (text == "unknown" || text == "-") return Label::kUnknown;
  throw DataError("unknown label: " + text);
}

std::string format_recipe(const AugmentRecipe& r) {
  std::vector<std::string> parts;
  if (r.noise) parts.push_back("noise=" + r.noise->id + "@" + format_double(r.noise->snr_db));
  if (r.rir) parts.push_back("rir=" + *r.rir);
  if (r.speed) parts.push_back("speed=" + format_double(*r.speed));
  if (r.codec) parts.push_back("codec=" + *r.codec);
  if (r.normalize) parts.push_back("norm=1");
  if (parts.empty()) return "-";
  return join(parts, ",");
}

AugmentRecipe parse_recipe(const std::string& text) {
  AugmentRecipe r;
  if (text.empty() || text == "-") return r;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw DataError("bad recipe item: " + item);
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "noise") {
      const auto at = value.rfind('@');
      if (at == std::string::npos) throw DataError("noise needs <id>@<snr>: " + value);
      const double snr = parse_double(value.substr(at + 1));
      if (!std::isfinite(snr)) throw DataError("non-finite snr in recipe: " + value);
      r.noise = NoiseSpec{value.substr(0, at), snr};
    } else if (key == "rir") {
      r.rir = value;
    } else if (key == "speed") {
      const double f = parse_double(value);
      if (!(f >= 0.9 && f <= 1.1)) throw DataError("speed factor outside [0.9, 1.1]: " + value);
      r.speed = f;
    } else if (key == "codec") {
      r.codec = value;
    } else if (key == "norm") {
      r.normalize = value == "1" || value == "true";
    } else {
      throw DataError("unknown recipe key: " + key);
    }
  }
  return r;
}

void TrialManifest::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.utt_id).second) throw DataError("duplicate utt_id: " + e.utt_id);
  }
}

TrialManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());
  TrialManifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 4) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 4 tab-separated fields");
    }
    m.entries.push_back({fields[0], fields[1], parse_label(fields[2]), parse_recipe(fields[3])});
  }
  m.validate();
  return m;
}

void write_manifest(const std::filesystem::path& path, const TrialManifest& manifest) {
  std::ostringstream out;
  for (const auto& e : manifest.entries) {
    out << e.utt_id << '\t' << e.path.string() << '\t' << to_string(e.label) << '\t'
        << format_recipe(e.recipe) << '\n';
  }
  write_text_file(path, out.str());
}

const std::vector<std::string>& all_codec_names() {
  static const std::vector<std::string> names = {"mp3", "m4a", "ogg", "opus", "alaw", "mulaw", "g722"};
  return names;
}

bool is_native_codec(const std::string& name) { return name == "alaw" || name == "mulaw"; }

CompositionResult compose_corpus(const TrialManifest& manifest, const CompositionSpec& spec) {
  if (manifest.empty()) throw std::invalid_argument("compose_corpus: empty base manifest");
  for (const auto& c : spec.available_codecs) {
    const auto& names = all_codec_names();
    if (std::find(names.begin(), names.end(), c) == names.end()) {
      throw std::invalid_argument("compose_corpus: unknown codec " + c);
    }
  }
  // Keep the canonical codec order whatever order the caller listed them in.
  std::vector<std::string> codecs;
  for (const auto& name : all_codec_names()) {
    if (std::find(spec.available_codecs.begin(), spec.available_codecs.end(), name) !=
        spec.available_codecs.end()) {
      codecs.push_back(name);
    }
  }

  CompositionResult result;
  result.multiplier = 1 + static_cast<int>(codecs.size()) + (spec.include_normalized ? 1 : 0);
  TrialManifest expanded;
  expanded.entries.reserve(manifest.size() * result.multiplier);
  for (const auto& e : manifest.entries) {
    expanded.entries.push_back(e);
    for (const auto& c : codecs) {
      ManifestEntry v = e;
      v.utt_id = e.utt_id + "-" + c;
      v.recipe.codec = c;
      expanded.entries.push_back(std::move(v));
    }
    if (spec.include_normalized) {
      ManifestEntry v = e;
      v.utt_id = e.utt_id + "-norm";
      v.recipe.normalize = true;
      expanded.entries.push_back(std::move(v));
    }
  }
  expanded.validate();

  if (!spec.sample_count) {
    result.manifest = std::move(expanded);
    return result;
  }
  const std::size_t want = *spec.sample_count;
  if (want > expanded.size()) {
    throw std::invalid_argument("compose_corpus: requested " + std::to_string(want) +
                                " entries but only " + std::to_string(expanded.size()) +
                                " are available");
  }
  std::vector<std::size_t> idx(expanded.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(spec.seed);
  // Partial Fisher-Yates, then restore corpus order for stable output.
  for (std::size_t i = 0; i < want; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(want);
  std::sort(idx.begin(), idx.end());
  for (auto i : idx) result.manifest.entries.push_back(expanded.entries[i]);
  return result;
}

}  // namespace antispoof
