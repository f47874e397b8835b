// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace antispoof {

enum class Label { kBonafide, kSpoof, kUnknown };

std::string to_string(Label label);
Label parse_label(const std::string& text);

struct NoiseSpec {
  std::string id;
  double snr_db = 0.0;

  bool operator==(const NoiseSpec&) const = default;
};

/// Augmentation applied to one utterance. Order of application:
/// speed, reverberation, noise, codec, level normalization.
struct AugmentRecipe {
  std::optional<NoiseSpec> noise;
  std::optional<std::string> rir;
  std::optional<double> speed;
  std::optional<std::string> codec;  // "alaw", "mulaw" or an external codec name
  bool normalize = false;

  bool empty() const { return !noise && !rir && !speed && !codec && !normalize; }
  bool operator==(const AugmentRecipe&) const = default;
};

/// Comma separated key=value list, "-" when empty:
///   noise=<id>@<snr_db>,rir=<id>,speed=<factor>,codec=<name>,norm=1
std::string format_recipe(const AugmentRecipe& recipe);
AugmentRecipe parse_recipe(const std::string& text);

struct ManifestEntry {
  std::string utt_id;
  std::filesystem::path path;
  Label label = Label::kUnknown;
  AugmentRecipe recipe;

  bool operator==(const ManifestEntry&) const = default;
};

struct TrialManifest {
  std::vector<ManifestEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  /// Throws DataError on duplicate utterance ids.
  void validate() const;
};

/// UTF-8 lines "utt_id<TAB>path<TAB>label<TAB>recipe".
TrialManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const TrialManifest& manifest);

/// Codec variants used to expand a corpus, in expansion order.
const std::vector<std::string>& all_codec_names();
bool is_native_codec(const std::string& name);

struct CompositionSpec {
  std::vector<std::string> available_codecs;  // subset of all_codec_names()
  bool include_normalized = true;
  std::optional<std::size_t> sample_count;  // nullopt keeps the full expansion
  std::uint64_t seed = 0;
};

struct CompositionResult {
  TrialManifest manifest;
  int multiplier = 1;  // variants per base utterance actually produced
};

/// Expands every entry into the original, one variant per available codec
/// and a level-normalized variant (9x with all seven codecs), then samples
/// sample_count entries uniformly without replacement.
CompositionResult compose_corpus(const TrialManifest& manifest, const CompositionSpec& spec);

}  // namespace antispoof
