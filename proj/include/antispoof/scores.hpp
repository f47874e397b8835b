// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "antispoof/manifest.hpp"

namespace antispoof {

struct ScoreEntry {
  std::string utt_id;
  double score = 0.0;
};

/// Detection scores, higher means more bonafide.
struct ScoreSet {
  std::vector<ScoreEntry> entries;
  std::map<std::string, Label> labels;  // optional; empty when unlabeled

  std::size_t size() const { return entries.size(); }
  bool labeled() const { return !labels.empty(); }
  /// Unique ids, finite scores, and a bonafide/spoof label for every entry
  /// when labels are present.
  void validate() const;
  std::vector<double> scores() const;
  /// Scores split by label; throws DataError if any entry lacks a label.
  void split(std::vector<double>& bonafide, std::vector<double>& spoof) const;
  /// Score map keyed by utt_id.
  std::map<std::string, double> by_id() const;
};

/// "utt_id<TAB>score" lines. negate flips polarity on ingest.
ScoreSet read_scores(const std::filesystem::path& path, bool negate = false);
void write_scores(const std::filesystem::path& path, const ScoreSet& set);
std::string format_scores(const ScoreSet& set);

/// "utt_id<TAB>bonafide|spoof" lines.
std::map<std::string, Label> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::map<std::string, Label>& labels);

/// Copies labels for the ids in set; throws DataError on a missing id.
void attach_labels(ScoreSet& set, const std::map<std::string, Label>& labels);

}  // namespace antispoof
