// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/scores.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "antispoof/error.hpp"
#include "antispoof/text_util.hpp"

namespace antispoof {

namespace {

std::vector<std::pair<std::string, std::string>> read_pairs(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string("cannot open ") + what + " file: " + path.string());
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 2)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 2 tab-separated fields");
    rows.emplace_back(trim(fields[0]), trim(fields[1]));
  }
  return rows;
}

}  // namespace

void ScoreSet::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.utt_id).second) throw DataError("duplicate utt_id in scores: " + e.utt_id);
    if (!std::isfinite(e.score)) throw DataError("non-finite score for " + e.utt_id);
    if (labeled()) {
      auto it = labels.find(e.utt_id);
      if (it == labels.end() || it->second == Label::kUnknown) throw DataError("no label for " + e.utt_id);
    }
  }
}

std::vector<double> ScoreSet::scores() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.score);
  return out;
}

void ScoreSet::split(std::vector<double>& bonafide, std::vector<double>& spoof) const {
  bonafide.clear();
  spoof.clear();
  for (const auto& e : entries) {
    auto it = labels.find(e.utt_id);
    if (it == labels.end() || it->second == Label::kUnknown) throw DataError("no label for " + e.utt_id);
    (it->second == Label::kBonafide ? bonafide : spoof).push_back(e.score);
  }
}

std::map<std::string, double> ScoreSet::by_id() const {
  std::map<std::string, double> out;
  for (const auto& e : entries) {
    if (!out.emplace(e.utt_id, e.score).second) throw DataError("duplicate utt_id in scores: " + e.utt_id);
  }
  return out;
}

ScoreSet read_scores(const std::filesystem::path& path, bool negate) {
  ScoreSet set;
  for (auto& [id, value] : read_pairs(path, "score")) {
    const double v = parse_double(value);
    set.entries.push_back({id, negate ? -v : v});
  }
  set.validate();
  return set;
}

std::string format_scores(const ScoreSet& set) {
  std::string out;
  for (const auto& e : set.entries) out += e.utt_id + "\t" + format_double(e.score) + "\n";
  return out;
}

void write_scores(const std::filesystem::path& path, const ScoreSet& set) { write_text_file(path, format_scores(set)); }

std::map<std::string, Label> read_labels(const std::filesystem::path& path) {
  std::map<std::string, Label> labels;
  for (auto& [id, text] : read_pairs(path, "label")) {
    Label l = parse_label(text);
    if (l == Label::kUnknown) throw DataError("label must be bonafide or spoof for " + id);
    if (!labels.emplace(id, l).second) throw DataError("duplicate utt_id in labels: " + id);
  }
  return labels;
}

void write_labels(const std::filesystem::path& path, const std::map<std::string, Label>& labels) {
  std::string out;
  for (const auto& [id, l] : labels) out += id + "\t" + to_string(l) + "\n";
  write_text_file(path, out);
}

void attach_labels(ScoreSet& set, const std::map<std::string, Label>& labels) {
  set.labels.clear();
  for (const auto& e : set.entries) {
    auto it = labels.find(e.utt_id);
    if (it == labels.end()) throw DataError("no label for " + e.utt_id);
    set.labels.emplace(e.utt_id, it->second);
  }
}

}  // namespace antispoof
