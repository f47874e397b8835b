// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "antispoof/error.hpp"
#include "antispoof/text_util.hpp"

namespace antispoof {

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

std::string file_safe(const std::string& name) {
  std::string out = name;
  for (auto& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  }
  return out;
}

}  // namespace

void ScorePanel::validate() const {
  if (systems.empty()) throw DataError("score panel is empty");
  if (names.size() != systems.size()) throw DataError("score panel: name count differs from system count");
  const auto ref = systems[0].by_id();
  for (std::size_t k = 1; k < systems.size(); ++k) {
    const auto m = systems[k].by_id();
    if (m.size() != ref.size() ||
        !std::equal(m.begin(), m.end(), ref.begin(), [](const auto& a, const auto& b) { return a.first == b.first; }))
      throw DataError("score panel: " + names[k] + " covers a different trial set than " + names[0]);
  }
}

std::vector<double> ScorePanel::aligned(std::size_t k) const {
  if (k == 0) return systems[0].scores();
  const auto m = systems[k].by_id();
  std::vector<double> out;
  out.reserve(m.size());
  for (const auto& e : systems[0].entries) out.push_back(m.at(e.utt_id));
  return out;
}

std::vector<std::string> ScorePanel::ids() const {
  std::vector<std::string> out;
  for (const auto& e : systems.at(0).entries) out.push_back(e.utt_id);
  return out;
}

std::vector<std::size_t> histogram(std::span<const double> values, std::size_t n_bins, double lo, double hi) {
  if (n_bins < 1) throw std::invalid_argument("histogram: need at least one bin");
  if (!(lo < hi)) throw std::invalid_argument("histogram: empty range");
  std::vector<std::size_t> counts(n_bins, 0);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (double v : values) {
    double pos = std::floor((v - lo) / width);
    if (!(pos >= 0.0)) pos = 0.0;  // also catches NaN
    auto bin = static_cast<std::size_t>(std::min(pos, static_cast<double>(n_bins - 1)));
    ++counts[bin];
  }
  return counts;
}

std::vector<std::size_t> histogram(const ScoreSet& s, std::size_t n_bins, double lo, double hi) {
  const auto v = s.scores();
  return histogram(v, n_bins, lo, hi);
}

ClassFilter parse_class_filter(const std::string& text) {
  if (text == "all") return ClassFilter::kAll;
  if (text == "bonafide") return ClassFilter::kBonafide;
  if (text == "spoof") return ClassFilter::kSpoof;
  throw UsageError("class filter must be all, bonafide or spoof");
}

std::vector<std::vector<double>> pairwise_correlation(const ScorePanel& panel, ClassFilter filter, Correlation kind) {
  panel.validate();
  const auto ids = panel.ids();
  std::vector<bool> keep(ids.size(), true);
  if (filter != ClassFilter::kAll) {
    const Label want = filter == ClassFilter::kBonafide ? Label::kBonafide : Label::kSpoof;
    for (std::size_t j = 0; j < ids.size(); ++j) {
      auto it = panel.labels.find(ids[j]);
      if (it == panel.labels.end()) throw DataError("no label for " + ids[j]);
      keep[j] = it->second == want;
    }
  }
  const std::size_t n = panel.systems.size();
  std::vector<std::vector<double>> cols(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto all = panel.aligned(k);
    for (std::size_t j = 0; j < all.size(); ++j) {
      if (keep[j]) cols[k].push_back(all[j]);
    }
  }
  const std::size_t m = cols[0].size();
  if (m < 2) throw DataError("pairwise_correlation: fewer than 2 trials after class filtering");
  for (std::size_t k = 0; k < n; ++k) {
    if (kind == Correlation::kSpearman) cols[k] = ranks(cols[k]);
    const double mean = std::accumulate(cols[k].begin(), cols[k].end(), 0.0) / static_cast<double>(m);
    double ss = 0.0;
    for (auto& v : cols[k]) {
      v -= mean;
      ss += v * v;
    }
    if (!(ss > 0.0)) throw DataError("pairwise_correlation: system " + panel.names[k] + " has zero variance");
    const double inv = 1.0 / std::sqrt(ss);
    for (auto& v : cols[k]) v *= inv;
  }
  std::vector<std::vector<double>> r(n, std::vector<double>(n, 1.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      double d = 0.0;
      for (std::size_t j = 0; j < m; ++j) d += cols[a][j] * cols[b][j];
      d = std::clamp(d, -1.0, 1.0);
      r[a][b] = r[b][a] = d;
    }
  }
  return r;
}

double polarization_index(std::span<const double> scores) {
  if (scores.empty()) return 0.0;
  std::size_t hits = 0;
  for (double s : scores) {
    if (std::min(std::abs(s), std::abs(1.0 - s)) <= kPolarizationBand) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

double polarization_index(const ScoreSet& s) {
  const auto v = s.scores();
  return polarization_index(v);
}

std::vector<std::filesystem::path> export_panel_csv(const ScorePanel& panel, const std::filesystem::path& out_dir,
                                                    std::size_t n_bins) {
  panel.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
  const auto ids = panel.ids();
  auto label_of = [&](const std::string& id) {
    auto it = panel.labels.find(id);
    return it == panel.labels.end() ? std::string("unknown") : to_string(it->second);
  };
  std::vector<std::vector<double>> cols;
  for (std::size_t k = 0; k < panel.systems.size(); ++k) cols.push_back(panel.aligned(k));

  std::vector<std::filesystem::path> written;
  for (std::size_t a = 0; a < cols.size(); ++a) {
    for (std::size_t b = a + 1; b < cols.size(); ++b) {
      std::string text = "utt_id,score_a,score_b,label\n";
      for (std::size_t j = 0; j < ids.size(); ++j)
        text += ids[j] + "," + format_double(cols[a][j]) + "," + format_double(cols[b][j]) + "," + label_of(ids[j]) + "\n";
      auto path = out_dir / ("pair_" + file_safe(panel.names[a]) + "__" + file_safe(panel.names[b]) + ".csv");
      write_text_file(path, text);
      written.push_back(path);
    }
  }
  for (std::size_t k = 0; k < cols.size(); ++k) {
    auto [mn, mx] = std::minmax_element(cols[k].begin(), cols[k].end());
    double lo = *mn, hi = *mx;
    if (!(lo < hi)) {
      lo -= 0.5;
      hi += 0.5;
    }
    std::vector<double> bona, spoof;
    for (std::size_t j = 0; j < ids.size(); ++j) {
      const auto l = label_of(ids[j]);
      if (l == "bonafide") bona.push_back(cols[k][j]);
      if (l == "spoof") spoof.push_back(cols[k][j]);
    }
    const auto all_c = histogram(cols[k], n_bins, lo, hi);
    const auto b_c = histogram(bona, n_bins, lo, hi);
    const auto s_c = histogram(spoof, n_bins, lo, hi);
    const auto edge = [&](std::size_t i) {
      return i == n_bins ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
    };
    std::string text = "bin_lo,bin_hi,count_all,count_bonafide,count_spoof\n";
    for (std::size_t i = 0; i < n_bins; ++i) {
      text += format_double(edge(i)) + "," + format_double(edge(i + 1)) + "," +
              std::to_string(all_c[i]) + "," + std::to_string(b_c[i]) + "," + std::to_string(s_c[i]) + "\n";
    }
    auto path = out_dir / ("hist_" + file_safe(panel.names[k]) + ".csv");
    write_text_file(path, text);
    written.push_back(path);
  }
  return written;
}

}  // namespace antispoof
