// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "antispoof/scores.hpp"

namespace antispoof {

/// Named score sets over one common trial set.
struct ScorePanel {
  std::vector<std::string> names;
  std::vector<ScoreSet> systems;
  std::map<std::string, Label> labels;

  /// Throws DataError when empty, mismatched in size, or when id sets differ.
  void validate() const;
  /// Scores of system k in the order of the first system.
  std::vector<double> aligned(std::size_t k) const;
  std::vector<std::string> ids() const;
};

/// Equal-width bins over [lo, hi]; out-of-range values go to the edge bins
/// and hi itself lands in the last bin.
std::vector<std::size_t> histogram(std::span<const double> values, std::size_t n_bins, double lo, double hi);
std::vector<std::size_t> histogram(const ScoreSet& s, std::size_t n_bins, double lo, double hi);

enum class ClassFilter { kAll, kBonafide, kSpoof };
enum class Correlation { kPearson, kSpearman };

ClassFilter parse_class_filter(const std::string& text);

/// Symmetric matrix with unit diagonal. Throws DataError on fewer than 2
/// trials after filtering or when a system has zero variance.
std::vector<std::vector<double>> pairwise_correlation(const ScorePanel& panel, ClassFilter filter,
                                                      Correlation kind = Correlation::kPearson);

inline constexpr double kPolarizationBand = 0.05;

/// Fraction of scores within kPolarizationBand of 0 or 1.
double polarization_index(std::span<const double> scores);
double polarization_index(const ScoreSet& s);

/// Writes pair_<a>__<b>.csv for every unordered system pair and
/// hist_<name>.csv per system. Returns the written paths.
std::vector<std::filesystem::path> export_panel_csv(const ScorePanel& panel, const std::filesystem::path& out_dir,
                                                    std::size_t n_bins = 20);

}  // namespace antispoof
