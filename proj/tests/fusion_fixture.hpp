// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace antispoof::testing {

struct TwoViewCorpus {
  std::vector<std::vector<double>> rows;  // [system][trial]
  std::vector<int> labels;                // 1 bonafide, 0 spoof
};

// Two independent noisy views of one binary label: view k ~ N(+-mu_k, 1).
// Each view's true LLR is 2 * mu_k * x, so the raw scores are miscalibrated
// unless mu_k == 0.5.
inline TwoViewCorpus two_view_corpus(std::size_t n, double mu1, double mu2, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  TwoViewCorpus c;
  c.rows.assign(2, {});
  for (std::size_t j = 0; j < n; ++j) {
    const int y = j % 2 == 0 ? 1 : 0;
    const double sign = y ? 1.0 : -1.0;
    c.labels.push_back(y);
    c.rows[0].push_back(sign * mu1 + noise(rng));
    c.rows[1].push_back(sign * mu2 + noise(rng));
  }
  return c;
}

inline void split_by_label(const std::vector<double>& row, const std::vector<int>& labels, std::vector<double>& bona,
                           std::vector<double>& spoof) {
  bona.clear();
  spoof.clear();
  for (std::size_t j = 0; j < row.size(); ++j) (labels[j] ? bona : spoof).push_back(row[j]);
}

}  // namespace antispoof::testing
