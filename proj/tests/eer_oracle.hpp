// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace antispoof::testing {

struct OracleEer {
  double eer = 0.0;
  bool attained = false;  // some threshold gives FAR == FRR exactly
};

// Brute force: every midpoint threshold plus one below and one above all
// scores, rates by direct counting, linear interpolation at the crossing.
inline OracleEer brute_force_eer(const std::vector<double>& bona, const std::vector<double>& spoof) {
  std::vector<double> all = bona;
  all.insert(all.end(), spoof.begin(), spoof.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> th{all.front()};
  for (std::size_t i = 0; i + 1 < all.size(); ++i) th.push_back(all[i] + (all[i + 1] - all[i]) / 2.0);
  th.push_back(all.back() + 1.0);

  std::vector<double> far, frr;
  for (double t : th) {
    std::size_t fa = 0, fr = 0;
    for (double s : spoof) fa += s >= t ? 1 : 0;
    for (double b : bona) fr += b < t ? 1 : 0;
    far.push_back(static_cast<double>(fa) / static_cast<double>(spoof.size()));
    frr.push_back(static_cast<double>(fr) / static_cast<double>(bona.size()));
  }
  for (std::size_t i = 0; i < th.size(); ++i) {
    if (far[i] == frr[i]) return {far[i], true};
    if (frr[i] > far[i]) {
      if (i == 0) return {frr[i], false};
      const double g0 = far[i - 1] - frr[i - 1], g1 = far[i] - frr[i];
      const double a = g0 / (g0 - g1);
      return {frr[i - 1] + a * (frr[i] - frr[i - 1]), false};
    }
  }
  return {1.0, false};
}

}  // namespace antispoof::testing
