// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <span>
#include <vector>

#include "antispoof/scores.hpp"

namespace antispoof {

/// (s - min) / (max - min). Throws DataError on fewer than 2 entries or a
/// constant score set.
ScoreSet minmax_normalize(const ScoreSet& s);

struct OperatingPoint {
  double threshold = 0.0;
  double far = 0.0;  // fraction of spoof with score >= threshold
  double frr = 0.0;  // fraction of bonafide with score < threshold
};

/// Thresholds at the minimum score, every midpoint between adjacent
/// distinct scores, and just above the maximum.
std::vector<OperatingPoint> operating_points(std::span<const double> bonafide, std::span<const double> spoof);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Crossing of FAR and FRR, linearly interpolated between the bracketing
/// operating points. Throws DataError when a class is empty.
EerResult compute_eer(std::span<const double> bonafide, std::span<const double> spoof);
EerResult compute_eer(const ScoreSet& s);

/// 0.4 * eer_r1 + 0.6 * eer_r2.
double weer(double eer_r1, double eer_r2);

/// Cost of log-likelihood ratio in bits.
double cllr(std::span<const double> bonafide, std::span<const double> spoof);
double cllr(const ScoreSet& s);

}  // namespace antispoof
