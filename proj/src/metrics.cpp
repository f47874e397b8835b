// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "antispoof/error.hpp"

namespace antispoof {

namespace {

void require_both(std::span<const double> bonafide, std::span<const double> spoof, const char* what) {
  if (bonafide.empty() || spoof.empty())
    throw DataError(std::string(what) + ": need at least one bonafide and one spoof trial");
}

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

ScoreSet minmax_normalize(const ScoreSet& s) {
  if (s.size() < 2) throw DataError("minmax_normalize: need at least 2 scores");
  auto [lo, hi] = std::minmax_element(s.entries.begin(), s.entries.end(),
                                      [](const auto& a, const auto& b) { return a.score < b.score; });
  const double mn = lo->score, mx = hi->score;
  if (!(mx > mn)) throw DataError("minmax_normalize: constant score set");
  ScoreSet out = s;
  for (auto& e : out.entries) {
    if (e.score == mn) {
      e.score = 0.0;
    } else if (e.score == mx) {
      e.score = 1.0;
    } else {
      e.score = (e.score - mn) / (mx - mn);
    }
  }
  return out;
}

std::vector<OperatingPoint> operating_points(std::span<const double> bonafide, std::span<const double> spoof) {
  require_both(bonafide, spoof, "operating_points");
  std::vector<double> b(bonafide.begin(), bonafide.end()), s(spoof.begin(), spoof.end());
  std::sort(b.begin(), b.end());
  std::sort(s.begin(), s.end());
  std::vector<double> all;
  all.reserve(b.size() + s.size());
  std::merge(b.begin(), b.end(), s.begin(), s.end(), std::back_inserter(all));
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<double> thresholds;
  thresholds.reserve(all.size() + 1);
  thresholds.push_back(all.front());
  for (std::size_t i = 1; i < all.size(); ++i) thresholds.push_back(all[i - 1] + (all[i] - all[i - 1]) / 2.0);
  thresholds.push_back(std::nextafter(all.back(), std::numeric_limits<double>::infinity()));

  const double nb = static_cast<double>(b.size()), ns = static_cast<double>(s.size());
  std::vector<OperatingPoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto below_b = std::lower_bound(b.begin(), b.end(), t) - b.begin();
    const auto below_s = std::lower_bound(s.begin(), s.end(), t) - s.begin();
    out.push_back({t, (ns - static_cast<double>(below_s)) / ns, static_cast<double>(below_b) / nb});
  }
  return out;
}

EerResult compute_eer(std::span<const double> bonafide, std::span<const double> spoof) {
  const auto pts = operating_points(bonafide, spoof);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    if (p.frr < p.far) continue;
    if (p.frr == p.far || i == 0) return {p.frr, p.threshold};
    const auto& q = pts[i - 1];
    const double d0 = q.far - q.frr;
    const double d1 = p.far - p.frr;
    const double a = d0 / (d0 - d1);
    return {q.frr + a * (p.frr - q.frr), q.threshold + a * (p.threshold - q.threshold)};
  }
  // Unreachable: the last point has FAR = 0 and FRR = 1.
  return {pts.back().frr, pts.back().threshold};
}

EerResult compute_eer(const ScoreSet& s) {
  std::vector<double> b, sp;
  s.split(b, sp);
  return compute_eer(b, sp);
}

double weer(double eer_r1, double eer_r2) {
  if (!(eer_r1 >= 0.0 && eer_r1 <= 1.0 && eer_r2 >= 0.0 && eer_r2 <= 1.0))
    throw std::invalid_argument("weer: inputs must be in [0, 1]");
  return 0.4 * eer_r1 + 0.6 * eer_r2;
}

double cllr(std::span<const double> bonafide, std::span<const double> spoof) {
  require_both(bonafide, spoof, "cllr");
  double cb = 0.0, cs = 0.0;
  for (double v : bonafide) cb += softplus(-v);
  for (double v : spoof) cs += softplus(v);
  return 0.5 * (cb / static_cast<double>(bonafide.size()) + cs / static_cast<double>(spoof.size())) / std::log(2.0);
}

double cllr(const ScoreSet& s) {
  std::vector<double> b, sp;
  s.split(b, sp);
  return cllr(b, sp);
}

}  // namespace antispoof
