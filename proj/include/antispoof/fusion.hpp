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

struct FusionModel {
  double bias = 0.0;
  std::vector<std::string> systems;
  std::vector<double> weights;  // one per system, may be negative

  /// Throws DataError unless sizes agree and some weight is nonzero.
  void validate() const;
};

/// First line "bias<TAB>value", then "system<TAB>weight" lines.
void write_fusion_model(const std::filesystem::path& path, const FusionModel& model);
FusionModel read_fusion_model(const std::filesystem::path& path);

/// bias + sum_k w_k s_k per utterance, in the order of the first system.
/// Labels are taken from the first system. Throws DataError on id mismatch.
ScoreSet fuse_weighted(const std::vector<ScoreSet>& systems, const FusionModel& model);

struct FusionFitOptions {
  double grad_tolerance = 1e-8;  // infinity norm
  int max_iterations = 10000;
};

struct FusionFit {
  FusionModel model;
  std::vector<double> objective;  // class balanced logistic loss in nats, per iterate
  int iterations = 0;
  bool converged = false;
};

/// Minimizes 1/2 mean_bona log(1 + e^-z) + 1/2 mean_spoof log(1 + e^z) with
/// z = b + w . s, by damped Newton steps. scores is [systems][trials];
/// labels[j] is 1 for bonafide, 0 for spoof.
FusionFit fit_logistic_fusion(const std::vector<std::vector<double>>& scores, std::span<const int> labels,
                              std::vector<std::string> names = {}, const FusionFitOptions& opts = {});

/// Convenience overload over aligned labeled ScoreSets.
FusionFit fit_logistic_fusion(const std::vector<ScoreSet>& systems, std::vector<std::string> names,
                              const FusionFitOptions& opts = {});

inline constexpr double kPartialFakeThreshold = 0.775;

/// Utterances with pf_prob > tau get the minimum score of the fused set.
ScoreSet partial_fake_override(const ScoreSet& fused, const ScoreSet& pf_prob, double tau = kPartialFakeThreshold);

}  // namespace antispoof
