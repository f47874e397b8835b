// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "antispoof/augment.hpp"
#include "antispoof/config.hpp"
#include "antispoof/dsp.hpp"
#include "antispoof/losses.hpp"
#include "antispoof/synth.hpp"

namespace antispoof {

struct SystemConfig {
  std::string name;
  FeatureKind feature = FeatureKind::kStft1024;
  LossKind loss = LossKind::kAmSoftmax;
  std::size_t embedding_dim = 512;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  IniConfig raw;
  std::filesystem::path work_dir;

  // [corpus]
  CorpusSpec corpus;
  std::string train_split = "train";
  std::string dev_split = "dev";
  std::string cal_split = "cal";
  std::string eval_split = "eval";

  // [train]
  int epochs = 10;
  std::size_t batch_size = 32;
  ChunkRange chunk{500, 700};
  std::size_t eval_frames = 600;
  double base_lr = 3e-4;
  int lr_step = 10;
  double lr_gamma = 0.5;
  double width_scale = 1.0;
  double dropout = 0.5;
  bool augment = false;
  LossConfig loss;

  // [augment], [codecs]
  AugmentPolicy policy;
  ExternalCodecHooks hooks;

  std::vector<SystemConfig> systems;

  // [fusion]
  std::vector<std::string> fusion_systems;
  std::optional<std::filesystem::path> partial_fake_scores;
  double partial_fake_tau = 0.775;

  // [analysis]
  std::size_t histogram_bins = 20;
};

/// Relative paths resolve against base_dir.
ExperimentConfig parse_experiment(const IniConfig& ini, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment(const std::filesystem::path& path);

enum class Stage { kGenCorpus, kExtract, kTrain, kScore, kFuseFit, kFuseApply, kEval, kAnalyze };

const std::vector<Stage>& all_stages();
std::string to_string(Stage s);
Stage parse_stage(const std::string& name);
/// "all" or a comma separated list; returned in pipeline order.
std::vector<Stage> parse_stages(const std::string& text);

/// Runs stages against a work directory. Every stage writes a stamp file
/// holding its hash, derived from the relevant config sections and the
/// hashes of its inputs. A stage whose stamp matches is skipped; a stage
/// whose inputs are missing or stale fails with DataError.
class Pipeline {
 public:
  Pipeline(ExperimentConfig cfg, std::ostream* log = nullptr);

  void run(const std::vector<Stage>& stages);
  /// Returns true when the stage ran, false when skipped as up to date.
  bool run_stage(Stage s);

  std::string stage_hash(Stage s) const;
  std::string system_hash(Stage s, const std::string& system) const;

  std::filesystem::path corpus_dir() const;
  std::filesystem::path feature_dir(FeatureKind kind) const;
  std::filesystem::path system_dir(const std::string& system) const;
  std::filesystem::path scores_path(const std::string& system, const std::string& split) const;
  std::filesystem::path fusion_dir() const;
  std::filesystem::path report_dir() const;
  std::filesystem::path analysis_dir() const;

  const ExperimentConfig& config() const { return cfg_; }

 private:
  void gen_corpus();
  void extract();
  void train(const SystemConfig& sys);
  void score(const SystemConfig& sys);
  void fuse_fit();
  void fuse_apply();
  void evaluate();
  void analyze();

  bool stamp_matches(const std::filesystem::path& stamp, const std::string& hash) const;
  void write_stamp(const std::filesystem::path& stamp, const std::string& hash, const std::string& extra = "") const;
  void require_stamp(const std::filesystem::path& stamp, const std::string& hash, const std::string& what) const;
  std::vector<FeatureKind> feature_kinds() const;
  const SystemConfig& system(const std::string& name) const;
  std::vector<std::string> fused_systems() const;
  void note(const std::string& msg) const;

  ExperimentConfig cfg_;
  std::ostream* log_;
};

}  // namespace antispoof
