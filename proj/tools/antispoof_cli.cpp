// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include <CLI11.hpp>
#include <iostream>

#include "antispoof/analysis.hpp"
#include "antispoof/error.hpp"
#include "antispoof/fusion.hpp"
#include "antispoof/metrics.hpp"
#include "antispoof/pipeline.hpp"
#include "antispoof/text_util.hpp"

namespace {

using namespace antispoof;
namespace fs = std::filesystem;

std::vector<std::string> default_names(const std::vector<std::string>& names, std::size_t n) {
  if (!names.empty()) {
    if (names.size() != n) throw UsageError("--name must be given once per --scores file");
    return names;
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("system" + std::to_string(i + 1));
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Spoofed speech detection toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::string config;
  std::string stages = "all";
  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--config", config, "Experiment config file");
    if (required) opt->required();
    return opt;
  };

  std::map<CLI::App*, Stage> stage_of;
  for (Stage s : {Stage::kGenCorpus, Stage::kExtract, Stage::kTrain, Stage::kScore}) {
    const std::string name = to_string(s);
    auto* sub = app.add_subcommand(name, "Run the " + name + " stage of an experiment");
    add_config(sub, true);
    stage_of[sub] = s;
  }

  auto* run_cmd = app.add_subcommand("run", "Run several pipeline stages in order");
  add_config(run_cmd, true);
  run_cmd->add_option("--stages", stages, "'all' or a comma separated stage list");

  // Score-level tools work on a config or on explicit files.
  std::vector<std::string> score_files, names;
  std::string labels_file, model_file, out_path, pf_file;
  double tau = kPartialFakeThreshold;
  bool negate = false;
  bool no_normalize = false;
  std::size_t bins = 20;

  auto* fit_cmd = app.add_subcommand("fuse-fit", "Fit logistic-regression fusion weights on calibration scores");
  add_config(fit_cmd, false);
  fit_cmd->add_option("--scores", score_files, "Score file per system (repeatable)");
  fit_cmd->add_option("--name", names, "System name per score file (repeatable)");
  fit_cmd->add_option("--labels", labels_file, "Label file");
  fit_cmd->add_option("--out", out_path, "Fusion model output");
  fit_cmd->add_flag("--raw", no_normalize, "Skip min-max normalization of the inputs");

  auto* apply_cmd = app.add_subcommand("fuse-apply", "Apply a fusion model to score files");
  add_config(apply_cmd, false);
  apply_cmd->add_option("--model", model_file, "Fusion model file");
  apply_cmd->add_option("--scores", score_files, "Score file per system, in model order (repeatable)");
  apply_cmd->add_option("--out", out_path, "Fused score output");
  apply_cmd->add_option("--partial-fake", pf_file, "Partial-fake probability file (utt_id<TAB>prob)");
  apply_cmd->add_option("--tau", tau, "Partial-fake threshold");
  apply_cmd->add_flag("--raw", no_normalize, "Skip min-max normalization of the inputs");

  auto* eval_cmd = app.add_subcommand("eval", "EER and Cllr of score files");
  add_config(eval_cmd, false);
  eval_cmd->add_option("--scores", score_files, "Score file (repeatable)");
  eval_cmd->add_option("--labels", labels_file, "Label file");
  eval_cmd->add_flag("--negate", negate, "Scores are higher-means-spoof");

  auto* analyze_cmd = app.add_subcommand("analyze", "Score distribution diagnostics");
  add_config(analyze_cmd, false);
  analyze_cmd->add_option("--scores", score_files, "Score file per system (repeatable)");
  analyze_cmd->add_option("--name", names, "System name per score file (repeatable)");
  analyze_cmd->add_option("--labels", labels_file, "Label file");
  analyze_cmd->add_option("--out-dir", out_path, "Output directory");
  analyze_cmd->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);

  std::string manifest_in;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> codecs;
  bool skip_normalized = false;
  auto* compose_cmd = app.add_subcommand("compose", "Expand a manifest with codec and normalized variants");
  compose_cmd->add_option("--manifest", manifest_in, "Input manifest")->required();
  compose_cmd->add_option("--out", out_path, "Output manifest")->required();
  auto* count_opt = compose_cmd->add_option("--count", count, "Entries to sample without replacement");
  compose_cmd->add_option("--seed", seed, "Sampling seed");
  compose_cmd->add_option("--codec", codecs, "Available codec (repeatable, default alaw and mulaw)");
  compose_cmd->add_flag("--no-normalized", skip_normalized, "Omit the level-normalized variant");

  double r1 = 0.0, r2 = 0.0;
  auto* weer_cmd = app.add_subcommand("weer", "Weighted EER of two evaluation rounds");
  weer_cmd->add_option("--r1", r1, "Round 1 EER (fraction)")->required();
  weer_cmd->add_option("--r2", r2, "Round 2 EER (fraction)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto pipeline = [&] { return Pipeline(load_experiment(config), &std::cerr); };

  for (auto& [sub, stage] : stage_of) {
    if (sub->parsed()) {
      auto p = pipeline();
      p.run_stage(stage);
      return 0;
    }
  }
  if (run_cmd->parsed()) {
    auto p = pipeline();
    p.run(parse_stages(stages));
    return 0;
  }
  auto config_or_files = [&](CLI::App* sub) {
    if (!config.empty() && !score_files.empty()) throw UsageError(sub->get_name() + ": use --config or --scores, not both");
    if (config.empty() && score_files.empty()) throw UsageError(sub->get_name() + ": need --config or --scores");
    return !config.empty();
  };

  if (fit_cmd->parsed()) {
    if (config_or_files(fit_cmd)) {
      pipeline().run_stage(Stage::kFuseFit);
      return 0;
    }
    if (labels_file.empty() || out_path.empty()) throw UsageError("fuse-fit: --labels and --out are required");
    const auto labels = read_labels(labels_file);
    std::vector<ScoreSet> sets;
    for (const auto& f : score_files) {
      auto s = read_scores(f);
      if (!no_normalize) s = minmax_normalize(s);
      attach_labels(s, labels);
      sets.push_back(std::move(s));
    }
    const auto fit = fit_logistic_fusion(sets, default_names(names, sets.size()));
    write_fusion_model(out_path, fit.model);
    std::cerr << "iterations " << fit.iterations << ", converged " << (fit.converged ? "yes" : "no") << "\n";
    return 0;
  }
  if (apply_cmd->parsed()) {
    if (config_or_files(apply_cmd)) {
      pipeline().run_stage(Stage::kFuseApply);
      return 0;
    }
    if (model_file.empty() || out_path.empty()) throw UsageError("fuse-apply: --model and --out are required");
    const auto model = read_fusion_model(model_file);
    std::vector<ScoreSet> sets;
    for (const auto& f : score_files) {
      auto s = read_scores(f);
      sets.push_back(no_normalize ? s : minmax_normalize(s));
    }
    auto fused = fuse_weighted(sets, model);
    if (!pf_file.empty()) fused = partial_fake_override(fused, read_scores(pf_file), tau);
    write_scores(out_path, fused);
    return 0;
  }
  if (eval_cmd->parsed()) {
    if (config_or_files(eval_cmd)) {
      pipeline().run_stage(Stage::kEval);
      return 0;
    }
    if (labels_file.empty()) throw UsageError("eval: --labels is required");
    const auto labels = read_labels(labels_file);
    std::cout << "scores\teer\tthreshold\tcllr\n";
    for (const auto& f : score_files) {
      auto s = read_scores(f, negate);
      attach_labels(s, labels);
      const auto r = compute_eer(s);
      std::cout << f << '\t' << format_double(r.eer) << '\t' << format_double(r.threshold) << '\t'
                << format_double(cllr(s)) << '\n';
    }
    return 0;
  }
  if (analyze_cmd->parsed()) {
    if (config_or_files(analyze_cmd)) {
      pipeline().run_stage(Stage::kAnalyze);
      return 0;
    }
    if (labels_file.empty() || out_path.empty()) throw UsageError("analyze: --labels and --out-dir are required");
    ScorePanel panel;
    panel.labels = read_labels(labels_file);
    panel.names = default_names(names, score_files.size());
    for (const auto& f : score_files) panel.systems.push_back(minmax_normalize(read_scores(f)));
    for (const auto& p : export_panel_csv(panel, out_path, bins)) std::cout << p.string() << '\n';
    for (std::size_t k = 0; k < panel.systems.size(); ++k)
      std::cout << panel.names[k] << "\tpolarization\t" << format_double(polarization_index(panel.systems[k])) << '\n';
    return 0;
  }
  if (compose_cmd->parsed()) {
    CompositionSpec spec;
    spec.available_codecs = codecs.empty() ? std::vector<std::string>{"alaw", "mulaw"} : codecs;
    spec.include_normalized = !skip_normalized;
    spec.seed = seed;
    if (count_opt->count() > 0) spec.sample_count = count;
    const auto result = compose_corpus(read_manifest(manifest_in), spec);
    write_manifest(out_path, result.manifest);
    std::cerr << "multiplier " << result.multiplier << ", " << result.manifest.entries.size() << " entries\n";
    return 0;
  }
  if (weer_cmd->parsed()) {
    std::cout << format_double(weer(r1, r2)) << '\n';
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const antispoof::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const antispoof::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
