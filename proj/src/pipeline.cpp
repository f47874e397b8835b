// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "antispoof/analysis.hpp"
#include "antispoof/binary_io.hpp"
#include "antispoof/error.hpp"
#include "antispoof/fusion.hpp"
#include "antispoof/hash.hpp"
#include "antispoof/metrics.hpp"
#include "antispoof/nn/checkpoint.hpp"
#include "antispoof/text_util.hpp"
#include "antispoof/train.hpp"

namespace antispoof {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kCorpusKeys{"seed",          "train_per_class", "dev_per_class",  "cal_per_class",
                                           "eval_per_class", "train_families",  "dev_families",   "cal_families",
                                           "eval_families",  "pool_items",      "rir_items"};
const std::vector<std::string> kTrainKeys{"epochs",     "batch_size", "seed",   "chunk_min",     "chunk_max",
                                          "eval_frames", "base_lr",    "lr_step", "lr_gamma",      "width_scale",
                                          "dropout",    "augment",    "s",       "m",             "center_lambda",
                                          "center_alpha"};
const std::vector<std::string> kAugmentKeys{"weight_clean",      "weight_reverb", "weight_noise",     "weight_music",
                                            "weight_babble",     "noise_snr",     "music_snr",        "babble_snr",
                                            "speed_probability", "speed_factors", "codec_probability", "codecs",
                                            "normalize"};
const std::vector<std::string> kSystemKeys{"feature", "loss", "embedding_dim", "seed"};
const std::vector<std::string> kFusionKeys{"systems", "partial_fake_scores", "partial_fake_tau"};

SnrRange parse_snr(const IniConfig& ini, const std::string& key, SnrRange fallback) {
  const auto v = ini.get_list("augment", key, {});
  if (v.empty()) return fallback;
  if (v.size() != 2) throw UsageError("[augment] " + key + " must be 'lo, hi'");
  try {
    SnrRange r{parse_double(v[0]), parse_double(v[1])};
    if (!(r.lo <= r.hi)) throw UsageError("[augment] " + key + ": lo must not exceed hi");
    return r;
  } catch (const DataError&) {
    throw UsageError("[augment] " + key + " must be numeric");
  }
}

std::string hash_of(const std::string& text) { return hex64(fnv1a64(text)); }

std::string split_families_key(const std::string& split) { return split + "_families"; }

template <typename T>
T checked(const std::string& what, T value, bool ok) {
  if (!ok) throw UsageError("invalid value for " + what);
  return value;
}

}  // namespace

ExperimentConfig parse_experiment(const IniConfig& ini, const fs::path& base_dir) {
  ExperimentConfig cfg;
  cfg.raw = ini;
  for (const auto& sec : ini.sections()) {
    static const std::set<std::string> known{"", "paths", "corpus", "train", "augment", "codecs", "fusion", "analysis"};
    if (!known.count(sec) && sec.rfind("system.", 0) != 0) throw UsageError("unknown config section [" + sec + "]");
  }
  if (!ini.section("").empty()) throw UsageError("config keys must appear inside a [section]");
  ini.check_keys("paths", {"work_dir"});
  ini.check_keys("corpus", kCorpusKeys);
  ini.check_keys("train", kTrainKeys);
  ini.check_keys("augment", kAugmentKeys);
  ini.check_keys("fusion", kFusionKeys);
  ini.check_keys("analysis", {"histogram_bins"});

  fs::path work = ini.get("paths", "work_dir", "work");
  cfg.work_dir = work.is_absolute() ? work : base_dir / work;

  const auto& fams = artifact_families();
  cfg.corpus.seed = static_cast<std::uint64_t>(ini.get_int("corpus", "seed", 1));
  cfg.corpus.pool_items_per_category = static_cast<std::size_t>(
      checked("[corpus] pool_items", ini.get_int("corpus", "pool_items", 3), ini.get_int("corpus", "pool_items", 3) >= 1));
  cfg.corpus.rir_items = static_cast<std::size_t>(
      checked("[corpus] rir_items", ini.get_int("corpus", "rir_items", 4), ini.get_int("corpus", "rir_items", 4) >= 1));
  const std::vector<std::pair<std::string, long long>> splits{
      {cfg.train_split, 200}, {cfg.dev_split, 100}, {cfg.cal_split, 100}, {cfg.eval_split, 200}};
  const auto train_fams = ini.get_list("corpus", "train_families", fams);
  for (const auto& [name, dflt] : splits) {
    const long long n = ini.get_int("corpus", name + "_per_class", dflt);
    if (n < 1) throw UsageError("[corpus] " + name + "_per_class must be >= 1");
    auto f = ini.get_list("corpus", split_families_key(name), name == cfg.eval_split ? fams : train_fams);
    for (const auto& x : f) {
      if (std::find(fams.begin(), fams.end(), x) == fams.end())
        throw UsageError("[corpus] unknown artifact family '" + x + "'");
    }
    if (f.empty()) throw UsageError("[corpus] " + split_families_key(name) + " is empty");
    cfg.corpus.splits.push_back({name, static_cast<std::size_t>(n), f});
  }

  cfg.epochs = static_cast<int>(ini.get_int("train", "epochs", 10));
  if (cfg.epochs < 0) throw UsageError("[train] epochs must be >= 0");
  const long long bs = ini.get_int("train", "batch_size", 32);
  if (bs < 1) throw UsageError("[train] batch_size must be >= 1");
  cfg.batch_size = static_cast<std::size_t>(bs);
  cfg.chunk.min_frames = static_cast<int>(ini.get_int("train", "chunk_min", 500));
  cfg.chunk.max_frames = static_cast<int>(ini.get_int("train", "chunk_max", 700));
  if (cfg.chunk.min_frames < 16 || cfg.chunk.min_frames > cfg.chunk.max_frames)
    throw UsageError("[train] need 16 <= chunk_min <= chunk_max");
  const long long ef = ini.get_int("train", "eval_frames", 600);
  if (ef < 16) throw UsageError("[train] eval_frames must be >= 16");
  cfg.eval_frames = static_cast<std::size_t>(ef);
  cfg.base_lr = ini.get_double("train", "base_lr", 3e-4);
  if (!(cfg.base_lr > 0.0)) throw UsageError("[train] base_lr must be positive");
  cfg.lr_step = static_cast<int>(ini.get_int("train", "lr_step", 10));
  if (cfg.lr_step < 1) throw UsageError("[train] lr_step must be >= 1");
  cfg.lr_gamma = ini.get_double("train", "lr_gamma", 0.5);
  cfg.width_scale = ini.get_double("train", "width_scale", 1.0);
  cfg.dropout = ini.get_double("train", "dropout", 0.5);
  cfg.augment = ini.get_bool("train", "augment", false);
  cfg.loss.s = ini.get_double("train", "s", 20.0);
  cfg.loss.m = ini.get_double("train", "m", 0.9);
  cfg.loss.center_lambda = ini.get_double("train", "center_lambda", 0.05);
  cfg.loss.center_alpha = ini.get_double("train", "center_alpha", 0.5);
  try {
    cfg.loss.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("[train] ") + e.what());
  }
  const auto train_seed = static_cast<std::uint64_t>(ini.get_int("train", "seed", 1));

  auto& pol = cfg.policy;
  pol.weight_clean = ini.get_double("augment", "weight_clean", 1.0);
  pol.weight_reverb = ini.get_double("augment", "weight_reverb", 1.0);
  pol.weight_noise = ini.get_double("augment", "weight_noise", 1.0);
  pol.weight_music = ini.get_double("augment", "weight_music", 1.0);
  pol.weight_babble = ini.get_double("augment", "weight_babble", 1.0);
  pol.noise_snr = parse_snr(ini, "noise_snr", pol.noise_snr);
  pol.music_snr = parse_snr(ini, "music_snr", pol.music_snr);
  pol.babble_snr = parse_snr(ini, "babble_snr", pol.babble_snr);
  pol.speed_probability = ini.get_double("augment", "speed_probability", 0.0);
  pol.codec_probability = ini.get_double("augment", "codec_probability", 0.0);
  pol.normalize = ini.get_bool("augment", "normalize", false);
  if (ini.has("augment", "speed_factors")) {
    pol.speed_factors.clear();
    for (const auto& s : ini.get_list("augment", "speed_factors", {})) {
      try {
        pol.speed_factors.push_back(parse_double(s));
      } catch (const DataError&) {
        throw UsageError("[augment] speed_factors must be numeric");
      }
    }
  }
  for (const auto& [name, cmd] : ini.section("codecs")) cfg.hooks.commands[name] = cmd;
  pol.codecs = ini.get_list("augment", "codecs", pol.codecs);
  for (const auto& c : pol.codecs) {
    if (!is_native_codec(c) && !cfg.hooks.available(c))
      throw UsageError("[augment] codec '" + c + "' is neither native nor configured under [codecs]");
  }

  for (const auto& sec : ini.sections()) {
    if (sec.rfind("system.", 0) != 0) continue;
    ini.check_keys(sec, kSystemKeys);
    SystemConfig sys;
    sys.name = sec.substr(7);
    if (sys.name.empty() || sys.name.find_first_of("/\\\t ") != std::string::npos)
      throw UsageError("invalid system name in [" + sec + "]");
    try {
      sys.feature = parse_feature_kind(ini.get(sec, "feature", "stft1024"));
      sys.loss = parse_loss_kind(ini.get(sec, "loss", "am_softmax"));
    } catch (const std::exception& e) {
      throw UsageError("[" + sec + "] " + e.what());
    }
    sys.embedding_dim = static_cast<std::size_t>(ini.get_int(sec, "embedding_dim", 512));
    if (sys.embedding_dim != 128 && sys.embedding_dim != 512)
      throw UsageError("[" + sec + "] embedding_dim must be 128 or 512");
    sys.seed = static_cast<std::uint64_t>(ini.get_int(sec, "seed", static_cast<long long>(train_seed)));
    cfg.systems.push_back(sys);
  }

  cfg.fusion_systems = ini.get_list("fusion", "systems", {});
  for (const auto& name : cfg.fusion_systems) {
    if (std::none_of(cfg.systems.begin(), cfg.systems.end(), [&](const auto& s) { return s.name == name; }))
      throw UsageError("[fusion] unknown system '" + name + "'");
  }
  if (ini.has("fusion", "partial_fake_scores")) {
    fs::path p = ini.get("fusion", "partial_fake_scores", "");
    cfg.partial_fake_scores = p.is_absolute() ? p : base_dir / p;
  }
  cfg.partial_fake_tau = ini.get_double("fusion", "partial_fake_tau", 0.775);
  const long long bins = ini.get_int("analysis", "histogram_bins", 20);
  if (bins < 1) throw UsageError("[analysis] histogram_bins must be >= 1");
  cfg.histogram_bins = static_cast<std::size_t>(bins);
  return cfg;
}

ExperimentConfig load_experiment(const fs::path& path) {
  return parse_experiment(IniConfig::load(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> kAll{Stage::kGenCorpus, Stage::kExtract,   Stage::kTrain, Stage::kScore,
                                       Stage::kFuseFit,   Stage::kFuseApply, Stage::kEval,  Stage::kAnalyze};
  return kAll;
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::kGenCorpus: return "gen-corpus";
    case Stage::kExtract: return "extract";
    case Stage::kTrain: return "train";
    case Stage::kScore: return "score";
    case Stage::kFuseFit: return "fuse-fit";
    case Stage::kFuseApply: return "fuse-apply";
    case Stage::kEval: return "eval";
    case Stage::kAnalyze: return "analyze";
  }
  return "?";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : all_stages()) {
    if (to_string(s) == name) return s;
  }
  throw UsageError("unknown stage '" + name + "'");
}

std::vector<Stage> parse_stages(const std::string& text) {
  if (trim(text) == "all") return all_stages();
  std::set<Stage> chosen;
  for (const auto& part : split(text, ',')) {
    const auto t = trim(part);
    if (!t.empty()) chosen.insert(parse_stage(t));
  }
  if (chosen.empty()) throw UsageError("no stages selected");
  std::vector<Stage> out;
  for (Stage s : all_stages()) {
    if (chosen.count(s)) out.push_back(s);
  }
  return out;
}

Pipeline::Pipeline(ExperimentConfig cfg, std::ostream* log) : cfg_(std::move(cfg)), log_(log) {}

fs::path Pipeline::corpus_dir() const { return cfg_.work_dir / "corpus"; }
fs::path Pipeline::feature_dir(FeatureKind kind) const { return cfg_.work_dir / "features" / to_string(kind); }
fs::path Pipeline::system_dir(const std::string& system) const { return cfg_.work_dir / "systems" / system; }
fs::path Pipeline::scores_path(const std::string& system, const std::string& split) const {
  return system_dir(system) / ("scores_" + split + ".tsv");
}
fs::path Pipeline::fusion_dir() const { return cfg_.work_dir / "fusion"; }
fs::path Pipeline::report_dir() const { return cfg_.work_dir / "report"; }
fs::path Pipeline::analysis_dir() const { return cfg_.work_dir / "analysis"; }

const SystemConfig& Pipeline::system(const std::string& name) const {
  for (const auto& s : cfg_.systems) {
    if (s.name == name) return s;
  }
  throw UsageError("unknown system '" + name + "'");
}

std::vector<std::string> Pipeline::fused_systems() const {
  if (!cfg_.fusion_systems.empty()) return cfg_.fusion_systems;
  std::vector<std::string> out;
  for (const auto& s : cfg_.systems) out.push_back(s.name);
  return out;
}

std::vector<FeatureKind> Pipeline::feature_kinds() const {
  std::vector<FeatureKind> out;
  for (const auto& s : cfg_.systems) {
    if (std::find(out.begin(), out.end(), s.feature) == out.end()) out.push_back(s.feature);
  }
  return out;
}

void Pipeline::note(const std::string& msg) const {
  if (log_) *log_ << msg << '\n' << std::flush;
}

std::string Pipeline::system_hash(Stage s, const std::string& name) const {
  const auto& sys = system(name);
  const auto& ini = cfg_.raw;
  switch (s) {
    case Stage::kExtract:
      return hash_of("extract|" + to_string(sys.feature) + "|" + stage_hash(Stage::kGenCorpus));
    case Stage::kTrain:
      return hash_of("train|" + name + "|" + ini.canonical("train") + ini.canonical("augment") +
                     ini.canonical("codecs") + ini.canonical("system." + name) + "|" +
                     system_hash(Stage::kExtract, name));
    case Stage::kScore:
      return hash_of("score|" + system_hash(Stage::kTrain, name));
    default:
      throw std::logic_error("system_hash: stage " + to_string(s) + " is not per system");
  }
}

std::string Pipeline::stage_hash(Stage s) const {
  const auto& ini = cfg_.raw;
  auto all_systems = [&](Stage st) {
    std::string acc;
    for (const auto& sys : cfg_.systems) acc += sys.name + ":" + system_hash(st, sys.name) + ";";
    return acc;
  };
  switch (s) {
    case Stage::kGenCorpus:
      return hash_of("gen-corpus|" + ini.canonical("corpus"));
    case Stage::kExtract:
    case Stage::kTrain:
    case Stage::kScore:
      return hash_of(to_string(s) + "|" + all_systems(s));
    case Stage::kFuseFit: {
      std::string acc = "fuse-fit|" + ini.canonical("fusion");
      for (const auto& n : fused_systems()) acc += n + ":" + system_hash(Stage::kScore, n) + ";";
      return hash_of(acc);
    }
    case Stage::kFuseApply: {
      std::string pf;
      if (cfg_.partial_fake_scores) {
        std::error_code ec;
        pf = fs::exists(*cfg_.partial_fake_scores, ec) ? hash_of(binio::read_file(*cfg_.partial_fake_scores)) : "missing";
      }
      return hash_of("fuse-apply|" + stage_hash(Stage::kFuseFit) + "|" + pf);
    }
    case Stage::kEval:
      return hash_of("eval|" + all_systems(Stage::kScore) + "|" + stage_hash(Stage::kFuseApply));
    case Stage::kAnalyze:
      return hash_of("analyze|" + ini.canonical("analysis") + all_systems(Stage::kScore));
  }
  return {};
}

bool Pipeline::stamp_matches(const fs::path& stamp, const std::string& hash) const {
  std::error_code ec;
  if (!fs::exists(stamp, ec)) return false;
  const auto text = binio::read_file(stamp);
  return text.rfind("hash\t" + hash + "\n", 0) == 0;
}

void Pipeline::write_stamp(const fs::path& stamp, const std::string& hash, const std::string& extra) const {
  write_text_file(stamp, "hash\t" + hash + "\n" + extra);
}

void Pipeline::require_stamp(const fs::path& stamp, const std::string& hash, const std::string& what) const {
  std::error_code ec;
  if (!fs::exists(stamp, ec)) throw DataError("missing dependency artifact: " + what + " (" + stamp.string() + ")");
  if (!stamp_matches(stamp, hash))
    throw DataError("config hash mismatch: " + what + " was produced with a different configuration; rerun that stage");
}

void Pipeline::run(const std::vector<Stage>& stages) {
  for (Stage s : stages) run_stage(s);
}

bool Pipeline::run_stage(Stage s) {
  std::error_code ec;
  fs::create_directories(cfg_.work_dir, ec);
  if (ec) throw DataError("cannot create work directory " + cfg_.work_dir.string());
  switch (s) {
    case Stage::kGenCorpus: {
      const auto stamp = corpus_dir() / "gen-corpus.stamp";
      if (stamp_matches(stamp, stage_hash(s))) {
        note("[gen-corpus] up to date");
        return false;
      }
      gen_corpus();
      write_stamp(stamp, stage_hash(s), "seed\t" + std::to_string(cfg_.corpus.seed) + "\n");
      return true;
    }
    case Stage::kExtract: {
      require_stamp(corpus_dir() / "gen-corpus.stamp", stage_hash(Stage::kGenCorpus), "corpus");
      bool ran = false;
      for (auto kind : feature_kinds()) {
        const auto hash = hash_of("extract|" + to_string(kind) + "|" + stage_hash(Stage::kGenCorpus));
        const auto stamp = feature_dir(kind) / "extract.stamp";
        if (stamp_matches(stamp, hash)) {
          note("[extract] " + to_string(kind) + " up to date");
          continue;
        }
        fs::create_directories(feature_dir(kind));
        for (const auto& split : cfg_.corpus.splits) {
          const auto m = read_manifest(corpus_dir() / (split.name + ".tsv"));
          for (const auto& e : m.entries) {
            const auto audio = read_wav(corpus_dir() / e.path);
            write_spectrogram(feature_dir(kind) / (e.utt_id + ".spg"), extract_features(audio, kind));
          }
        }
        write_stamp(stamp, hash);
        note("[extract] " + to_string(kind) + " done");
        ran = true;
      }
      return ran;
    }
    case Stage::kTrain:
    case Stage::kScore: {
      if (cfg_.systems.empty()) throw UsageError("no [system.*] sections configured");
      bool ran = false;
      for (const auto& sys : cfg_.systems) {
        const auto hash = system_hash(s, sys.name);
        const auto stamp = system_dir(sys.name) / (to_string(s) + ".stamp");
        if (stamp_matches(stamp, hash)) {
          note("[" + to_string(s) + "] " + sys.name + " up to date");
          continue;
        }
        if (s == Stage::kTrain) {
          require_stamp(feature_dir(sys.feature) / "extract.stamp", system_hash(Stage::kExtract, sys.name),
                        to_string(sys.feature) + " features");
          train(sys);
          const auto ck = binio::read_file(system_dir(sys.name) / "model.ckpt");
          write_stamp(stamp, hash,
                      "seed\t" + std::to_string(sys.seed) + "\ncheckpoint\t" + hex64(fnv1a64(ck)) + "\n");
        } else {
          require_stamp(system_dir(sys.name) / "train.stamp", system_hash(Stage::kTrain, sys.name),
                        sys.name + " checkpoint");
          score(sys);
          write_stamp(stamp, hash, "seed\t" + std::to_string(sys.seed) + "\n");
        }
        ran = true;
      }
      return ran;
    }
    case Stage::kFuseFit:
    case Stage::kFuseApply:
    case Stage::kEval:
    case Stage::kAnalyze: {
      const fs::path dir = s == Stage::kEval ? report_dir() : s == Stage::kAnalyze ? analysis_dir() : fusion_dir();
      const auto stamp = dir / (to_string(s) + ".stamp");
      if (stamp_matches(stamp, stage_hash(s))) {
        note("[" + to_string(s) + "] up to date");
        return false;
      }
      if (cfg_.systems.empty()) throw UsageError("no [system.*] sections configured");
      const auto names = s == Stage::kFuseFit || s == Stage::kFuseApply ? fused_systems() : [&] {
        std::vector<std::string> v;
        for (const auto& sys : cfg_.systems) v.push_back(sys.name);
        return v;
      }();
      for (const auto& n : names)
        require_stamp(system_dir(n) / "score.stamp", system_hash(Stage::kScore, n), n + " scores");
      if (s == Stage::kFuseApply)
        require_stamp(fusion_dir() / "fuse-fit.stamp", stage_hash(Stage::kFuseFit), "fusion model");
      fs::create_directories(dir);
      if (s == Stage::kFuseFit) fuse_fit();
      if (s == Stage::kFuseApply) fuse_apply();
      if (s == Stage::kEval) evaluate();
      if (s == Stage::kAnalyze) analyze();
      write_stamp(stamp, stage_hash(s));
      return true;
    }
  }
  return false;
}

void Pipeline::gen_corpus() {
  std::error_code ec;
  fs::remove_all(corpus_dir(), ec);
  const auto manifests = generate_synthetic_corpus(corpus_dir(), cfg_.corpus);
  for (const auto& [split, m] : manifests) {
    std::map<std::string, Label> labels;
    for (const auto& e : m.entries) labels[e.utt_id] = e.label;
    write_labels(corpus_dir() / ("labels_" + split + ".tsv"), labels);
  }
  note("[gen-corpus] wrote " + std::to_string(manifests.size()) + " splits to " + corpus_dir().string());
}

void Pipeline::train(const SystemConfig& sys) {
  TrainOptions opts;
  opts.feature = sys.feature;
  opts.model.input_bins = feature_bins(sys.feature);
  opts.model.width_scale = cfg_.width_scale;
  opts.model.embedding_dim = sys.embedding_dim;
  opts.model.dropout_rate = cfg_.dropout;
  opts.model.head = sys.loss == LossKind::kAmSoftmax ? nn::HeadKind::kCosine : nn::HeadKind::kLinear;
  opts.loss = cfg_.loss;
  opts.loss.kind = sys.loss;
  opts.epochs = cfg_.epochs;
  opts.batch_size = cfg_.batch_size;
  opts.seed = sys.seed;
  opts.chunk = cfg_.chunk;
  opts.eval_frames = cfg_.eval_frames;
  opts.base_lr = cfg_.base_lr;
  opts.lr_step = cfg_.lr_step;
  opts.lr_gamma = cfg_.lr_gamma;
  opts.augment = cfg_.augment;
  opts.policy = cfg_.policy;
  opts.hooks = &cfg_.hooks;
  try {
    opts.model.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("model config: ") + e.what());
  }

  AugmentPools pools;
  if (opts.augment) {
    pools = read_pools(corpus_dir() / "pools.tsv");
    opts.pools = &pools;
  }
  auto load = [&](const std::string& split, bool with_audio) {
    std::vector<TrainItem> items;
    for (const auto& e : read_manifest(corpus_dir() / (split + ".tsv")).entries) {
      TrainItem it;
      it.utt_id = e.utt_id;
      it.label = class_index(e.label);
      if (with_audio) {
        it.audio = read_wav(corpus_dir() / e.path);
      } else {
        it.features = read_spectrogram(feature_dir(sys.feature) / (e.utt_id + ".spg"));
      }
      items.push_back(std::move(it));
    }
    return items;
  };
  const auto train_items = load(cfg_.train_split, opts.augment);
  const auto dev_items = load(cfg_.dev_split, false);
  note("[train] " + sys.name + ": " + std::to_string(train_items.size()) + " train / " +
       std::to_string(dev_items.size()) + " dev utterances, " + std::to_string(opts.epochs) + " epochs");
  const auto result = train_loop(train_items, dev_items, opts);
  fs::create_directories(system_dir(sys.name));
  nn::save_checkpoint(system_dir(sys.name) / "model.ckpt", opts.model, result.best);
  write_text_file(system_dir(sys.name) / "train_log.csv", format_training_log(result.log));
  note("[train] " + sys.name + ": best epoch " + std::to_string(result.best_epoch));
}

void Pipeline::score(const SystemConfig& sys) {
  auto ck = nn::load_checkpoint(system_dir(sys.name) / "model.ckpt");
  for (const auto& split : {cfg_.cal_split, cfg_.eval_split}) {
    const auto m = read_manifest(corpus_dir() / (split + ".tsv"));
    std::vector<Spectrogram> specs;
    for (const auto& e : m.entries) specs.push_back(read_spectrogram(feature_dir(sys.feature) / (e.utt_id + ".spg")));
    const auto scores = score_spectrograms(ck.params, ck.config, specs, cfg_.eval_frames, cfg_.batch_size);
    ScoreSet set;
    for (std::size_t i = 0; i < scores.size(); ++i) set.entries.push_back({m.entries[i].utt_id, scores[i]});
    write_scores(scores_path(sys.name, split), set);
  }
  note("[score] " + sys.name + " done");
}

void Pipeline::fuse_fit() {
  const auto names = fused_systems();
  const auto labels = read_labels(corpus_dir() / ("labels_" + cfg_.cal_split + ".tsv"));
  std::vector<ScoreSet> sets;
  for (const auto& n : names) {
    auto s = minmax_normalize(read_scores(scores_path(n, cfg_.cal_split)));
    attach_labels(s, labels);
    sets.push_back(std::move(s));
  }
  const auto fit = fit_logistic_fusion(sets, names);
  write_fusion_model(fusion_dir() / "model.tsv", fit.model);
  std::string hist = "iteration,objective\n";
  for (std::size_t i = 0; i < fit.objective.size(); ++i) hist += std::to_string(i) + "," + format_double(fit.objective[i]) + "\n";
  write_text_file(fusion_dir() / "objective.csv", hist);
  note("[fuse-fit] " + std::to_string(fit.iterations) + " iterations, converged=" + (fit.converged ? "yes" : "no"));
}

void Pipeline::fuse_apply() {
  const auto model = read_fusion_model(fusion_dir() / "model.tsv");
  std::vector<ScoreSet> sets;
  for (const auto& n : model.systems) sets.push_back(minmax_normalize(read_scores(scores_path(n, cfg_.eval_split))));
  auto fused = fuse_weighted(sets, model);
  if (cfg_.partial_fake_scores) fused = partial_fake_override(fused, read_scores(*cfg_.partial_fake_scores), cfg_.partial_fake_tau);
  write_scores(fusion_dir() / ("scores_" + cfg_.eval_split + ".tsv"), fused);
  note("[fuse-apply] wrote fused " + cfg_.eval_split + " scores");
}

void Pipeline::evaluate() {
  const auto labels = read_labels(corpus_dir() / ("labels_" + cfg_.eval_split + ".tsv"));
  std::string report = "system\teer\tthreshold\tcllr\n";
  auto row = [&](const std::string& name, ScoreSet s) {
    attach_labels(s, labels);
    const auto r = compute_eer(s);
    report += name + "\t" + format_double(r.eer) + "\t" + format_double(r.threshold) + "\t" + format_double(cllr(s)) + "\n";
    note("[eval] " + name + " EER " + format_double(r.eer));
  };
  for (const auto& sys : cfg_.systems) row(sys.name, read_scores(scores_path(sys.name, cfg_.eval_split)));
  const auto fused = fusion_dir() / ("scores_" + cfg_.eval_split + ".tsv");
  std::error_code ec;
  if (fs::exists(fusion_dir() / "fuse-apply.stamp", ec)) {
    require_stamp(fusion_dir() / "fuse-apply.stamp", stage_hash(Stage::kFuseApply), "fused scores");
    row("fused", read_scores(fused));
  }
  write_text_file(report_dir() / "eer_report.tsv", report);
}

void Pipeline::analyze() {
  const auto labels = read_labels(corpus_dir() / ("labels_" + cfg_.eval_split + ".tsv"));
  ScorePanel panel;
  panel.labels = labels;
  for (const auto& sys : cfg_.systems) {
    panel.names.push_back(sys.name);
    panel.systems.push_back(minmax_normalize(read_scores(scores_path(sys.name, cfg_.eval_split))));
  }
  export_panel_csv(panel, analysis_dir(), cfg_.histogram_bins);
  std::string summary = "system\tpolarization_index\n";
  for (std::size_t k = 0; k < panel.systems.size(); ++k)
    summary += panel.names[k] + "\t" + format_double(polarization_index(panel.systems[k])) + "\n";
  write_text_file(analysis_dir() / "polarization.tsv", summary);
  if (panel.systems.size() >= 2) {
    std::string corr = "class\tsystem_a\tsystem_b\tpearson\n";
    for (const auto& [filter, name] : {std::pair{ClassFilter::kAll, "all"}, std::pair{ClassFilter::kBonafide, "bonafide"},
                                       std::pair{ClassFilter::kSpoof, "spoof"}}) {
      try {
        const auto r = pairwise_correlation(panel, filter);
        for (std::size_t a = 0; a < r.size(); ++a)
          for (std::size_t b = a + 1; b < r.size(); ++b)
            corr += std::string(name) + "\t" + panel.names[a] + "\t" + panel.names[b] + "\t" + format_double(r[a][b]) + "\n";
      } catch (const DataError& e) {
        corr += std::string(name) + "\t-\t-\tundefined: " + e.what() + "\n";
      }
    }
    write_text_file(analysis_dir() / "correlation.tsv", corr);
  }
  note("[analyze] wrote " + analysis_dir().string());
}

}  // namespace antispoof
