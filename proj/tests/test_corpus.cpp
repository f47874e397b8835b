// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include "antispoof/dsp.hpp"
#include "antispoof/error.hpp"
#include "antispoof/manifest.hpp"
#include "antispoof/synth.hpp"
#include "antispoof/text_util.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace antispoof;

namespace {

TrialManifest base_manifest(std::size_t n) {
  TrialManifest m;
  for (std::size_t i = 0; i < n; ++i)
    m.entries.push_back({"utt" + std::to_string(i), "wav/utt" + std::to_string(i) + ".wav",
                         i % 2 ? Label::kSpoof : Label::kBonafide, {}});
  return m;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Energy above the formant region (3.5 to 8 kHz) over energy below it
// (100 Hz to 3.5 kHz) of the whole-utterance spectrum, in nepers.
double tilt_statistic(const AudioBuffer& a) {
  std::size_t n = 1;
  while (n < a.size()) n <<= 1;
  std::vector<Complex> x(n, Complex(0.0, 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) x[i] = a.samples[i];
  x = fft(std::move(x));
  const double hz_per_bin = static_cast<double>(a.sample_rate) / static_cast<double>(n);
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * hz_per_bin;
    const double p = std::norm(x[k]);
    if (f >= 100.0 && f < 3500.0) lo += p;
    if (f >= 3500.0) hi += p;
  }
  return std::log(hi / lo);
}

// Probability that a random spoof outranks a random bonafide, ties count half.
double auc(const std::vector<double>& spoof, const std::vector<double>& bona) {
  double wins = 0.0;
  for (double s : spoof)
    for (double b : bona) wins += s > b ? 1.0 : (s == b ? 0.5 : 0.0);
  return wins / static_cast<double>(spoof.size() * bona.size());
}

}  // namespace

TEST_CASE("recipe text round trip") {
  AugmentRecipe r;
  CHECK(format_recipe(r) == "-");
  CHECK(parse_recipe("-") == r);
  r.noise = NoiseSpec{"babble01", 7.5};
  r.rir = "rir02";
  r.speed = 0.95;
  r.codec = "mulaw";
  r.normalize = true;
  const auto text = format_recipe(r);
  CHECK(parse_recipe(text) == r);
  CHECK(parse_recipe("norm=1").normalize);
  CHECK_THROWS_AS(parse_recipe("noise=x"), DataError);
  CHECK_THROWS_AS(parse_recipe("speed=1.5"), DataError);
  CHECK_THROWS_AS(parse_recipe("pitch=2"), DataError);
  CHECK_THROWS_AS(parse_recipe("rir"), DataError);
}

TEST_CASE("manifest file round trip and validation") {
  testing::TempDir dir;
  auto m = base_manifest(4);
  m.entries[1].recipe.codec = "alaw";
  write_manifest(dir / "m.tsv", m);
  const auto back = read_manifest(dir / "m.tsv");
  CHECK(back.entries == m.entries);

  m.entries[2].utt_id = m.entries[0].utt_id;
  CHECK_THROWS_AS(m.validate(), DataError);
  write_text_file(dir / "bad.tsv", "a\tb\n");
  CHECK_THROWS_AS(read_manifest(dir / "bad.tsv"), DataError);
  CHECK_THROWS_AS(read_manifest(dir / "none.tsv"), DataError);
  CHECK(parse_label("bonafide") == Label::kBonafide);
  CHECK_THROWS_AS(parse_label("real"), DataError);
}

TEST_CASE("compose_corpus full expansion is nine times the base") {
  CompositionSpec spec;
  spec.available_codecs = all_codec_names();
  const auto r = compose_corpus(base_manifest(10), spec);
  CHECK(r.multiplier == 9);
  CHECK(r.manifest.size() == 90);
  r.manifest.validate();
  std::size_t normalized = 0, coded = 0;
  for (const auto& e : r.manifest.entries) {
    normalized += e.recipe.normalize ? 1 : 0;
    coded += e.recipe.codec ? 1 : 0;
  }
  CHECK(normalized == 10);
  CHECK(coded == 70);
  CHECK(all_codec_names().size() == 7);
}

TEST_CASE("compose_corpus sampling") {
  CompositionSpec spec;
  spec.available_codecs = all_codec_names();
  spec.sample_count = 0;
  CHECK(compose_corpus(base_manifest(10), spec).manifest.empty());

  spec.sample_count = 25;
  spec.seed = 42;
  const auto a = compose_corpus(base_manifest(10), spec);
  const auto b = compose_corpus(base_manifest(10), spec);
  CHECK(a.manifest.size() == 25);
  CHECK(a.manifest.entries == b.manifest.entries);
  std::set<std::string> ids;
  for (const auto& e : a.manifest.entries) ids.insert(e.utt_id);
  CHECK(ids.size() == 25);

  spec.seed = 43;
  CHECK(compose_corpus(base_manifest(10), spec).manifest.entries != a.manifest.entries);

  spec.sample_count = 91;
  CHECK_THROWS_AS(compose_corpus(base_manifest(10), spec), std::invalid_argument);
  CHECK_THROWS_AS(compose_corpus(TrialManifest{}, CompositionSpec{}), std::invalid_argument);
}

TEST_CASE("compose_corpus degrades when codecs are unavailable") {
  CompositionSpec spec;
  spec.available_codecs = {"alaw", "mulaw"};
  const auto r = compose_corpus(base_manifest(10), spec);
  CHECK(r.multiplier == 4);
  CHECK(r.manifest.size() == 40);
  spec.available_codecs = {"flac"};
  CHECK_THROWS_AS(compose_corpus(base_manifest(2), spec), std::invalid_argument);
}

TEST_CASE("synthetic corpus counts and metadata") {
  testing::TempDir dir;
  CorpusSpec spec;
  spec.seed = 5;
  spec.splits = {{"train", 5, artifact_families()}};
  spec.pool_items_per_category = 1;
  spec.rir_items = 1;
  const auto m = generate_synthetic_corpus(dir.path(), spec);
  const auto& train = m.at("train");
  REQUIRE(train.size() == 10);
  std::size_t bona = 0, wavs = 0;
  for (const auto& e : train.entries) {
    bona += e.label == Label::kBonafide ? 1 : 0;
    const auto audio = read_wav(dir.path() / e.path);
    CHECK(audio.sample_rate == 16000);
    CHECK(audio.duration_seconds() >= 1.0);
    CHECK(audio.duration_seconds() <= 3.0);
    ++wavs;
  }
  CHECK(bona == 5);
  CHECK(wavs == 10);
  const auto meta = read_corpus_meta(dir / "corpus_meta.tsv");
  CHECK(meta.size() == 10);
  std::set<std::string> families;
  for (const auto& [id, cm] : meta)
    if (cm.label == Label::kSpoof) families.insert(cm.family);
  CHECK(families == std::set<std::string>{"phase", "splice", "tilt"});
}

TEST_CASE("synthetic corpus is bit-identical for the same seed") {
  testing::TempDir dir;
  CorpusSpec spec;
  spec.seed = 9;
  spec.splits = {{"eval", 3, {"tilt", "phase"}}};
  spec.pool_items_per_category = 1;
  spec.rir_items = 1;
  const auto a = generate_synthetic_corpus(dir / "a", spec);
  const auto b = generate_synthetic_corpus(dir / "b", spec);
  for (const auto& e : a.at("eval").entries) CHECK(slurp(dir / "a" / e.path) == slurp(dir / "b" / e.path));
  CHECK(slurp(dir / "a" / "eval.tsv") == slurp(dir / "b" / "eval.tsv"));

  spec.seed = 10;
  const auto c = generate_synthetic_corpus(dir / "c", spec);
  const auto& first = a.at("eval").entries.front().path;
  CHECK(slurp(dir / "a" / first) != slurp(dir / "c" / first));
}

TEST_CASE("spectral tilt separates the synthetic classes") {
  std::vector<double> bona, spoof;
  const auto& fam = artifact_families();
  for (std::size_t i = 0; i < 100; ++i) {
    const auto id = std::to_string(i);
    bona.push_back(tilt_statistic(synth_utterance("b" + id, Label::kBonafide, "-", 1000 + i).audio));
    spoof.push_back(tilt_statistic(synth_utterance("s" + id, Label::kSpoof, fam[i % fam.size()], 5000 + i).audio));
  }
  const double a = auc(spoof, bona);
  MESSAGE("tilt AUC " << a);
  CHECK(a > 0.9);
}

TEST_CASE("synth_utterance argument checks") {
  CHECK_THROWS_AS(synth_utterance("x", Label::kSpoof, "vocoder", 1), std::invalid_argument);
  CHECK_THROWS_AS(synth_utterance("x", Label::kUnknown, "-", 1), std::invalid_argument);
  const auto u = synth_utterance("x", Label::kSpoof, "splice", 3);
  CHECK(u.family == "splice");
}
