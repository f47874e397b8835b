// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "antispoof/analysis.hpp"
#include "antispoof/error.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace antispoof;

namespace {

ScoreSet from_values(const std::vector<double>& v) {
  ScoreSet s;
  for (std::size_t i = 0; i < v.size(); ++i) s.entries.push_back({"t" + std::to_string(i), v[i]});
  return s;
}

ScorePanel random_panel(std::size_t systems, std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ScorePanel p;
  std::vector<double> latent(trials);
  for (std::size_t j = 0; j < trials; ++j) {
    latent[j] = n(rng);
    p.labels["t" + std::to_string(j)] = j % 2 ? Label::kSpoof : Label::kBonafide;
  }
  for (std::size_t k = 0; k < systems; ++k) {
    std::vector<double> v(trials);
    for (std::size_t j = 0; j < trials; ++j) v[j] = latent[j] + 0.5 * static_cast<double>(k) * n(rng);
    p.names.push_back("sys" + std::to_string(k));
    p.systems.push_back(from_values(v));
  }
  return p;
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("histogram examples") {
  const std::vector<double> v{0.0, 0.5, 1.0};
  CHECK(histogram(v, 2, 0.0, 1.0) == std::vector<std::size_t>{1, 2});
  CHECK(histogram(std::vector<double>{-5.0, 0.2, 9.0}, 4, 0.0, 1.0) == std::vector<std::size_t>{2, 0, 0, 1});
  CHECK_THROWS_AS(histogram(v, 2, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(histogram(v, 2, 2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(histogram(v, 0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("histogram of uniform samples stays within 5 sigma") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(10000);
  for (auto& x : v) x = u(rng);
  const std::size_t bins = 20;
  const auto h = histogram(v, bins, 0.0, 1.0);
  const double mean = 10000.0 / bins;
  const double sigma = std::sqrt(10000.0 * (1.0 / bins) * (1.0 - 1.0 / bins));
  std::size_t total = 0;
  for (auto c : h) {
    CHECK(std::abs(static_cast<double>(c) - mean) < 5.0 * sigma);
    total += c;
  }
  CHECK(total == v.size());

  std::shuffle(v.begin(), v.end(), rng);
  CHECK(histogram(v, bins, 0.0, 1.0) == h);
}

TEST_CASE("correlation examples") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(1000), b(1000), neg(1000);
  for (std::size_t j = 0; j < a.size(); ++j) {
    a[j] = u(rng);
    b[j] = u(rng);
    neg[j] = -a[j];
  }
  ScorePanel p{{"a", "a2", "neg", "b"}, {from_values(a), from_values(a), from_values(neg), from_values(b)}, {}};
  for (auto kind : {Correlation::kPearson, Correlation::kSpearman}) {
    const auto r = pairwise_correlation(p, ClassFilter::kAll, kind);
    CHECK(r[0][0] == 1.0);
    CHECK(r[0][1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r[0][2] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(r[0][3]) < 0.1);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t k = 0; k < 4; ++k) {
        CHECK(r[i][k] == r[k][i]);
        CHECK(std::abs(r[i][k]) <= 1.0);
      }
  }
}

TEST_CASE("spearman uses ranks") {
  // Monotone but nonlinear: Spearman is exactly 1, Pearson is not.
  std::vector<double> a, b;
  for (int i = 1; i <= 20; ++i) {
    a.push_back(i);
    b.push_back(std::exp(static_cast<double>(i)));
  }
  ScorePanel p{{"a", "b"}, {from_values(a), from_values(b)}, {}};
  CHECK(pairwise_correlation(p, ClassFilter::kAll, Correlation::kSpearman)[0][1] == doctest::Approx(1.0));
  CHECK(pairwise_correlation(p, ClassFilter::kAll, Correlation::kPearson)[0][1] < 0.9);
}

TEST_CASE("correlation matrix is positive semi-definite") {
  const auto p = random_panel(6, 300, 12);
  for (auto filter : {ClassFilter::kAll, ClassFilter::kBonafide, ClassFilter::kSpoof}) {
    const auto r = pairwise_correlation(p, filter);
    Eigen::MatrixXd m(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int k = 0; k < 6; ++k) m(i, k) = r[i][k];
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
  }
}

TEST_CASE("correlation class filter") {
  // Systems agree on bonafide trials and disagree on spoof trials.
  ScorePanel p;
  p.names = {"a", "b"};
  std::vector<double> a, b;
  for (int j = 0; j < 40; ++j) {
    const bool bona = j % 2 == 0;
    p.labels["t" + std::to_string(j)] = bona ? Label::kBonafide : Label::kSpoof;
    a.push_back(j);
    b.push_back(bona ? j : -j);
  }
  p.systems = {from_values(a), from_values(b)};
  CHECK(pairwise_correlation(p, ClassFilter::kBonafide)[0][1] == doctest::Approx(1.0));
  CHECK(pairwise_correlation(p, ClassFilter::kSpoof)[0][1] == doctest::Approx(-1.0));
  CHECK(parse_class_filter("spoof") == ClassFilter::kSpoof);
  CHECK_THROWS_AS(parse_class_filter("fake"), UsageError);
}

TEST_CASE("correlation errors") {
  ScorePanel flat{{"a", "b"}, {from_values({1, 2, 3}), from_values({4, 4, 4})}, {}};
  try {
    pairwise_correlation(flat, ClassFilter::kAll);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
  ScorePanel tiny{{"a", "b"}, {from_values({1}), from_values({2})}, {}};
  CHECK_THROWS_AS(pairwise_correlation(tiny, ClassFilter::kAll), DataError);
  ScorePanel unlabeled{{"a", "b"}, {from_values({1, 2}), from_values({2, 1})}, {}};
  CHECK_THROWS_AS(pairwise_correlation(unlabeled, ClassFilter::kBonafide), DataError);
  ScorePanel mismatched{{"a", "b"}, {from_values({1, 2}), from_values({2, 1, 0})}, {}};
  CHECK_THROWS_AS(pairwise_correlation(mismatched, ClassFilter::kAll), DataError);
}

TEST_CASE("polarization index") {
  CHECK(polarization_index(std::vector<double>{0, 1, 1, 0}) == 1.0);
  CHECK(polarization_index(std::vector<double>{0.5, 0.5}) == 0.0);
  CHECK(polarization_index(std::vector<double>{0.01, 0.5, 0.99, 0.3}) == 0.5);
  CHECK(polarization_index(std::vector<double>{}) == 0.0);

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(500), r(500);
  for (std::size_t j = 0; j < v.size(); ++j) {
    v[j] = std::round(u(rng) * 1024.0) / 1024.0;  // dyadic, so 1 - s is exact
    r[j] = 1.0 - v[j];
  }
  CHECK(polarization_index(v) == polarization_index(r));
}

TEST_CASE("export_panel_csv writes pair and histogram files") {
  testing::TempDir dir;
  const auto two = export_panel_csv(random_panel(2, 50, 14), dir / "two", 10);
  CHECK(two.size() == 3);
  CHECK(std::filesystem::exists(dir / "two" / "pair_sys0__sys1.csv"));
  CHECK(std::filesystem::exists(dir / "two" / "hist_sys0.csv"));
  CHECK(count_lines(dir / "two" / "pair_sys0__sys1.csv") == 51);
  CHECK(count_lines(dir / "two" / "hist_sys1.csv") == 11);

  const auto six = export_panel_csv(random_panel(6, 30, 15), dir / "six");
  const auto pairs = std::count_if(six.begin(), six.end(),
                                   [](const auto& p) { return p.filename().string().rfind("pair_", 0) == 0; });
  CHECK(pairs == 15);
  CHECK(six.size() == 21);

  std::ifstream in(dir / "two" / "pair_sys0__sys1.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "utt_id,score_a,score_b,label");

  CHECK_THROWS_AS(export_panel_csv(ScorePanel{}, dir / "empty"), DataError);
}

TEST_CASE("export_panel_csv is deterministic") {
  testing::TempDir dir;
  const auto p = random_panel(3, 40, 16);
  const auto a = export_panel_csv(p, dir / "a");
  const auto b = export_panel_csv(p, dir / "b");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].filename() == b[i].filename());
    CHECK(slurp(a[i]) == slurp(b[i]));
  }
}
