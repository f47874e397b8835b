// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/fusion.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>

#include "antispoof/error.hpp"
#include "antispoof/text_util.hpp"

namespace antispoof {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Problem {
  Eigen::MatrixXd x;  // trials x (systems + 1), last column is the bias input
  std::vector<int> y;
  double wb = 0.0, ws = 0.0;  // per-trial class weights

  double objective(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd z = x * theta;
    double f = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) f += y[j] ? wb * softplus(-z[j]) : ws * softplus(z[j]);
    return f;
  }
};

}  // namespace

void FusionModel::validate() const {
  if (systems.size() != weights.size()) throw DataError("fusion model: system and weight counts differ");
  if (weights.empty()) throw DataError("fusion model: no systems");
  if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; }))
    throw DataError("fusion model: all weights are zero");
  if (!std::isfinite(bias)) throw DataError("fusion model: non-finite bias");
}

void write_fusion_model(const std::filesystem::path& path, const FusionModel& model) {
  model.validate();
  std::string out = "bias\t" + format_double(model.bias) + "\n";
  for (std::size_t i = 0; i < model.systems.size(); ++i)
    out += model.systems[i] + "\t" + format_double(model.weights[i]) + "\n";
  write_text_file(path, out);
}

FusionModel read_fusion_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open fusion model: " + path.string());
  FusionModel model;
  std::string line;
  bool have_bias = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 2) throw DataError("fusion model: expected 2 tab-separated fields in '" + line + "'");
    if (!have_bias) {
      if (trim(f[0]) != "bias") throw DataError("fusion model: first line must be the bias");
      model.bias = parse_double(f[1]);
      have_bias = true;
      continue;
    }
    model.systems.push_back(trim(f[0]));
    model.weights.push_back(parse_double(f[1]));
  }
  if (!have_bias) throw DataError("fusion model: empty file");
  model.validate();
  return model;
}

ScoreSet fuse_weighted(const std::vector<ScoreSet>& systems, const FusionModel& model) {
  model.validate();
  if (systems.size() != model.weights.size())
    throw DataError("fuse_weighted: " + std::to_string(systems.size()) + " score sets for " +
                    std::to_string(model.weights.size()) + " weights");
  std::vector<std::map<std::string, double>> maps;
  for (const auto& s : systems) maps.push_back(s.by_id());
  for (std::size_t k = 1; k < maps.size(); ++k) {
    if (maps[k].size() != maps[0].size())
      throw DataError("fuse_weighted: system " + model.systems[k] + " covers a different trial set");
  }
  ScoreSet out;
  out.labels = systems[0].labels;
  for (const auto& e : systems[0].entries) {
    double v = model.bias;
    for (std::size_t k = 0; k < maps.size(); ++k) {
      auto it = maps[k].find(e.utt_id);
      if (it == maps[k].end()) throw DataError("fuse_weighted: " + e.utt_id + " missing from " + model.systems[k]);
      v += model.weights[k] * it->second;
    }
    out.entries.push_back({e.utt_id, v});
  }
  return out;
}

FusionFit fit_logistic_fusion(const std::vector<std::vector<double>>& scores, std::span<const int> labels,
                              std::vector<std::string> names, const FusionFitOptions& opts) {
  const std::size_t n = scores.size();
  if (n == 0) throw DataError("fit_logistic_fusion: no systems");
  const std::size_t m = labels.size();
  for (const auto& row : scores) {
    if (row.size() != m) throw DataError("fit_logistic_fusion: score row length differs from label count");
  }
  if (m <= n) throw DataError("fit_logistic_fusion: need more trials than systems");
  const auto nb = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t ns = m - nb;
  if (nb == 0 || ns == 0) throw DataError("fit_logistic_fusion: both classes are required");
  if (names.empty()) {
    for (std::size_t k = 0; k < n; ++k) names.push_back("system" + std::to_string(k + 1));
  }
  if (names.size() != n) throw DataError("fit_logistic_fusion: name count differs from system count");

  Problem p;
  p.x.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n + 1));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < n; ++k) p.x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = scores[k][j];
    p.x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(n)) = 1.0;
    if (labels[j] != 0 && labels[j] != 1) throw DataError("fit_logistic_fusion: labels must be 0 or 1");
  }
  p.y.assign(labels.begin(), labels.end());
  p.wb = 0.5 / static_cast<double>(nb);
  p.ws = 0.5 / static_cast<double>(ns);

  const auto dim = static_cast<Eigen::Index>(n + 1);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  FusionFit fit;
  double f = p.objective(theta);
  fit.objective.push_back(f);
  double damping = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Eigen::VectorXd z = p.x * theta;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd r(z.size()), c(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      const double sg = sigmoid(z[j]);
      const double w = p.y[j] ? p.wb : p.ws;
      r[j] = w * (sg - (p.y[j] ? 1.0 : 0.0));
      c[j] = w * sg * (1.0 - sg);
    }
    g = p.x.transpose() * r;
    if (g.cwiseAbs().maxCoeff() < opts.grad_tolerance) {
      fit.converged = true;
      break;
    }
    h = p.x.transpose() * c.asDiagonal() * p.x;
    // Levenberg damping keeps the step defined when the data are separable.
    bool improved = false;
    for (int tries = 0; tries < 60 && !improved; ++tries) {
      Eigen::MatrixXd hd = h;
      hd.diagonal().array() += damping + 1e-12 * h.diagonal().cwiseAbs().maxCoeff();
      const Eigen::VectorXd step = hd.ldlt().solve(-g);
      double t = 1.0;
      for (int ls = 0; ls < 30; ++ls) {
        const Eigen::VectorXd cand = theta + t * step;
        const double fc = p.objective(cand);
        if (fc <= f + 1e-4 * t * g.dot(step)) {
          theta = cand;
          f = fc;
          improved = true;
          break;
        }
        t *= 0.5;
      }
      if (improved) {
        damping *= 0.1;
      } else {
        damping = damping == 0.0 ? 1e-8 : damping * 10.0;
      }
    }
    fit.iterations = it + 1;
    if (!improved) break;  // no descent possible at machine precision
    fit.objective.push_back(f);
  }
  if (!theta.allFinite()) throw NumericalError("fit_logistic_fusion: non-finite solution");
  fit.model.systems = std::move(names);
  for (std::size_t k = 0; k < n; ++k) fit.model.weights.push_back(theta[static_cast<Eigen::Index>(k)]);
  fit.model.bias = theta[static_cast<Eigen::Index>(n)];
  if (std::all_of(fit.model.weights.begin(), fit.model.weights.end(), [](double w) { return w == 0.0; }))
    throw NumericalError("fit_logistic_fusion: all fitted weights are zero");
  return fit;
}

FusionFit fit_logistic_fusion(const std::vector<ScoreSet>& systems, std::vector<std::string> names,
                              const FusionFitOptions& opts) {
  if (systems.empty()) throw DataError("fit_logistic_fusion: no systems");
  const auto& ref = systems[0];
  std::vector<int> labels;
  for (const auto& e : ref.entries) {
    auto it = ref.labels.find(e.utt_id);
    if (it == ref.labels.end() || it->second == Label::kUnknown) throw DataError("no label for " + e.utt_id);
    labels.push_back(it->second == Label::kBonafide ? 1 : 0);
  }
  std::vector<std::vector<double>> rows;
  for (const auto& s : systems) {
    const auto map = s.by_id();
    if (map.size() != ref.size()) throw DataError("fit_logistic_fusion: systems cover different trial sets");
    std::vector<double> row;
    for (const auto& e : ref.entries) {
      auto it = map.find(e.utt_id);
      if (it == map.end()) throw DataError("fit_logistic_fusion: " + e.utt_id + " missing from a system");
      row.push_back(it->second);
    }
    rows.push_back(std::move(row));
  }
  return fit_logistic_fusion(rows, labels, std::move(names), opts);
}

ScoreSet partial_fake_override(const ScoreSet& fused, const ScoreSet& pf_prob, double tau) {
  if (fused.entries.empty()) return fused;
  const auto probs = pf_prob.by_id();
  if (probs.size() != fused.size()) throw DataError("partial_fake_override: id sets differ");
  double mn = fused.entries.front().score;
  for (const auto& e : fused.entries) mn = std::min(mn, e.score);
  ScoreSet out = fused;
  for (auto& e : out.entries) {
    auto it = probs.find(e.utt_id);
    if (it == probs.end()) throw DataError("partial_fake_override: no probability for " + e.utt_id);
    if (it->second > tau) e.score = mn;
  }
  return out;
}

}  // namespace antispoof
