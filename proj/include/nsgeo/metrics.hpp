// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsgeo {

/// Mean relative deviation of the estimates from the truth, in percent:
/// (1/B) sum_b (est_b - truth) / truth * 100.  The truth must be nonzero;
/// parameters with zero truth have no relative scale and are excluded from
/// bias tables upstream.
inline double percent_relative_bias(const std::vector<double>& estimates, double truth) {
  if (truth == 0.0) {
    throw std::domain_error("percent_relative_bias: truth is zero; relative bias undefined");
  }
  if (estimates.empty()) {
    throw std::domain_error("percent_relative_bias: no estimates");
  }
  double acc = 0.0;
  for (double est : estimates) acc += (est - truth) / truth;
  return acc / static_cast<double>(estimates.size()) * 100.0;
}

/// Fraction of intervals containing the truth, closed at both endpoints.
inline double interval_coverage(const std::vector<double>& lower,
                                const std::vector<double>& upper, double truth) {
  if (lower.size() != upper.size()) {
    throw std::domain_error("interval_coverage: lower/upper length mismatch");
  }
  if (lower.empty()) {
    throw std::domain_error("interval_coverage: no intervals");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (lower[i] <= truth && truth <= upper[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(lower.size());
}

/// Held-out prediction summaries pooled over points and replicates.
struct PredictionSummary {
  double bias = 0.0;      // mean of (prediction - outcome)
  double rmse = 0.0;      // sqrt of mean squared error
  double coverage = 0.0;  // fraction of outcomes inside their intervals
  std::size_t n = 0;      // pooled point count
};

/// Pools per-point errors: bias = mean(pred - truth), rmse = sqrt(mean
/// (pred - truth)^2), coverage = fraction of truths inside [lower, upper]
/// with closed endpoints.
inline PredictionSummary prediction_metrics(const Eigen::VectorXd& predicted,
                                            const Eigen::VectorXd& observed,
                                            const Eigen::VectorXd& lower,
                                            const Eigen::VectorXd& upper) {
  const Eigen::Index n = predicted.size();
  if (observed.size() != n || lower.size() != n || upper.size() != n) {
    throw std::domain_error("prediction_metrics: input length mismatch");
  }
  if (n == 0) {
    throw std::domain_error("prediction_metrics: no predictions");
  }
  PredictionSummary out;
  out.n = static_cast<std::size_t>(n);
  const Eigen::ArrayXd err = (predicted - observed).array();
  out.bias = err.mean();
  out.rmse = std::sqrt(err.square().mean());
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lower(i) <= observed(i) && observed(i) <= upper(i)) ++hits;
  }
  out.coverage = static_cast<double>(hits) / static_cast<double>(n);
  return out;
}

/// One row of the parameter-recovery table: a (scenario, fitted model,
/// parameter) cell summarized over the replicates that converged.
struct ParameterRow {
  std::string scenario;
  std::string model;
  std::string parameter;
  double truth = 0.0;
  double mean_estimate = 0.0;
  double prb = 0.0;       // percent relative bias; NaN when truth == 0
  double coverage = 0.0;  // 95% CI coverage over interval-bearing replicates
  std::size_t b_used = 0; // converged replicates contributing to the mean/PRB
  std::size_t b_intervals = 0;  // subset with valid standard errors, used for coverage
};

/// One row of the held-out prediction table per (scenario, fitted model).
struct PredictionRow {
  std::string scenario;
  std::string model;
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  std::size_t n_points = 0;
  std::size_t b_used = 0;
};

/// One row of the information-criterion table per (scenario, fitted model).
struct SelectionRow {
  std::string scenario;
  std::string model;
  double mean_aic = 0.0;
  double mean_bic = 0.0;
  double aic_best_rate = 0.0;  // fraction of replicates where this model has min AIC
  double bic_best_rate = 0.0;
  std::size_t b_used = 0;
};

/// Full study output: the three tables plus a per-(scenario, model) count of
/// replicates dropped for optimizer or factorization failures.
struct StudyReport {
  std::vector<ParameterRow> parameter_table;
  std::vector<PredictionRow> prediction_table;
  std::vector<SelectionRow> selection_table;
  std::map<std::string, std::size_t> failure_counts;  // "scenario/model" -> dropped
};

}  // namespace nsgeo
