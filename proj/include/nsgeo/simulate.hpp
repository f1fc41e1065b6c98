// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "nsgeo/likelihood.hpp"
#include "nsgeo/metrics.hpp"
#include "nsgeo/model.hpp"
#include "nsgeo/predict.hpp"
#include "nsgeo/rng.hpp"

namespace nsgeo {

/// One synthetic-data scenario: a generating covariance form, the true
/// parameters, and the sampling design.  Covariates are named e1..ep and
/// enter both the mean (with an intercept) and, for non-stationary forms,
/// the covariance.  All kernels share one smoothness value.
struct ScenarioConfig {
  std::string label = "scenario";
  CovForm form = CovForm::Product;
  ParameterVector theta_true;
  double kappa = 1.5;
  Eigen::Index n = 200;          // observed sample size per replicate
  Eigen::Index heldout_m = 50;   // extra held-out points per replicate
  int B = 100;                   // replicate count
  std::uint64_t master_seed = 20260401;
  std::uint64_t scenario_index = 0;  // distinct per scenario under one master seed

  Eigen::Index p() const { return theta_true.phis.size() - 1; }

  void validate() const {
    theta_true.validate();
    if (n < 1 || B < 1 || heldout_m < 0) {
      throw std::invalid_argument("ScenarioConfig: need n >= 1, B >= 1, heldout_m >= 0");
    }
    if (form == CovForm::Stationary ? p() != 0 : p() < 1) {
      throw std::invalid_argument("ScenarioConfig: phi count does not match form");
    }
    if (theta_true.beta.size() != p() + 1) {
      throw std::invalid_argument(
          "ScenarioConfig: mean structure is intercept + the covariance covariates, so "
          "beta needs length p + 1");
    }
  }

  std::vector<std::string> covariate_names() const {
    std::vector<std::string> names;
    for (Eigen::Index j = 1; j <= p(); ++j) names.push_back("e" + std::to_string(j));
    return names;
  }

  /// Model configuration for fitting `fit_form` to this scenario's data.
  /// Stationary drops the covariance covariates but keeps the full mean.
  ModelConfig model_config(CovForm fit_form) const {
    ModelConfig config;
    config.form = fit_form;
    config.kappa_spatial = kappa;
    config.mean_covariates = covariate_names();
    if (fit_form != CovForm::Stationary) {
      for (const auto& name : covariate_names()) {
        config.cov_covariates.push_back({name, kappa, false});
      }
    }
    config.label = to_string(fit_form);
    return config;
  }
};

/// Observed rows, optional held-out rows, and the latent surface values for
/// all n + m sampled points (observed first) before noise.
struct SimulatedDataset {
  ObservationSet observed;
  std::optional<ObservationSet> heldout;
  Eigen::VectorXd latent;
};

/// Draws one replicate.  Fully determined by (master_seed, scenario_index,
/// replicate_id); the stream derivation and draw order are frozen:
///
///   stream  = RngStream(master_seed, stream_purpose::kDataset,
///                       scenario_index, replicate_id)
///   draws   = 1. locations: per point, x then y ~ Unif[0,1]
///             2. covariates: per covariate j = 1..p, all n+m values
///                ~ Unif[-1,1]
///             3. surface: n+m standard normals z; S = L z with L the lower
///                Cholesky factor of the noise-free covariance
///             4. noise (only when tau2 > 0): n+m standard normals
///
/// The first n points are observed, the remaining heldout_m are held out.
inline SimulatedDataset sample_dataset(const ScenarioConfig& cfg, std::uint64_t replicate_id) {
  cfg.validate();
  const Eigen::Index total = cfg.n + cfg.heldout_m;
  const Eigen::Index p = cfg.p();
  RngStream rng(cfg.master_seed, stream_purpose::kDataset, cfg.scenario_index, replicate_id);

  Eigen::MatrixXd coords(total, 2);
  for (Eigen::Index i = 0; i < total; ++i) {
    coords(i, 0) = rng.uniform01();
    coords(i, 1) = rng.uniform01();
  }
  Eigen::MatrixXd covariates(total, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < total; ++i) covariates(i, j) = rng.uniform(-1.0, 1.0);
  }

  const std::vector<std::string> cov_names = cfg.covariate_names();
  std::vector<InputPoint> points(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < total; ++i) {
    points[static_cast<std::size_t>(i)].coords = coords.row(i).transpose();
    for (Eigen::Index j = 0; j < p; ++j) {
      points[static_cast<std::size_t>(i)].covariates[cov_names[static_cast<std::size_t>(j)]] =
          covariates(i, j);
    }
  }

  const ModelConfig generator = cfg.model_config(cfg.form);
  const CovarianceSpec spec = generator.make_spec(cfg.theta_true);
  Eigen::MatrixXd sigma = covariance_matrix(points, spec, 0.0);
  Eigen::LLT<Eigen::MatrixXd> llt;
  cholesky_with_jitter(sigma, llt, cfg.theta_true.flatten());

  Eigen::VectorXd z(total);
  for (Eigen::Index i = 0; i < total; ++i) z(i) = rng.normal();
  const Eigen::VectorXd latent = Eigen::MatrixXd(llt.matrixL()) * z;

  Eigen::MatrixXd design(total, p + 1);
  design.col(0).setOnes();
  if (p > 0) design.rightCols(p) = covariates;
  Eigen::VectorXd outcome = design * cfg.theta_true.beta + latent;
  if (cfg.theta_true.tau2 > 0.0) {
    const double sd = std::sqrt(cfg.theta_true.tau2);
    for (Eigen::Index i = 0; i < total; ++i) outcome(i) += sd * rng.normal();
  }

  std::vector<std::string> design_names{"intercept"};
  design_names.insert(design_names.end(), cov_names.begin(), cov_names.end());

  ObservationSet observed(coords.topRows(cfg.n), design.topRows(cfg.n), design_names,
                          Eigen::MatrixXd(covariates.topRows(cfg.n)), cov_names,
                          outcome.head(cfg.n));
  std::optional<ObservationSet> heldout;
  if (cfg.heldout_m > 0) {
    heldout.emplace(coords.bottomRows(cfg.heldout_m), design.bottomRows(cfg.heldout_m),
                    design_names, Eigen::MatrixXd(covariates.bottomRows(cfg.heldout_m)), cov_names,
                    outcome.tail(cfg.heldout_m));
  }
  return {std::move(observed), std::move(heldout), latent};
}

struct StudyOptions {
  std::vector<CovForm> fit_forms{CovForm::Product, CovForm::PartialSum, CovForm::FullSum};
  FitOptions fit;
  int threads = 1;
  /// Called after each completed (scenario, replicate) task with
  /// (done, total); must be thread-safe only through this runner's mutex.
  std::function<void(std::size_t, std::size_t)> progress;
};

namespace detail {

/// Everything retained from one (scenario, fit form, replicate) cell.
struct CellResult {
  bool converged = false;      // fit usable for estimates, predictions, AIC/BIC
  bool has_intervals = false;  // standard errors valid, so Wald CIs exist
  std::string error;
  std::vector<double> estimates;  // natural scale, layout order
  std::vector<double> ci_lower, ci_upper;
  double aic = std::numeric_limits<double>::quiet_NaN();
  double bic = std::numeric_limits<double>::quiet_NaN();
  double pred_sum_err = 0.0;
  double pred_sum_sq = 0.0;
  std::size_t pred_hits = 0;
  std::size_t pred_n = 0;
};

inline CellResult run_cell(const ScenarioConfig& cfg, const SimulatedDataset& data,
                           CovForm fit_form, const FitOptions& fit_options,
                           std::uint64_t replicate_id) {
  CellResult cell;
  ModelConfig config = cfg.model_config(fit_form);
  config.fit = fit_options;
  config.fit.seed = cfg.master_seed;
  try {
    RngStream restart_rng(cfg.master_seed, stream_purpose::fit(static_cast<std::uint64_t>(fit_form)),
                          cfg.scenario_index, replicate_id);
    const FitResult result = fit(data.observed, config, restart_rng);
    if (!result.converged) {
      cell.error = "optimizer did not converge: " + result.stop_reason;
      return cell;
    }
    // A converged fit contributes estimates, predictions, and AIC/BIC even
    // when the observed information is singular (common for a misspecified
    // form collapsing to a boundary); only the interval-based coverage
    // column requires valid standard errors.
    cell.estimates = result.theta_hat.flatten();
    cell.has_intervals = result.se_valid;
    cell.ci_lower.assign(result.ci_lower.data(), result.ci_lower.data() + result.ci_lower.size());
    cell.ci_upper.assign(result.ci_upper.data(), result.ci_upper.data() + result.ci_upper.size());
    cell.aic = result.aic;
    cell.bic = result.bic;
    if (data.heldout) {
      const PredictionResult pred =
          krige(result, data.observed, data.heldout->points(), data.heldout->design);
      for (Eigen::Index i = 0; i < pred.mean.size(); ++i) {
        const double truth = data.heldout->outcome(i);
        const double err = pred.mean(i) - truth;
        cell.pred_sum_err += err;
        cell.pred_sum_sq += err * err;
        if (pred.lower95(i) <= truth && truth <= pred.upper95(i)) ++cell.pred_hits;
        ++cell.pred_n;
      }
    }
    cell.converged = true;
  } catch (const std::exception& e) {
    cell.converged = false;
    cell.has_intervals = false;
    cell.error = e.what();
  }
  return cell;
}

}  // namespace detail

/// Runs the full protocol: for every scenario x replicate, draw a dataset,
/// fit each candidate form, compute Wald intervals, and krige the held-out
/// points; then aggregate into the report tables.
///
/// Replicates are independent tasks writing to pre-assigned slots, and
/// aggregation walks the slots in a fixed order, so the report is identical
/// for any thread count.  Cells whose fit fails outright (factorization
/// error or non-convergence) are excluded from every table and counted in
/// failure_counts.  Converged fits always contribute to the bias, RMSE,
/// prediction-coverage, and information-criterion columns; the parameter
/// coverage column additionally needs valid standard errors, so its
/// denominator (b_intervals) can be smaller than b_used.  The
/// information-criterion comparison uses only replicates where all
/// candidate forms converged, so the models compete on the same datasets.
inline StudyReport run_study(const std::vector<ScenarioConfig>& scenarios,
                             const StudyOptions& options) {
  if (scenarios.empty() || options.fit_forms.empty()) {
    throw std::invalid_argument("run_study: need at least one scenario and one fit form");
  }
  for (const auto& cfg : scenarios) cfg.validate();

  const std::size_t n_forms = options.fit_forms.size();
  // results[scenario][replicate * n_forms + form]
  std::vector<std::vector<detail::CellResult>> results(scenarios.size());
  std::vector<std::pair<std::size_t, std::uint64_t>> tasks;  // (scenario, replicate)
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    results[s].resize(static_cast<std::size_t>(scenarios[s].B) * n_forms);
    for (int b = 0; b < scenarios[s].B; ++b) tasks.emplace_back(s, static_cast<std::uint64_t>(b));
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) break;
      const auto [s, b] = tasks[t];
      const SimulatedDataset data = sample_dataset(scenarios[s], b);
      for (std::size_t f = 0; f < n_forms; ++f) {
        results[s][static_cast<std::size_t>(b) * n_forms + f] =
            detail::run_cell(scenarios[s], data, options.fit_forms[f], options.fit, b);
      }
      const std::size_t finished = done.fetch_add(1) + 1;
      if (options.progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        options.progress(finished, tasks.size());
      }
    }
  };

  const int n_workers =
      std::max(1, std::min<int>(options.threads, static_cast<int>(tasks.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  StudyReport report;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const ScenarioConfig& cfg = scenarios[s];
    const std::size_t B = static_cast<std::size_t>(cfg.B);

    // Truth values keyed by parameter label, taken from the generator.
    const std::vector<std::string> truth_names = cfg.model_config(cfg.form).parameter_names();
    const std::vector<double> truth_values = cfg.theta_true.flatten();
    std::map<std::string, double> truth;
    for (std::size_t i = 0; i < truth_names.size(); ++i) truth[truth_names[i]] = truth_values[i];

    // Replicates on which every candidate form converged.
    std::vector<bool> all_converged(B, true);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t f = 0; f < n_forms; ++f) {
        if (!results[s][b * n_forms + f].converged) all_converged[b] = false;
      }
    }

    for (std::size_t f = 0; f < n_forms; ++f) {
      const CovForm form = options.fit_forms[f];
      const std::string model_label = to_string(form);
      const std::vector<std::string> param_names = cfg.model_config(form).parameter_names();

      std::vector<const detail::CellResult*> conv_cells;
      for (std::size_t b = 0; b < B; ++b) {
        const detail::CellResult& cell = results[s][b * n_forms + f];
        if (cell.converged) conv_cells.push_back(&cell);
      }
      report.failure_counts[cfg.label + "/" + model_label] = B - conv_cells.size();

      if (!conv_cells.empty()) {
        for (std::size_t i = 0; i < param_names.size(); ++i) {
          const auto it = truth.find(param_names[i]);
          if (it == truth.end() || it->second == 0.0) continue;  // no relative scale
          ParameterRow row;
          row.scenario = cfg.label;
          row.model = model_label;
          row.parameter = param_names[i];
          row.truth = it->second;
          row.b_used = conv_cells.size();
          std::vector<double> estimates, lower, upper;
          estimates.reserve(conv_cells.size());
          for (const auto* cell : conv_cells) {
            estimates.push_back(cell->estimates[i]);
            if (cell->has_intervals) {
              lower.push_back(cell->ci_lower[i]);
              upper.push_back(cell->ci_upper[i]);
            }
          }
          double mean = 0.0;
          for (double est : estimates) mean += est;
          row.mean_estimate = mean / static_cast<double>(estimates.size());
          row.prb = percent_relative_bias(estimates, row.truth);
          row.b_intervals = lower.size();
          row.coverage = lower.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : interval_coverage(lower, upper, row.truth);
          report.parameter_table.push_back(std::move(row));
        }

        PredictionRow pred_row;
        pred_row.scenario = cfg.label;
        pred_row.model = model_label;
        pred_row.b_used = conv_cells.size();
        double sum_err = 0.0, sum_sq = 0.0;
        std::size_t hits = 0, n_points = 0;
        for (const auto* cell : conv_cells) {
          sum_err += cell->pred_sum_err;
          sum_sq += cell->pred_sum_sq;
          hits += cell->pred_hits;
          n_points += cell->pred_n;
        }
        if (n_points > 0) {
          pred_row.bias = sum_err / static_cast<double>(n_points);
          pred_row.rmse = std::sqrt(sum_sq / static_cast<double>(n_points));
          pred_row.coverage = static_cast<double>(hits) / static_cast<double>(n_points);
          pred_row.n_points = n_points;
          report.prediction_table.push_back(std::move(pred_row));
        }
      }

      SelectionRow sel;
      sel.scenario = cfg.label;
      sel.model = model_label;
      double aic_sum = 0.0, bic_sum = 0.0;
      std::size_t aic_best = 0, bic_best = 0, b_used = 0;
      for (std::size_t b = 0; b < B; ++b) {
        if (!all_converged[b]) continue;
        double min_aic = std::numeric_limits<double>::infinity();
        double min_bic = std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < n_forms; ++g) {
          const detail::CellResult& other = results[s][b * n_forms + g];
          min_aic = std::min(min_aic, other.aic);
          min_bic = std::min(min_bic, other.bic);
        }
        const detail::CellResult& cell = results[s][b * n_forms + f];
        aic_sum += cell.aic;
        bic_sum += cell.bic;
        if (cell.aic == min_aic) ++aic_best;
        if (cell.bic == min_bic) ++bic_best;
        ++b_used;
      }
      if (b_used > 0) {
        sel.mean_aic = aic_sum / static_cast<double>(b_used);
        sel.mean_bic = bic_sum / static_cast<double>(b_used);
        sel.aic_best_rate = static_cast<double>(aic_best) / static_cast<double>(b_used);
        sel.bic_best_rate = static_cast<double>(bic_best) / static_cast<double>(b_used);
        sel.b_used = b_used;
        report.selection_table.push_back(std::move(sel));
      }
    }
  }
  return report;
}

}  // namespace nsgeo
