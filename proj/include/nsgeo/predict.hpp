// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <thread>
#include <vector>

#include "nsgeo/covariance.hpp"
#include "nsgeo/likelihood.hpp"
#include "nsgeo/model.hpp"
#include "nsgeo/stats.hpp"

namespace nsgeo {

/// Plug-in kriging output.  sd_y includes the nugget (prediction of a new
/// outcome); sd_s is the latent-surface sd.  Intervals are mean +/- z sd_y
/// at the 95% level.  Parameter uncertainty is not propagated.
struct PredictionResult {
  std::vector<InputPoint> points;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd_y;
  Eigen::VectorXd sd_s;
  Eigen::VectorXd lower95;
  Eigen::VectorXd upper95;
};

/// Factorizes the observation covariance once and serves any number of
/// target batches.  Pure reads after construction; safe to share across
/// threads.
class KrigingModel {
public:
  KrigingModel(const ObservationSet& data, const ModelConfig& config,
               const ParameterVector& theta, const std::vector<double>& covariate_scales)
      : config_(config), theta_(theta) {
    theta_.validate();
    std::vector<double> spec_scales;
    for (std::size_t j = 0; j < covariate_scales.size(); ++j) {
      spec_scales.push_back(covariate_scales[j]);
    }
    spec_ = std::make_unique<CovarianceSpec>(config.make_spec(theta_, spec_scales));
    source_points_ = data.points();
    Eigen::MatrixXd sigma = covariance_matrix(source_points_, *spec_, theta_.tau2);
    cholesky_with_jitter(sigma, llt_, theta_.flatten());
    resid_weights_ = llt_.solve(data.outcome - data.design * theta_.beta);
    marginal_variance_ = spec_->marginal_variance();
  }

  KrigingModel(const FitResult& fit, const ObservationSet& data)
      : KrigingModel(data, fit.config, fit.theta_hat, fit.covariate_scales) {}

  /// Conditional mean and variance for a batch of targets.  Each target is
  /// an independent computation, so results do not depend on batching.
  PredictionResult predict(const std::vector<InputPoint>& targets,
                           const Eigen::MatrixXd& target_design) const {
    const Eigen::Index m = static_cast<Eigen::Index>(targets.size());
    if (target_design.rows() != m) {
      throw SchemaError("krige: target design has " + std::to_string(target_design.rows()) +
                        " rows for " + std::to_string(m) + " targets");
    }
    if (target_design.cols() != theta_.beta.size()) {
      throw SchemaError("krige: target design has " + std::to_string(target_design.cols()) +
                        " columns, mean structure needs " + std::to_string(theta_.beta.size()));
    }

    PredictionResult out;
    out.points = targets;
    out.mean.resize(m);
    out.sd_y.resize(m);
    out.sd_s.resize(m);
    out.lower95.resize(m);
    out.upper95.resize(m);
    if (m == 0) return out;

    const Eigen::MatrixXd cross = cross_covariance(targets, source_points_, *spec_);
    const Eigen::MatrixXd solved = llt_.solve(cross.transpose());  // n x m
    const double z = normal_quantile(0.975);
    for (Eigen::Index i = 0; i < m; ++i) {
      out.mean(i) = target_design.row(i).dot(theta_.beta) + cross.row(i).dot(resid_weights_);
      double var_s = marginal_variance_ - cross.row(i).dot(solved.col(i));
      if (var_s < 0.0) var_s = 0.0;  // roundoff
      out.sd_s(i) = std::sqrt(var_s);
      out.sd_y(i) = std::sqrt(var_s + theta_.tau2);
      out.lower95(i) = out.mean(i) - z * out.sd_y(i);
      out.upper95(i) = out.mean(i) + z * out.sd_y(i);
    }
    return out;
  }

private:
  ModelConfig config_;
  ParameterVector theta_;
  std::unique_ptr<CovarianceSpec> spec_;
  std::vector<InputPoint> source_points_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd resid_weights_;
  double marginal_variance_ = 0.0;
};

/// Kriging prediction at covariate-tagged targets from a converged fit.
inline PredictionResult krige(const FitResult& fit, const ObservationSet& data,
                              const std::vector<InputPoint>& targets,
                              const Eigen::MatrixXd& target_design) {
  return KrigingModel(fit, data).predict(targets, target_design);
}

/// Batched grid prediction.  The factorization is shared across batches and
/// batches may run on several threads; outputs are ordered by grid row and
/// identical for every batch size and thread count.
inline PredictionResult predict_grid(const FitResult& fit, const ObservationSet& data,
                                     const std::vector<InputPoint>& grid_points,
                                     const Eigen::MatrixXd& grid_design,
                                     Eigen::Index batch_size = 500, int threads = 1) {
  const Eigen::Index m = static_cast<Eigen::Index>(grid_points.size());
  PredictionResult out;
  out.points = grid_points;
  out.mean.resize(m);
  out.sd_y.resize(m);
  out.sd_s.resize(m);
  out.lower95.resize(m);
  out.upper95.resize(m);
  if (m == 0) return out;
  if (batch_size < 1) batch_size = m;

  const KrigingModel model(fit, data);
  const Eigen::Index n_batches = (m + batch_size - 1) / batch_size;

  std::atomic<Eigen::Index> next{0};
  auto worker = [&]() {
    for (;;) {
      const Eigen::Index b = next.fetch_add(1);
      if (b >= n_batches) break;
      const Eigen::Index lo = b * batch_size;
      const Eigen::Index len = std::min(batch_size, m - lo);
      std::vector<InputPoint> batch(grid_points.begin() + lo, grid_points.begin() + lo + len);
      const PredictionResult r = model.predict(batch, grid_design.middleRows(lo, len));
      out.mean.segment(lo, len) = r.mean;
      out.sd_y.segment(lo, len) = r.sd_y;
      out.sd_s.segment(lo, len) = r.sd_s;
      out.lower95.segment(lo, len) = r.lower95;
      out.upper95.segment(lo, len) = r.upper95;
    }
  };

  if (threads <= 1 || n_batches == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n_workers = static_cast<int>(std::min<Eigen::Index>(threads, n_batches));
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace nsgeo
