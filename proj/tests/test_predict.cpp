// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0

#include "nsgeo/predict.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "nsgeo/simulate.hpp"

namespace nsgeo {
namespace {

ScenarioConfig demo_scenario(CovForm form, Eigen::Index n, double tau2 = 0.0) {
  ScenarioConfig cfg;
  cfg.form = form;
  if (form == CovForm::Stationary) {
    cfg.theta_true.beta = Eigen::VectorXd::Constant(1, 1.0);
    cfg.theta_true.phis = Eigen::VectorXd::Constant(1, 0.3);
  } else {
    cfg.theta_true.beta = Eigen::Vector3d(1.0, 0.5, -0.5);
    cfg.theta_true.phis = Eigen::Vector3d(0.3, 0.2, 0.1);
  }
  cfg.theta_true.sigma2 = 0.5;
  cfg.theta_true.tau2 = tau2;
  cfg.n = n;
  cfg.heldout_m = 0;
  cfg.master_seed = 880;
  return cfg;
}

/// Fit container wired up by hand so kriging is tested against known
/// parameters instead of an optimizer output.
FitResult manual_fit(const ScenarioConfig& cfg) {
  FitResult fit;
  fit.config = cfg.model_config(cfg.form);
  fit.theta_hat = cfg.theta_true;
  fit.covariate_scales.assign(static_cast<std::size_t>(fit.config.p()), 1.0);
  fit.converged = true;
  return fit;
}

TEST(Krige, InterpolatesObservedPointsWithoutNugget) {
  for (CovForm form : {CovForm::Stationary, CovForm::PartialSum}) {
    const ScenarioConfig cfg = demo_scenario(form, 40);
    const SimulatedDataset data = sample_dataset(cfg, 0);
    const FitResult fit = manual_fit(cfg);
    const PredictionResult pred =
        krige(fit, data.observed, data.observed.points(), data.observed.design);
    for (Eigen::Index i = 0; i < data.observed.n(); ++i) {
      EXPECT_NEAR(pred.mean(i), data.observed.outcome(i), 1e-6) << to_string(form);
      EXPECT_NEAR(pred.sd_s(i), 0.0, 1e-4);
      EXPECT_NEAR(pred.sd_y(i), 0.0, 1e-4);
    }
  }
}

TEST(Krige, FarFieldRevertsToMeanAndMarginalVariance) {
  const ScenarioConfig cfg = demo_scenario(CovForm::Product, 30);
  const SimulatedDataset data = sample_dataset(cfg, 1);
  const FitResult fit = manual_fit(cfg);

  InputPoint far;
  far.coords = Eigen::Vector2d(500.0, 500.0);
  far.covariates["e1"] = 0.2;
  far.covariates["e2"] = -0.3;
  Eigen::MatrixXd design(1, 3);
  design << 1.0, 0.2, -0.3;
  const PredictionResult pred = krige(fit, data.observed, {far}, design);
  const double trend = 1.0 + 0.5 * 0.2 + -0.5 * -0.3;
  EXPECT_NEAR(pred.mean(0), trend, 1e-10);
  EXPECT_NEAR(pred.sd_y(0), std::sqrt(0.5), 1e-10);
}

TEST(Krige, MatchesHandComputedTwoPointSystem) {
  // Stationary, two observations, one target: every quantity is computable
  // with scalar algebra.
  ScenarioConfig cfg = demo_scenario(CovForm::Stationary, 2, 0.04);
  Eigen::MatrixXd coords(2, 2);
  coords << 0.0, 0.0, 1.0, 0.0;
  Eigen::MatrixXd design = Eigen::MatrixXd::Ones(2, 1);
  Eigen::VectorXd y(2);
  y << 1.4, 0.6;
  const ObservationSet data(coords, design, {"intercept"}, Eigen::MatrixXd(), {}, y);
  const FitResult fit = manual_fit(cfg);

  InputPoint target;
  target.coords = Eigen::Vector2d(0.25, 0.5);
  const PredictionResult pred = krige(fit, data, {target}, Eigen::MatrixXd::Ones(1, 1));

  const MaternKernel kernel(0.3, 1.5);
  const double sigma2 = 0.5, tau2 = 0.04, beta = 1.0;
  const double c01 = sigma2 * matern_correlation(1.0, kernel);
  const double d = sigma2 + tau2;
  Eigen::Matrix2d sigma;
  sigma << d, c01, c01, d;
  Eigen::Vector2d c(sigma2 * matern_correlation(target.coords.norm(), kernel),
                    sigma2 * matern_correlation((target.coords - Eigen::Vector2d(1.0, 0.0)).norm(),
                                                kernel));
  const Eigen::Vector2d resid = y.array() - beta;
  const Eigen::Matrix2d sigma_inv = sigma.inverse();
  const double mean = beta + c.dot(sigma_inv * resid);
  const double var_s = sigma2 - c.dot(sigma_inv * c);
  EXPECT_NEAR(pred.mean(0), mean, 1e-12);
  EXPECT_NEAR(pred.sd_s(0), std::sqrt(var_s), 1e-12);
  EXPECT_NEAR(pred.sd_y(0), std::sqrt(var_s + tau2), 1e-12);
  EXPECT_NEAR(pred.upper95(0) - pred.mean(0), 1.9599639845400542 * pred.sd_y(0), 1e-12);
  EXPECT_NEAR(pred.mean(0) - pred.lower95(0), 1.9599639845400542 * pred.sd_y(0), 1e-12);
}

TEST(Krige, MatchesDenseLinearAlgebraOnHeldOutPoints) {
  ScenarioConfig cfg = demo_scenario(CovForm::FullSum, 35);
  cfg.heldout_m = 8;
  const SimulatedDataset data = sample_dataset(cfg, 2);
  ASSERT_TRUE(data.heldout.has_value());
  const FitResult fit = manual_fit(cfg);
  const PredictionResult pred =
      krige(fit, data.observed, data.heldout->points(), data.heldout->design);

  const CovarianceSpec spec = fit.config.make_spec(cfg.theta_true);
  const Eigen::MatrixXd sigma =
      covariance_matrix(data.observed.points(), spec, cfg.theta_true.tau2);
  const Eigen::MatrixXd sigma_inv = sigma.inverse();
  const Eigen::MatrixXd cross = cross_covariance(data.heldout->points(),
                                                 data.observed.points(), spec);
  const Eigen::VectorXd resid =
      data.observed.outcome - data.observed.design * cfg.theta_true.beta;
  for (Eigen::Index i = 0; i < 8; ++i) {
    const double mean =
        data.heldout->design.row(i).dot(cfg.theta_true.beta) + cross.row(i).dot(sigma_inv * resid);
    const double var_s =
        spec.marginal_variance() - cross.row(i).dot(sigma_inv * cross.row(i).transpose());
    EXPECT_NEAR(pred.mean(i), mean, 1e-8);
    EXPECT_NEAR(pred.sd_s(i) * pred.sd_s(i), var_s, 1e-8);
  }
}

TEST(Krige, VarianceStaysNonNegativeAndBelowMarginal) {
  const ScenarioConfig cfg = demo_scenario(CovForm::PartialSum, 50);
  SimulatedDataset data = sample_dataset(cfg, 3);
  ScenarioConfig target_cfg = cfg;
  target_cfg.master_seed = 881;
  const SimulatedDataset targets = sample_dataset(target_cfg, 0);
  const FitResult fit = manual_fit(cfg);
  const PredictionResult pred =
      krige(fit, data.observed, targets.observed.points(), targets.observed.design);
  const double marginal = fit.config.make_spec(cfg.theta_true).marginal_variance();
  for (Eigen::Index i = 0; i < pred.mean.size(); ++i) {
    EXPECT_GE(pred.sd_s(i), 0.0);
    EXPECT_LE(pred.sd_s(i) * pred.sd_s(i), marginal + 1e-12);
    EXPECT_GE(pred.sd_y(i), pred.sd_s(i));
  }
}

TEST(PredictGrid, BatchSizeAndThreadCountDoNotChangeResults) {
  ScenarioConfig cfg = demo_scenario(CovForm::Product, 40);
  cfg.heldout_m = 33;
  const SimulatedDataset data = sample_dataset(cfg, 4);
  const FitResult fit = manual_fit(cfg);
  const auto points = data.heldout->points();
  const Eigen::MatrixXd& design = data.heldout->design;

  const PredictionResult one_batch = predict_grid(fit, data.observed, points, design, 1000, 1);
  const PredictionResult small_batches = predict_grid(fit, data.observed, points, design, 5, 1);
  const PredictionResult threaded = predict_grid(fit, data.observed, points, design, 5, 4);
  EXPECT_EQ(one_batch.mean, small_batches.mean);
  EXPECT_EQ(one_batch.sd_y, small_batches.sd_y);
  EXPECT_EQ(one_batch.mean, threaded.mean);
  EXPECT_EQ(one_batch.sd_y, threaded.sd_y);
  EXPECT_EQ(one_batch.lower95, threaded.lower95);
  EXPECT_EQ(one_batch.upper95, threaded.upper95);
}

TEST(Krige, RejectsMismatchedTargetDesign) {
  const ScenarioConfig cfg = demo_scenario(CovForm::Stationary, 10);
  const SimulatedDataset data = sample_dataset(cfg, 5);
  const FitResult fit = manual_fit(cfg);
  InputPoint target;
  target.coords = Eigen::Vector2d(0.5, 0.5);
  EXPECT_THROW(krige(fit, data.observed, {target}, Eigen::MatrixXd::Ones(2, 1)), SchemaError);
  EXPECT_THROW(krige(fit, data.observed, {target}, Eigen::MatrixXd::Ones(1, 3)), SchemaError);
}

TEST(Krige, EmptyTargetListYieldsEmptyResult) {
  const ScenarioConfig cfg = demo_scenario(CovForm::Stationary, 10);
  const SimulatedDataset data = sample_dataset(cfg, 6);
  const FitResult fit = manual_fit(cfg);
  const PredictionResult pred = krige(fit, data.observed, {}, Eigen::MatrixXd(0, 1));
  EXPECT_EQ(pred.mean.size(), 0);
  EXPECT_TRUE(pred.points.empty());
}

}  // namespace
}  // namespace nsgeo
