// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsgeo/covariance.hpp"
#include "nsgeo/errors.hpp"

namespace nsgeo {

/// Outcomes, coordinates, mean-structure design matrix and the covariate
/// columns that enter the covariance structure.  All blocks share row order.
struct ObservationSet {
  Eigen::MatrixXd coords;          // n x 2 (lon, lat or planar x, y)
  Eigen::MatrixXd design;          // n x q, first column is the intercept
  std::vector<std::string> design_names;
  Eigen::MatrixXd cov_covariates;  // n x p
  std::vector<std::string> cov_names;
  Eigen::VectorXd outcome;         // n

  ObservationSet(Eigen::MatrixXd coords_in, Eigen::MatrixXd design_in,
                 std::vector<std::string> design_names_in, Eigen::MatrixXd cov_covariates_in,
                 std::vector<std::string> cov_names_in, Eigen::VectorXd outcome_in)
      : coords(std::move(coords_in)),
        design(std::move(design_in)),
        design_names(std::move(design_names_in)),
        cov_covariates(std::move(cov_covariates_in)),
        cov_names(std::move(cov_names_in)),
        outcome(std::move(outcome_in)) {
    const Eigen::Index n = coords.rows();
    if (n < 1) throw std::invalid_argument("ObservationSet: need at least one row");
    if (coords.cols() != 2) throw std::invalid_argument("ObservationSet: coords must be n x 2");
    if (design.rows() != n || outcome.size() != n ||
        (cov_covariates.size() > 0 && cov_covariates.rows() != n)) {
      throw std::invalid_argument("ObservationSet: row counts disagree");
    }
    if (static_cast<Eigen::Index>(design_names.size()) != design.cols()) {
      throw std::invalid_argument("ObservationSet: design names do not match design columns");
    }
    if (static_cast<Eigen::Index>(cov_names.size()) != cov_covariates.cols()) {
      throw std::invalid_argument("ObservationSet: covariate names do not match columns");
    }
    if (!coords.allFinite() || !design.allFinite() || !outcome.allFinite() ||
        (cov_covariates.size() > 0 && !cov_covariates.allFinite())) {
      throw std::invalid_argument("ObservationSet: non-finite entries");
    }
  }

  Eigen::Index n() const { return coords.rows(); }
  Eigen::Index q() const { return design.cols(); }
  Eigen::Index p() const { return cov_covariates.cols(); }

  /// Rows as covariate-tagged points for the kernel API.
  std::vector<InputPoint> points() const {
    std::vector<InputPoint> pts(static_cast<std::size_t>(n()));
    for (Eigen::Index i = 0; i < n(); ++i) {
      pts[static_cast<std::size_t>(i)].coords = coords.row(i).transpose();
      for (Eigen::Index j = 0; j < p(); ++j) {
        pts[static_cast<std::size_t>(i)].covariates[cov_names[static_cast<std::size_t>(j)]] =
            cov_covariates(i, j);
      }
    }
    return pts;
  }
};

/// Full parameter vector: regression coefficients, process variance, one
/// scale per kernel (spatial first, then covariate kernels in spec order)
/// and the nugget variance.  Layout on the unconstrained scale is
///   [ beta..., log sigma2, log phi_1 ... log phi_{p+1}, log tau2 ]
/// with tau2 = 0 mapped to the floor log(1e-10).
struct ParameterVector {
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  Eigen::VectorXd phis;
  double tau2 = 0.0;

  static constexpr double kTau2Floor = 1e-10;

  void validate() const {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
      throw std::invalid_argument("ParameterVector: sigma2 must be positive");
    }
    if (phis.size() < 1 || !(phis.array() > 0.0).all() || !phis.allFinite()) {
      throw std::invalid_argument("ParameterVector: all phis must be positive");
    }
    if (tau2 < 0.0 || !std::isfinite(tau2)) {
      throw std::invalid_argument("ParameterVector: tau2 must be non-negative");
    }
    if (!beta.allFinite()) {
      throw std::invalid_argument("ParameterVector: beta must be finite");
    }
  }

  Eigen::Index dim() const { return beta.size() + phis.size() + 2; }

  Eigen::VectorXd to_unconstrained() const {
    Eigen::VectorXd v(dim());
    v.head(beta.size()) = beta;
    v(beta.size()) = std::log(sigma2);
    v.segment(beta.size() + 1, phis.size()) = phis.array().log();
    v(dim() - 1) = std::log(tau2 > kTau2Floor ? tau2 : kTau2Floor);
    return v;
  }

  static ParameterVector from_unconstrained(const Eigen::VectorXd& v, Eigen::Index q,
                                            Eigen::Index n_phis) {
    if (v.size() != q + n_phis + 2) {
      throw std::invalid_argument("from_unconstrained: expected length " +
                                  std::to_string(q + n_phis + 2) + ", got " +
                                  std::to_string(v.size()));
    }
    ParameterVector theta;
    theta.beta = v.head(q);
    theta.sigma2 = std::exp(v(q));
    theta.phis = v.segment(q + 1, n_phis).array().exp();
    theta.tau2 = std::exp(v(v.size() - 1));
    return theta;
  }

  /// Natural-scale values in unconstrained layout order.
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(dim()));
    for (Eigen::Index i = 0; i < beta.size(); ++i) out.push_back(beta(i));
    out.push_back(sigma2);
    for (Eigen::Index i = 0; i < phis.size(); ++i) out.push_back(phis(i));
    out.push_back(tau2);
    return out;
  }
};

struct FitOptions {
  int restarts = 5;
  int max_iter = 200;
  double grad_tol_abs = 1e-3;   // convergence: ||grad||_inf <= abs + rel * |loglik|
  double grad_tol_rel = 1e-5;
  double rel_tol = 1e-10;       // objective stall threshold
  double grad_step = 1e-5;      // central-difference gradient step factor
  double hess_step = 1e-4;      // central-difference Hessian step factor
  double restart_jitter_sd = 0.25;
  std::uint64_t seed = 1;
  double ci_level = 0.95;
  bool ci_log_scale = true;     // intervals for positive parameters formed on log scale
  /// When set, sigma2/phis/tau2 are held at these values and only beta is
  /// optimized (used by the generalized-least-squares cross-check).
  std::optional<ParameterVector> fixed_covariance;
};

/// Declarative model: covariance form, smoothness assignments, which columns
/// enter the mean and which enter the covariance, plus fit options.
struct ModelConfig {
  struct CovCovariate {
    std::string name;
    double kappa = 1.5;
    bool standardize = false;
  };

  CovForm form = CovForm::Stationary;
  double kappa_spatial = 1.5;
  std::vector<std::string> mean_covariates;  // design = intercept + these
  std::vector<CovCovariate> cov_covariates;
  SpatialDistance distance = SpatialDistance::Euclidean;
  FitOptions fit;
  std::string label;  // used by compare and reports

  Eigen::Index p() const { return static_cast<Eigen::Index>(cov_covariates.size()); }
  Eigen::Index q() const { return static_cast<Eigen::Index>(mean_covariates.size()) + 1; }
  Eigen::Index n_phis() const { return p() + 1; }
  Eigen::Index n_parameters() const { return q() + n_phis() + 2; }

  void validate() const {
    if (form == CovForm::Stationary && p() != 0) {
      throw ConfigError("stationary form takes no covariance covariates");
    }
    if (form != CovForm::Stationary && p() == 0) {
      throw ConfigError(to_string(form) + " form needs at least one covariance covariate");
    }
  }

  /// Concrete covariance spec for parameter values theta.  `scales[j]`
  /// multiplies the j-th covariate kernel's phi, which is how per-covariate
  /// standardization is folded into kernels that consume raw differences.
  CovarianceSpec make_spec(const ParameterVector& theta,
                           const std::vector<double>& scales = {}) const {
    if (theta.phis.size() != n_phis()) {
      throw std::invalid_argument("make_spec: theta has " + std::to_string(theta.phis.size()) +
                                  " phis, config needs " + std::to_string(n_phis()));
    }
    std::vector<std::pair<std::string, MaternKernel>> kernels;
    kernels.reserve(cov_covariates.size());
    for (std::size_t j = 0; j < cov_covariates.size(); ++j) {
      const double scale = scales.empty() ? 1.0 : scales[j];
      kernels.emplace_back(cov_covariates[j].name,
                           MaternKernel(theta.phis(static_cast<Eigen::Index>(j) + 1) * scale,
                                        cov_covariates[j].kappa));
    }
    return CovarianceSpec(form, MaternKernel(theta.phis(0), kappa_spatial), std::move(kernels),
                          theta.sigma2, distance);
  }

  /// Parameter labels in unconstrained layout order.
  std::vector<std::string> parameter_names() const {
    std::vector<std::string> names;
    names.push_back("beta:intercept");
    for (const auto& m : mean_covariates) names.push_back("beta:" + m);
    names.push_back("sigma2");
    names.push_back("phi:space");
    for (const auto& c : cov_covariates) names.push_back("phi:" + c.name);
    names.push_back("tau2");
    return names;
  }
};

}  // namespace nsgeo
