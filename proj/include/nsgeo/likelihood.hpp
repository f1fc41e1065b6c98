// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nsgeo/errors.hpp"
#include "nsgeo/matern.hpp"
#include "nsgeo/model.hpp"
#include "nsgeo/optim.hpp"
#include "nsgeo/rng.hpp"
#include "nsgeo/stats.hpp"

namespace nsgeo {

struct InformationCriteria {
  double aic;
  double bic;
};

/// AIC = -2 l + 2k, BIC = -2 l + k ln n.
inline InformationCriteria information_criteria(double loglik, int k, Eigen::Index n) {
  if (k < 0 || n < 1) {
    throw std::invalid_argument("information_criteria: need k >= 0 and n >= 1");
  }
  return {-2.0 * loglik + 2.0 * static_cast<double>(k),
          -2.0 * loglik + static_cast<double>(k) * std::log(static_cast<double>(n))};
}

/// Factorize sigma in place, escalating a diagonal jitter of
/// 1e-10 .. 1e-6 times mean(diag) on failure.  Returns the jitter applied.
/// Throws SingularCovarianceError carrying `theta_values` when exhausted.
inline double cholesky_with_jitter(Eigen::MatrixXd& sigma, Eigen::LLT<Eigen::MatrixXd>& llt,
                                   const std::vector<double>& theta_values) {
  if (!sigma.allFinite()) {
    throw SingularCovarianceError("covariance matrix has non-finite entries", theta_values);
  }
  // Eigen's LLT only reports failure on a negative pivot, so an exactly
  // singular matrix (duplicated rows, say) can pass with a rounding-level
  // pivot.  Require every pivot to clear a scale-aware floor as well.
  const double pivot_floor2 = 4.0 * static_cast<double>(sigma.rows()) *
                              std::numeric_limits<double>::epsilon() *
                              sigma.diagonal().maxCoeff();
  const auto usable = [&]() {
    if (llt.info() != Eigen::Success) return false;
    const double min_pivot = llt.matrixLLT().diagonal().minCoeff();
    return min_pivot > 0.0 && min_pivot * min_pivot > pivot_floor2;
  };
  llt.compute(sigma);
  if (usable()) return 0.0;

  const double mean_diag = sigma.diagonal().mean();
  for (double level = 1e-10; level <= 1.0000001e-6; level *= 10.0) {
    const double jitter = level * mean_diag;
    sigma.diagonal().array() += jitter;
    llt.compute(sigma);
    if (usable()) return jitter;
  }
  throw SingularCovarianceError("covariance factorization failed after jitter escalation",
                                theta_values);
}

namespace detail {

/// Elementwise Matern over a precomputed distance matrix.  Closed forms are
/// evaluated as vectorized array expressions; general smoothness falls back
/// to the scalar Bessel route.
inline void matern_fill(const Eigen::MatrixXd& dist, double phi, double kappa,
                        Eigen::MatrixXd& out) {
  const auto d = dist.array();
  if (kappa == 0.5) {
    out = (-(d / phi)).exp().matrix();
  } else if (kappa == 1.5) {
    const double c = std::sqrt(3.0) / phi;
    out = ((1.0 + c * d) * (-(c * d)).exp()).matrix();
  } else if (kappa == 2.5) {
    const double c = std::sqrt(5.0) / phi;
    out = ((1.0 + c * d + (c * d).square() / 3.0) * (-(c * d)).exp()).matrix();
  } else {
    out.resize(dist.rows(), dist.cols());
    for (Eigen::Index j = 0; j < dist.cols(); ++j) {
      for (Eigen::Index i = 0; i < dist.rows(); ++i) {
        out(i, j) = matern_general(dist(i, j) / phi, kappa);
      }
    }
  }
}

}  // namespace detail

/// Precomputes the distance matrices of an observation set so the covariance
/// can be reassembled cheaply for every candidate theta during optimization.
/// Instances hold scratch buffers and are not safe for concurrent use; each
/// fit builds its own.
class LikelihoodEvaluator {
public:
  LikelihoodEvaluator(const ObservationSet& data, const ModelConfig& config)
      : data_(data), config_(config) {
    config_.validate();
    const Eigen::Index n = data.n();
    if (data.p() != config.p()) {
      throw SchemaError("observation set carries " + std::to_string(data.p()) +
                        " covariance covariates, config needs " + std::to_string(config.p()));
    }
    for (Eigen::Index j = 0; j < config.p(); ++j) {
      if (data.cov_names[static_cast<std::size_t>(j)] !=
          config.cov_covariates[static_cast<std::size_t>(j)].name) {
        throw SchemaError("covariance covariate order mismatch: data has '" +
                          data.cov_names[static_cast<std::size_t>(j)] + "', config expects '" +
                          config.cov_covariates[static_cast<std::size_t>(j)].name + "'");
      }
    }

    spatial_dist_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      spatial_dist_(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double u = spatial_separation(data.coords.row(i).transpose(),
                                            data.coords.row(j).transpose(), config.distance);
        spatial_dist_(i, j) = u;
        spatial_dist_(j, i) = u;
      }
    }

    scales_.assign(static_cast<std::size_t>(config.p()), 1.0);
    cov_dist_.resize(static_cast<std::size_t>(config.p()));
    for (Eigen::Index j = 0; j < config.p(); ++j) {
      const auto& cc = config.cov_covariates[static_cast<std::size_t>(j)];
      if (cc.standardize && n > 1) {
        const auto col = data.cov_covariates.col(j);
        const double mean = col.mean();
        const double sd =
            std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n - 1));
        if (sd > 0.0) scales_[static_cast<std::size_t>(j)] = sd;
      }
      const double inv_scale = 1.0 / scales_[static_cast<std::size_t>(j)];
      Eigen::MatrixXd& dm = cov_dist_[static_cast<std::size_t>(j)];
      dm.resize(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        dm(i, i) = 0.0;
        for (Eigen::Index k = i + 1; k < n; ++k) {
          const double d = std::abs(data.cov_covariates(i, j) - data.cov_covariates(k, j)) * inv_scale;
          dm(i, k) = d;
          dm(k, i) = d;
        }
      }
    }

    sigma_.resize(n, n);
    kernel_scratch_.resize(n, n);
    resid_.resize(n);
  }

  const ObservationSet& data() const { return data_; }
  const ModelConfig& config() const { return config_; }

  /// Per-covariate standardization scales (1.0 for raw covariates).
  const std::vector<double>& covariate_scales() const { return scales_; }

  double max_spatial_distance() const { return spatial_dist_.maxCoeff(); }
  double max_covariate_distance(Eigen::Index j) const {
    return cov_dist_[static_cast<std::size_t>(j)].maxCoeff();
  }

  /// Assembles sigma(theta) including the nugget.  Distances are the
  /// precomputed (possibly standardized) ones; phis apply to those units.
  void build_sigma(const ParameterVector& theta, Eigen::MatrixXd& out) const {
    detail::matern_fill(spatial_dist_, theta.phis(0), config_.kappa_spatial, out);
    switch (config_.form) {
      case CovForm::Stationary:
        break;
      case CovForm::Product:
        for (Eigen::Index j = 0; j < config_.p(); ++j) {
          detail::matern_fill(cov_dist_[static_cast<std::size_t>(j)], theta.phis(j + 1),
                              config_.cov_covariates[static_cast<std::size_t>(j)].kappa,
                              kernel_scratch_);
          out.array() *= kernel_scratch_.array();
        }
        break;
      case CovForm::PartialSum: {
        detail::matern_fill(cov_dist_[0], theta.phis(1),
                            config_.cov_covariates[0].kappa, kernel_scratch_);
        Eigen::MatrixXd sum = kernel_scratch_;
        for (Eigen::Index j = 1; j < config_.p(); ++j) {
          detail::matern_fill(cov_dist_[static_cast<std::size_t>(j)], theta.phis(j + 1),
                              config_.cov_covariates[static_cast<std::size_t>(j)].kappa,
                              kernel_scratch_);
          sum.array() += kernel_scratch_.array();
        }
        out.array() *= sum.array();
        break;
      }
      case CovForm::FullSum:
        for (Eigen::Index j = 0; j < config_.p(); ++j) {
          detail::matern_fill(cov_dist_[static_cast<std::size_t>(j)], theta.phis(j + 1),
                              config_.cov_covariates[static_cast<std::size_t>(j)].kappa,
                              kernel_scratch_);
          out.array() += kernel_scratch_.array();
        }
        break;
    }
    out *= theta.sigma2;
    out.diagonal().array() += theta.tau2;
  }

  /// Multivariate-normal log-likelihood via triangular factorization:
  /// log-determinant from the factor diagonal, quadratic form from a
  /// triangular solve.
  double loglik(const ParameterVector& theta) const {
    theta.validate();
    build_sigma(theta, sigma_);
    cholesky_with_jitter(sigma_, llt_, theta.flatten());
    resid_ = data_.outcome - data_.design * theta.beta;
    const double logdet = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
    const double quad = resid_.dot(llt_.solve(resid_));
    const double n = static_cast<double>(data_.n());
    return -0.5 * n * std::log(2.0 * M_PI) - 0.5 * logdet - 0.5 * quad;
  }

  /// Log-likelihood maximized over the mean coefficients in closed form.
  /// For the covariance described by `theta`, the generalized-least-squares
  /// beta is exact, so optimizing the remaining parameters over this profile
  /// reaches the same maximum as the joint problem in far fewer, better
  /// conditioned dimensions.  Writes the profiled beta back into `theta`.
  double profile_loglik(ParameterVector& theta) const {
    build_sigma(theta, sigma_);
    cholesky_with_jitter(sigma_, llt_, theta.flatten());
    weighted_design_ = llt_.solve(data_.design);
    theta.beta = (data_.design.transpose() * weighted_design_)
                     .ldlt()
                     .solve(weighted_design_.transpose() * data_.outcome);
    resid_ = data_.outcome - data_.design * theta.beta;
    const double logdet = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
    const double quad = resid_.dot(llt_.solve(resid_));
    const double n = static_cast<double>(data_.n());
    return -0.5 * n * std::log(2.0 * M_PI) - 0.5 * logdet - 0.5 * quad;
  }

private:
  const ObservationSet& data_;
  ModelConfig config_;
  Eigen::MatrixXd spatial_dist_;
  std::vector<Eigen::MatrixXd> cov_dist_;
  std::vector<double> scales_;
  mutable Eigen::MatrixXd sigma_;
  mutable Eigen::MatrixXd kernel_scratch_;
  mutable Eigen::MatrixXd weighted_design_;
  mutable Eigen::VectorXd resid_;
  mutable Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// One-shot log-likelihood.  Hot paths keep a LikelihoodEvaluator instead.
inline double log_likelihood(const ParameterVector& theta, const ObservationSet& data,
                             const ModelConfig& config) {
  return LikelihoodEvaluator(data, config).loglik(theta);
}

/// Maximum-likelihood fit of one model to one observation set.
struct FitResult {
  ModelConfig config;
  ParameterVector theta_hat;
  std::vector<std::string> param_names;
  Eigen::VectorXd se_unconstrained;  // per parameter in layout order
  Eigen::VectorXd ci_lower, ci_upper;  // natural scale, at config.fit.ci_level
  double loglik = std::numeric_limits<double>::quiet_NaN();
  double aic = std::numeric_limits<double>::quiet_NaN();
  double bic = std::numeric_limits<double>::quiet_NaN();
  int k = 0;
  Eigen::Index n_obs = 0;
  bool converged = false;
  bool se_valid = false;
  double grad_norm_inf = std::numeric_limits<double>::quiet_NaN();
  std::string stop_reason;
  long n_evals = 0;
  int n_restarts = 0;
  int best_restart = 0;  // 1-based index of the winning restart
  std::vector<double> covariate_scales;
  std::uint64_t seed = 0;
};

/// Wald intervals at an arbitrary level from the stored standard errors.
/// Positive parameters get log-scale intervals (exponentiated endpoints)
/// when the fit was configured that way, delta-method raw-scale otherwise.
inline std::vector<std::pair<double, double>> wald_intervals(const FitResult& fit, double level) {
  if (!fit.se_valid) {
    throw InformationError("wald_intervals: observed information was singular; no standard errors");
  }
  if (!(level > 0.0) || !(level < 1.0)) {
    throw std::domain_error("wald_intervals: level must lie in (0, 1)");
  }
  const double z = normal_quantile(0.5 * (1.0 + level));
  const Eigen::Index q = fit.theta_hat.beta.size();
  const Eigen::VectorXd v = fit.theta_hat.to_unconstrained();
  const std::vector<double> natural = fit.theta_hat.flatten();
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double se = fit.se_unconstrained(i);
    const double value = natural[static_cast<std::size_t>(i)];
    if (i < q) {
      out.emplace_back(v(i) - z * se, v(i) + z * se);
    } else if (se == 0.0) {
      out.emplace_back(value, value);
    } else if (fit.config.fit.ci_log_scale) {
      out.emplace_back(std::exp(v(i) - z * se), std::exp(v(i) + z * se));
    } else {
      const double se_raw = se * value;  // delta method
      out.emplace_back(value - z * se_raw, value + z * se_raw);
    }
  }
  return out;
}

namespace detail {

inline Eigen::VectorXd initial_unconstrained(const LikelihoodEvaluator& eval,
                                             const Eigen::VectorXd& beta_ols, double resid_var) {
  const ModelConfig& config = eval.config();
  ParameterVector theta;
  theta.beta = beta_ols;
  const double s2 = std::max(resid_var, 1e-12);
  theta.sigma2 = 0.5 * s2;
  theta.tau2 = 0.5 * s2;
  theta.phis.resize(config.n_phis());
  theta.phis(0) = std::max(0.5 * eval.max_spatial_distance(), 1e-3);
  for (Eigen::Index j = 0; j < config.p(); ++j) {
    theta.phis(j + 1) = std::max(0.5 * eval.max_covariate_distance(j), 1e-3);
  }
  return theta.to_unconstrained();
}

}  // namespace detail

/// Maximizes the log-likelihood with BFGS on the unconstrained scale,
/// best-of-R restarts with multiplicative jitter exp(N(0, sd^2)) on the
/// positive parameters.  Standard errors come from the inverse of the
/// central-difference observed information at the optimum.
inline FitResult fit(const ObservationSet& data, const ModelConfig& config, RngStream restart_rng) {
  config.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index q = data.q();
  if (n <= q) {
    throw std::invalid_argument("fit: need more observations than mean parameters");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.design);
  if (qr.rank() < q) {
    throw std::invalid_argument("fit: design matrix is rank deficient");
  }

  LikelihoodEvaluator eval(data, config);

  const Eigen::VectorXd beta_ols = qr.solve(data.outcome);
  const double rss = (data.outcome - data.design * beta_ols).squaredNorm();
  const double resid_var = rss / static_cast<double>(n - q);

  const bool beta_only = config.fit.fixed_covariance.has_value();
  ParameterVector fixed;
  if (beta_only) {
    fixed = *config.fit.fixed_covariance;
    if (fixed.phis.size() != config.n_phis()) {
      throw std::invalid_argument("fit: fixed covariance parameters have the wrong phi count");
    }
  }

  // Joint objective over the full unconstrained layout; used in beta-only
  // mode and for the observed information at the end.
  auto joint_objective = [&](const Eigen::VectorXd& v) -> double {
    ParameterVector theta;
    if (beta_only) {
      theta = fixed;
      theta.beta = v;
    } else {
      theta = ParameterVector::from_unconstrained(v, q, config.n_phis());
    }
    try {
      return -eval.loglik(theta);
    } catch (const SingularCovarianceError&) {
      return std::numeric_limits<double>::infinity();
    } catch (const std::invalid_argument&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // General path: beta has a closed-form optimum given the covariance, so
  // the search runs over [log sigma2, log phis, log tau2] only.
  const Eigen::Index n_cov = config.n_phis() + 2;
  auto profile_objective = [&](const Eigen::VectorXd& v) -> double {
    Eigen::VectorXd full(q + n_cov);
    full.head(q).setZero();
    full.tail(n_cov) = v;
    ParameterVector theta = ParameterVector::from_unconstrained(full, q, config.n_phis());
    try {
      return -eval.profile_loglik(theta);
    } catch (const SingularCovarianceError&) {
      return std::numeric_limits<double>::infinity();
    } catch (const std::invalid_argument&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto objective = [&](const Eigen::VectorXd& v) -> double {
    return beta_only ? joint_objective(v) : profile_objective(v);
  };

  const Eigen::VectorXd v0 =
      beta_only
          ? Eigen::VectorXd(beta_ols)
          : Eigen::VectorXd(
                detail::initial_unconstrained(eval, beta_ols, resid_var).tail(n_cov));

  OptimOptions opts;
  opts.max_iter = config.fit.max_iter;
  opts.grad_tol_abs = config.fit.grad_tol_abs;
  opts.grad_tol_rel = config.fit.grad_tol_rel;
  opts.rel_tol = config.fit.rel_tol;
  opts.grad_step = config.fit.grad_step;

  const int restarts = beta_only ? 1 : std::max(1, config.fit.restarts);
  OptimResult best;
  int best_index = 0;
  long total_evals = 0;
  int n_failed = 0;
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd start = v0;
    if (r > 0) {
      // multiplicative jitter on the (all log-scale) covariance parameters
      for (Eigen::Index i = 0; i < start.size(); ++i) {
        start(i) += config.fit.restart_jitter_sd * restart_rng.normal();
      }
    }
    OptimResult run = minimize_bfgs(objective, start, opts);
    total_evals += run.n_evals;
    if (!std::isfinite(run.fval)) {
      ++n_failed;
      continue;
    }
    if (best_index == 0 || run.fval < best.fval) {
      best = run;
      best_index = r + 1;
    }
  }
  if (best_index == 0) {
    throw OptimizationError("fit: all " + std::to_string(restarts) +
                            " restarts failed (" + std::to_string(n_failed) +
                            " with non-finite objective)");
  }

  FitResult result;
  result.config = config;
  result.seed = config.fit.seed;
  Eigen::VectorXd x_full;  // full unconstrained optimum, for the information matrix
  if (beta_only) {
    result.theta_hat = fixed;
    result.theta_hat.beta = best.x;
    x_full = best.x;
  } else {
    x_full.resize(q + n_cov);
    x_full.head(q).setZero();
    x_full.tail(n_cov) = best.x;
    result.theta_hat = ParameterVector::from_unconstrained(x_full, q, config.n_phis());
    eval.profile_loglik(result.theta_hat);  // recover the profiled beta
    x_full.head(q) = result.theta_hat.beta;
  }
  result.param_names = config.parameter_names();
  result.loglik = -best.fval;
  result.k = beta_only ? static_cast<int>(q) : static_cast<int>(config.n_parameters());
  result.n_obs = n;
  const auto ic = information_criteria(result.loglik, result.k, n);
  result.aic = ic.aic;
  result.bic = ic.bic;
  result.converged = best.converged;
  result.grad_norm_inf = best.grad_norm_inf;
  result.stop_reason = best.reason;
  result.n_evals = total_evals;
  result.n_restarts = restarts;
  result.best_restart = best_index;
  result.covariate_scales = eval.covariate_scales();

  // Observed information on the unconstrained scale, taken from the joint
  // objective at the stitched optimum so the beta block is included even
  // when the search itself ran on the profiled covariance parameters.
  const Eigen::Index dim = config.n_parameters();
  result.se_unconstrained = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd info = numeric_hessian(joint_objective, x_full, config.fit.hess_step);
  Eigen::LLT<Eigen::MatrixXd> info_llt(info);
  if (info.allFinite() && info_llt.info() == Eigen::Success) {
    const Eigen::MatrixXd cov =
        info_llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.rows()));
    if (cov.allFinite() && (cov.diagonal().array() >= 0.0).all()) {
      if (beta_only) {
        result.se_unconstrained.head(q) = cov.diagonal().array().sqrt();
      } else {
        result.se_unconstrained = cov.diagonal().array().sqrt();
      }
      result.se_valid = true;
    }
  }

  result.ci_lower = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::quiet_NaN());
  result.ci_upper = result.ci_lower;
  if (result.se_valid) {
    const auto intervals = wald_intervals(result, config.fit.ci_level);
    for (Eigen::Index i = 0; i < dim; ++i) {
      result.ci_lower(i) = intervals[static_cast<std::size_t>(i)].first;
      result.ci_upper(i) = intervals[static_cast<std::size_t>(i)].second;
    }
  }
  return result;
}

inline FitResult fit(const ObservationSet& data, const ModelConfig& config) {
  return fit(data, config, RngStream(config.fit.seed, stream_purpose::fit(0), 0, 0));
}

}  // namespace nsgeo
