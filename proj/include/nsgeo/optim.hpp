// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace nsgeo {

/// Minimization outcome.  `converged` means either the final infinity-norm
/// of the numeric gradient met `grad_tol_abs + grad_tol_rel * |f|`, or the
/// objective stalled below `rel_tol` per step even after a restart from a
/// fresh unit Hessian (`reason == "f_stall"`, the standard
/// relative-function-tolerance success).  Iteration-cap and line-search
/// exits report converged = false.
struct OptimResult {
  Eigen::VectorXd x;
  double fval = std::numeric_limits<double>::quiet_NaN();
  double grad_norm_inf = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  long n_evals = 0;
  bool converged = false;
  std::string reason;
};

struct OptimOptions {
  int max_iter = 200;
  double grad_tol_abs = 1e-3;
  double grad_tol_rel = 1e-5;
  double rel_tol = 1e-10;
  double grad_step = 1e-5;
};

/// Central-difference gradient with per-component step h_i = step (1 + |x_i|).
template <typename F>
Eigen::VectorXd numeric_gradient(F&& f, const Eigen::VectorXd& x, double step, long* n_evals) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * (1.0 + std::abs(x(i)));
    const double xi = x(i);
    xp(i) = xi + h;
    const double fp = f(xp);
    xp(i) = xi - h;
    const double fm = f(xp);
    xp(i) = xi;
    g(i) = (fp - fm) / (2.0 * h);
  }
  if (n_evals != nullptr) *n_evals += 2 * x.size();
  return g;
}

/// Central-difference Hessian with per-component step h_i = step (1 + |x_i|).
template <typename F>
Eigen::MatrixXd numeric_hessian(F&& f, const Eigen::VectorXd& x, double step) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd h(d);
  for (Eigen::Index i = 0; i < d; ++i) h(i) = step * (1.0 + std::abs(x(i)));

  Eigen::MatrixXd hess(d, d);
  const double f0 = f(x);
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < d; ++i) {
    xp(i) = x(i) + h(i);
    const double fp = f(xp);
    xp(i) = x(i) - h(i);
    const double fm = f(xp);
    xp(i) = x(i);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      xp(i) = x(i) + h(i);
      xp(j) = x(j) + h(j);
      const double fpp = f(xp);
      xp(j) = x(j) - h(j);
      const double fpm = f(xp);
      xp(i) = x(i) - h(i);
      const double fmm = f(xp);
      xp(j) = x(j) + h(j);
      const double fmp = f(xp);
      xp(i) = x(i);
      xp(j) = x(j);
      const double v = (fpp - fpm - fmp + fmm) / (4.0 * h(i) * h(j));
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

/// Dense BFGS with numerically differenced gradients and Armijo
/// backtracking.  Non-finite objective values are treated as infeasible and
/// handled by the line search.
template <typename F>
OptimResult minimize_bfgs(F&& f, const Eigen::VectorXd& x0, const OptimOptions& opts) {
  constexpr double kArmijo = 1e-4;
  const Eigen::Index d = x0.size();

  OptimResult result;
  result.x = x0;

  long evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  double fx = eval(result.x);
  if (!std::isfinite(fx)) {
    result.fval = fx;
    result.n_evals = evals;
    result.reason = "infeasible_start";
    return result;
  }
  Eigen::VectorXd g = numeric_gradient(f, result.x, opts.grad_step, &evals);

  const auto grad_tol = [&](double fval) {
    return opts.grad_tol_abs + opts.grad_tol_rel * std::abs(fval);
  };

  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(d, d);
  bool first_update = true;
  bool fresh_hessian = true;  // no curvature gathered since the last reset
  int stall_count = 0;
  std::string reason = "max_iter";

  // Stale curvature is the usual cause of a failed line search or a stalled
  // objective, so both get one fresh start from a unit Hessian before the
  // run gives up.
  const auto reset_hessian = [&]() {
    hinv.setIdentity();
    first_update = true;
    fresh_hessian = true;
    stall_count = 0;
  };

  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (!g.allFinite()) {
      reason = "non_finite_gradient";
      break;
    }
    if (g.lpNorm<Eigen::Infinity>() <= grad_tol(fx)) {
      reason = "gradient";
      break;
    }

    Eigen::VectorXd direction = -(hinv * g);
    double slope = direction.dot(g);
    if (!(slope < 0.0)) {
      reset_hessian();
      direction = -g;
      slope = -g.squaredNorm();
    }

    double alpha = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = result.x + alpha * direction;
      f_new = eval(x_new);
      if (f_new <= fx + kArmijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (!fresh_hessian) {
        reset_hessian();
        continue;  // retry from the same point along steepest descent
      }
      reason = "line_search_failed";
      break;
    }

    Eigen::VectorXd g_new = numeric_gradient(f, x_new, opts.grad_step, &evals);
    const Eigen::VectorXd s = x_new - result.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (y.allFinite() && sy > 1e-12 * s.norm() * y.norm()) {
      if (first_update) {
        hinv *= sy / y.squaredNorm();
        first_update = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = hinv * y;
      const double yhy = y.dot(hy);
      // BFGS inverse update.
      hinv.noalias() += ((sy + yhy) * rho * rho) * (s * s.transpose());
      hinv.noalias() -= rho * (hy * s.transpose() + s * hy.transpose());
      fresh_hessian = false;
    }

    const double improvement = fx - f_new;
    result.x = x_new;
    fx = f_new;
    g = g_new;

    if (improvement <= opts.rel_tol * (1.0 + std::abs(fx))) {
      if (++stall_count >= 2) {
        if (!fresh_hessian) {
          reset_hessian();
        } else {
          reason = "f_stall";
          break;
        }
      }
    } else {
      stall_count = 0;
    }
  }

  result.fval = fx;
  result.grad_norm_inf = g.allFinite() ? g.lpNorm<Eigen::Infinity>()
                                       : std::numeric_limits<double>::infinity();
  result.iterations = iter;
  result.n_evals = evals;
  // A small gradient is the preferred certificate, but an objective that
  // stalls below rel_tol through a fresh steepest-descent restart also counts
  // as success, the usual relative-function-tolerance rule.  Some objectives
  // (e.g. a likelihood rising toward a supremum as a range parameter grows
  // without bound) have no stationary point at all, and the stalled value is
  // the usable optimum.
  result.converged = result.grad_norm_inf <= grad_tol(fx) || reason == "f_stall";
  result.reason = reason;
  return result;
}

}  // namespace nsgeo
