// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0

#include "nsgeo/optim.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

namespace nsgeo {
namespace {

TEST(NumericGradient, MatchesAnalyticOnSmoothFunction) {
  // f(x, y) = x^2 y + sin(y); grad = (2xy, x^2 + cos(y)).
  auto f = [](const Eigen::VectorXd& v) { return v(0) * v(0) * v(1) + std::sin(v(1)); };
  Eigen::VectorXd x(2);
  x << 1.3, -0.7;
  long evals = 0;
  const Eigen::VectorXd g = numeric_gradient(f, x, 1e-6, &evals);
  EXPECT_NEAR(g(0), 2.0 * 1.3 * -0.7, 1e-7);
  EXPECT_NEAR(g(1), 1.3 * 1.3 + std::cos(-0.7), 1e-7);
  EXPECT_EQ(evals, 4);
}

TEST(NumericHessian, MatchesAnalyticOnQuadratic) {
  Eigen::MatrixXd a(3, 3);
  a << 4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0;
  auto f = [&](const Eigen::VectorXd& v) { return 0.5 * v.dot(a * v); };
  const Eigen::VectorXd x = Eigen::Vector3d(0.3, -1.2, 0.9);
  const Eigen::MatrixXd h = numeric_hessian(f, x, 1e-4);
  EXPECT_LT((h - a).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MinimizeBfgs, SolvesQuadraticExactly) {
  // Minimum of 0.5 x'Ax - b'x is the solution of Ax = b.
  Eigen::MatrixXd a(2, 2);
  a << 3.0, 0.5, 0.5, 1.5;
  const Eigen::VectorXd b = Eigen::Vector2d(1.0, -2.0);
  auto f = [&](const Eigen::VectorXd& v) { return 0.5 * v.dot(a * v) - b.dot(v); };
  OptimOptions options;
  options.grad_tol_abs = 1e-8;
  options.grad_tol_rel = 0.0;
  const OptimResult result = minimize_bfgs(f, Eigen::Vector2d(5.0, 5.0), options);
  EXPECT_TRUE(result.converged) << result.reason;
  const Eigen::VectorXd expected = a.ldlt().solve(b);
  EXPECT_LT((result.x - expected).norm(), 1e-6);
}

TEST(MinimizeBfgs, SolvesRosenbrock) {
  auto f = [](const Eigen::VectorXd& v) {
    const double a = 1.0 - v(0);
    const double b = v(1) - v(0) * v(0);
    return a * a + 100.0 * b * b;
  };
  OptimOptions options;
  options.max_iter = 2000;
  options.grad_tol_abs = 1e-6;
  options.grad_tol_rel = 0.0;
  const OptimResult result = minimize_bfgs(f, Eigen::Vector2d(-1.2, 1.0), options);
  EXPECT_TRUE(result.converged) << result.reason;
  EXPECT_NEAR(result.x(0), 1.0, 1e-4);
  EXPECT_NEAR(result.x(1), 1.0, 1e-4);
  EXPECT_NEAR(result.fval, 0.0, 1e-8);
}

TEST(MinimizeBfgs, HandlesFlatDirectionViaStall) {
  // f depends on one coordinate only; the optimizer should stop cleanly.
  auto f = [](const Eigen::VectorXd& v) { return (v(0) - 2.0) * (v(0) - 2.0); };
  OptimOptions options;
  const OptimResult result = minimize_bfgs(f, Eigen::Vector2d(10.0, 3.0), options);
  EXPECT_NEAR(result.x(0), 2.0, 1e-3);
  EXPECT_NEAR(result.fval, 0.0, 1e-6);
}

TEST(MinimizeBfgs, SurvivesInfiniteBarrier) {
  // +inf outside the unit disc models a singular covariance rejection.
  auto f = [](const Eigen::VectorXd& v) {
    if (v.norm() > 1.0) return std::numeric_limits<double>::infinity();
    return (v - Eigen::Vector2d(0.2, 0.1).eval()).squaredNorm();
  };
  OptimOptions options;
  options.grad_tol_abs = 1e-6;
  const OptimResult result = minimize_bfgs(f, Eigen::Vector2d(0.0, 0.0), options);
  EXPECT_LT((result.x - Eigen::Vector2d(0.2, 0.1)).norm(), 1e-3);
}

TEST(MinimizeBfgs, ReportsNonConvergenceOnIterationCap) {
  auto f = [](const Eigen::VectorXd& v) {
    const double a = 1.0 - v(0);
    const double b = v(1) - v(0) * v(0);
    return a * a + 100.0 * b * b;
  };
  OptimOptions options;
  options.max_iter = 2;
  options.grad_tol_abs = 1e-12;
  options.grad_tol_rel = 0.0;
  options.rel_tol = 0.0;
  const OptimResult result = minimize_bfgs(f, Eigen::Vector2d(-1.2, 1.0), options);
  EXPECT_FALSE(result.converged);
  EXPECT_FALSE(result.reason.empty());
}

TEST(MinimizeBfgs, ObjectiveStallCountsAsConvergence) {
  // A constant-gradient objective never yields a curvature update, so once
  // the per-step improvement falls under the (here loose) relative tolerance
  // the run ends on f_stall straight from a fresh Hessian.  That exit is a
  // success, the relative-function-tolerance rule most optimizers apply.
  auto f = [](const Eigen::VectorXd& v) { return -v(0); };
  OptimOptions options;
  options.rel_tol = 0.5;
  options.grad_tol_abs = 1e-12;
  options.grad_tol_rel = 0.0;
  Eigen::VectorXd x0(1);
  x0 << 0.0;
  const OptimResult result = minimize_bfgs(f, x0, options);
  EXPECT_EQ(result.reason, "f_stall");
  EXPECT_TRUE(result.converged);
  EXPECT_GT(result.grad_norm_inf, 0.5);
}

TEST(MinimizeBfgs, DeterministicAcrossRuns) {
  auto f = [](const Eigen::VectorXd& v) {
    return std::pow(v(0) - 0.5, 4) + std::pow(v(1) + 0.25, 2) + v(0) * v(1);
  };
  const OptimOptions options;
  const OptimResult a = minimize_bfgs(f, Eigen::Vector2d(2.0, -2.0), options);
  const OptimResult b = minimize_bfgs(f, Eigen::Vector2d(2.0, -2.0), options);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.fval, b.fval);
  EXPECT_EQ(a.n_evals, b.n_evals);
}

}  // namespace
}  // namespace nsgeo
