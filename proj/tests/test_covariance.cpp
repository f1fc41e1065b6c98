// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0

#include "nsgeo/covariance.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "nsgeo/rng.hpp"

namespace nsgeo {
namespace {

std::vector<InputPoint> random_points(int n, int p, RngStream& stream) {
  std::vector<InputPoint> points(static_cast<std::size_t>(n));
  for (auto& pt : points) {
    pt.coords = Eigen::Vector2d(stream.uniform01(), stream.uniform01());
    for (int j = 1; j <= p; ++j) {
      pt.covariates["e" + std::to_string(j)] = stream.uniform(-1.0, 1.0);
    }
  }
  return points;
}

CovarianceSpec make_spec(CovForm form, int p, double sigma2 = 0.5) {
  std::vector<std::pair<std::string, MaternKernel>> kernels;
  const double phis[] = {0.2, 0.1, 0.15, 0.25};
  for (int j = 1; j <= p; ++j) {
    kernels.emplace_back("e" + std::to_string(j), MaternKernel(phis[j - 1], 1.5));
  }
  return CovarianceSpec(form, MaternKernel(0.3, 1.5), std::move(kernels), sigma2);
}

TEST(PairCovariance, StationaryIsSigma2TimesSpatialCorrelation) {
  const CovarianceSpec spec = make_spec(CovForm::Stationary, 0);
  InputPoint a, b;
  a.coords = Eigen::Vector2d(0.1, 0.2);
  b.coords = Eigen::Vector2d(0.4, 0.6);
  const double u = (a.coords - b.coords).norm();
  EXPECT_DOUBLE_EQ(pair_covariance(a, b, spec),
                   0.5 * matern_correlation(u, MaternKernel(0.3, 1.5)));
}

// Brute-force recomputation of each form's combination rule from the scalar
// kernel, written independently of the library's switch.
TEST(PairCovariance, FormsCombineKernelsAsDocumented) {
  RngStream stream(555, 0, 0, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const auto points = random_points(2, 2, stream);
    const InputPoint& a = points[0];
    const InputPoint& b = points[1];
    const double rho_s =
        matern_correlation((a.coords - b.coords).norm(), MaternKernel(0.3, 1.5));
    const double rho_1 = matern_correlation(std::abs(a.covariates.at("e1") - b.covariates.at("e1")),
                                            MaternKernel(0.2, 1.5));
    const double rho_2 = matern_correlation(std::abs(a.covariates.at("e2") - b.covariates.at("e2")),
                                            MaternKernel(0.1, 1.5));
    EXPECT_NEAR(pair_covariance(a, b, make_spec(CovForm::Product, 2)), 0.5 * rho_s * rho_1 * rho_2,
                1e-15);
    EXPECT_NEAR(pair_covariance(a, b, make_spec(CovForm::PartialSum, 2)),
                0.5 * rho_s * (rho_1 + rho_2), 1e-15);
    EXPECT_NEAR(pair_covariance(a, b, make_spec(CovForm::FullSum, 2)),
                0.5 * (rho_s + rho_1 + rho_2), 1e-15);
  }
}

TEST(CovarianceSpec, MarginalVarianceByForm) {
  EXPECT_DOUBLE_EQ(make_spec(CovForm::Stationary, 0).marginal_variance(), 0.5);
  EXPECT_DOUBLE_EQ(make_spec(CovForm::Product, 2).marginal_variance(), 0.5);
  EXPECT_DOUBLE_EQ(make_spec(CovForm::PartialSum, 2).marginal_variance(), 1.0);
  EXPECT_DOUBLE_EQ(make_spec(CovForm::FullSum, 2).marginal_variance(), 1.5);
  EXPECT_DOUBLE_EQ(make_spec(CovForm::PartialSum, 3).marginal_variance(), 1.5);
  EXPECT_DOUBLE_EQ(make_spec(CovForm::FullSum, 3).marginal_variance(), 2.0);
}

TEST(CovarianceMatrix, DiagonalIsMarginalVariancePlusNugget) {
  RngStream stream(99, 0, 0, 0);
  const auto points = random_points(6, 2, stream);
  for (CovForm form : {CovForm::Product, CovForm::PartialSum, CovForm::FullSum}) {
    const CovarianceSpec spec = make_spec(form, 2);
    const Eigen::MatrixXd sigma = covariance_matrix(points, spec, 0.01);
    for (int i = 0; i < 6; ++i) {
      EXPECT_DOUBLE_EQ(sigma(i, i), spec.marginal_variance() + 0.01);
    }
  }
}

TEST(CovarianceMatrix, ExactlySymmetric) {
  RngStream stream(7, 0, 0, 0);
  const auto points = random_points(20, 2, stream);
  for (CovForm form : {CovForm::Stationary, CovForm::Product, CovForm::PartialSum,
                       CovForm::FullSum}) {
    const CovarianceSpec spec = make_spec(form, form == CovForm::Stationary ? 0 : 2);
    const Eigen::MatrixXd sigma = covariance_matrix(points, spec, 0.0);
    EXPECT_EQ((sigma - sigma.transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(CovarianceMatrix, PositiveSemidefiniteAcrossForms) {
  RngStream stream(2024, 0, 0, 0);
  for (CovForm form : {CovForm::Stationary, CovForm::Product, CovForm::PartialSum,
                       CovForm::FullSum}) {
    const auto points = random_points(40, 2, stream);
    const CovarianceSpec spec = make_spec(form, form == CovForm::Stationary ? 0 : 2);
    const Eigen::MatrixXd sigma = covariance_matrix(points, spec, 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(sigma);
    EXPECT_GE(eigs.eigenvalues().minCoeff(), -1e-8 * sigma.diagonal().mean());
  }
}

TEST(CrossCovariance, MatchesPairwiseComputation) {
  RngStream stream(13, 0, 0, 0);
  const auto sources = random_points(5, 2, stream);
  const auto targets = random_points(3, 2, stream);
  const CovarianceSpec spec = make_spec(CovForm::PartialSum, 2);
  const Eigen::MatrixXd c = cross_covariance(targets, sources, spec);
  ASSERT_EQ(c.rows(), 3);
  ASSERT_EQ(c.cols(), 5);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 5; ++j) {
      EXPECT_DOUBLE_EQ(c(i, j), pair_covariance(targets[static_cast<std::size_t>(i)],
                                                sources[static_cast<std::size_t>(j)], spec));
    }
  }
}

TEST(PairCovariance, MissingCovariateNamesTheColumn) {
  const CovarianceSpec spec = make_spec(CovForm::Product, 2);
  InputPoint a, b;
  a.coords = Eigen::Vector2d(0.0, 0.0);
  b.coords = Eigen::Vector2d(1.0, 1.0);
  a.covariates["e1"] = 0.5;
  a.covariates["e2"] = 0.5;
  b.covariates["e1"] = 0.1;  // e2 missing
  try {
    pair_covariance(a, b, spec);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("e2"), std::string::npos);
  }
}

TEST(CovarianceSpec, RejectsFormCovariateMismatch) {
  EXPECT_THROW(make_spec(CovForm::Stationary, 1), std::invalid_argument);
  EXPECT_THROW(make_spec(CovForm::Product, 0), std::invalid_argument);
  EXPECT_THROW(make_spec(CovForm::PartialSum, 2, -1.0), std::invalid_argument);
}

TEST(Haversine, KnownDistances) {
  // One degree of latitude along a meridian: pi/180 * R.
  const Eigen::Vector2d equator(0.0, 0.0), one_north(0.0, 1.0);
  EXPECT_NEAR(haversine_km(equator, one_north), M_PI / 180.0 * 6371.0088, 1e-9);
  EXPECT_DOUBLE_EQ(haversine_km(equator, equator), 0.0);
  // Quarter circumference from equator to pole.
  const Eigen::Vector2d pole(17.0, 90.0);
  EXPECT_NEAR(haversine_km(equator, pole), M_PI / 2.0 * 6371.0088, 1e-6);
  // Symmetry.
  const Eigen::Vector2d a(32.6, -25.9), b(35.0, -17.8);
  EXPECT_DOUBLE_EQ(haversine_km(a, b), haversine_km(b, a));
}

TEST(CovForm, StringRoundTrip) {
  for (CovForm form : {CovForm::Stationary, CovForm::Product, CovForm::PartialSum,
                       CovForm::FullSum}) {
    EXPECT_EQ(cov_form_from_string(to_string(form)), form);
  }
  EXPECT_THROW(cov_form_from_string("banana"), ConfigError);
}

}  // namespace
}  // namespace nsgeo
