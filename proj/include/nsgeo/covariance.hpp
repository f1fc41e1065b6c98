// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nsgeo/errors.hpp"
#include "nsgeo/matern.hpp"

namespace nsgeo {

/// The four covariance constructions over space and p covariates.
///
///   Stationary : sigma^2 rho_s(u)                          (p = 0)
///   Product    : sigma^2 rho_s(u) prod_j rho_j(|de_j|)
///   PartialSum : sigma^2 rho_s(u) sum_j  rho_j(|de_j|)
///   FullSum    : sigma^2 (rho_s(u) + sum_j rho_j(|de_j|))
enum class CovForm { Stationary, Product, PartialSum, FullSum };

inline std::string to_string(CovForm f) {
  switch (f) {
    case CovForm::Stationary: return "stationary";
    case CovForm::Product: return "product";
    case CovForm::PartialSum: return "partial_sum";
    case CovForm::FullSum: return "full_sum";
  }
  return "?";
}

inline CovForm cov_form_from_string(const std::string& s) {
  if (s == "stationary") return CovForm::Stationary;
  if (s == "product") return CovForm::Product;
  if (s == "partial_sum") return CovForm::PartialSum;
  if (s == "full_sum") return CovForm::FullSum;
  throw ConfigError("unknown covariance form '" + s +
                    "' (expected stationary|product|partial_sum|full_sum)");
}

enum class SpatialDistance { Euclidean, GreatCircle };

/// Great-circle distance in kilometres between (lon, lat) points in degrees.
inline double haversine_km(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  constexpr double kEarthRadiusKm = 6371.0088;
  constexpr double kDegToRad = M_PI / 180.0;
  const double lat1 = a.y() * kDegToRad, lat2 = b.y() * kDegToRad;
  const double dlat = (b.y() - a.y()) * kDegToRad;
  const double dlon = (b.x() - a.x()) * kDegToRad;
  const double s = std::sin(dlat / 2.0), t = std::sin(dlon / 2.0);
  const double h = s * s + std::cos(lat1) * std::cos(lat2) * t * t;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

inline double spatial_separation(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                 SpatialDistance mode) {
  return mode == SpatialDistance::Euclidean ? (a - b).norm() : haversine_km(a, b);
}

/// A location with the covariate values the covariance structure consumes.
struct InputPoint {
  Eigen::Vector2d coords;
  std::map<std::string, double> covariates;
};

/// Declarative description of one covariance construction: a spatial kernel,
/// an ordered list of named covariate kernels, and the process variance.
/// Kernel list order defines the order of the phi parameters everywhere.
struct CovarianceSpec {
  CovForm form;
  MaternKernel spatial;
  std::vector<std::pair<std::string, MaternKernel>> covariate_kernels;
  double sigma2;
  SpatialDistance distance = SpatialDistance::Euclidean;

  CovarianceSpec(CovForm form_in, MaternKernel spatial_in,
                 std::vector<std::pair<std::string, MaternKernel>> covariate_kernels_in,
                 double sigma2_in, SpatialDistance distance_in = SpatialDistance::Euclidean)
      : form(form_in),
        spatial(spatial_in),
        covariate_kernels(std::move(covariate_kernels_in)),
        sigma2(sigma2_in),
        distance(distance_in) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
      throw std::invalid_argument("CovarianceSpec: sigma2 must be positive");
    }
    const std::size_t p = covariate_kernels.size();
    if (form == CovForm::Stationary && p != 0) {
      throw std::invalid_argument("CovarianceSpec: stationary form takes no covariate kernels");
    }
    if (form != CovForm::Stationary && p == 0) {
      throw std::invalid_argument("CovarianceSpec: " + to_string(form) +
                                  " form needs at least one covariate kernel");
    }
  }

  std::size_t p() const { return covariate_kernels.size(); }

  /// Variance at identical inputs: sigma^2, sigma^2, p sigma^2, (p+1) sigma^2.
  double marginal_variance() const {
    switch (form) {
      case CovForm::Stationary:
      case CovForm::Product: return sigma2;
      case CovForm::PartialSum: return sigma2 * static_cast<double>(p());
      case CovForm::FullSum: return sigma2 * static_cast<double>(p() + 1);
    }
    return sigma2;
  }
};

namespace detail {
inline double covariate_value(const InputPoint& pt, const std::string& name) {
  const auto it = pt.covariates.find(name);
  if (it == pt.covariates.end()) {
    throw SchemaError("input point is missing covariate '" + name + "'");
  }
  return it->second;
}
}  // namespace detail

/// Covariance between two covariate-tagged points, without nugget.
inline double pair_covariance(const InputPoint& a, const InputPoint& b,
                              const CovarianceSpec& spec) {
  const double u = spatial_separation(a.coords, b.coords, spec.distance);
  const double rho_s = matern_correlation(u, spec.spatial);
  switch (spec.form) {
    case CovForm::Stationary:
      return spec.sigma2 * rho_s;
    case CovForm::Product: {
      double prod = rho_s;
      for (const auto& [name, kernel] : spec.covariate_kernels) {
        const double d = std::abs(detail::covariate_value(a, name) - detail::covariate_value(b, name));
        prod *= matern_correlation(d, kernel);
      }
      return spec.sigma2 * prod;
    }
    case CovForm::PartialSum: {
      double sum = 0.0;
      for (const auto& [name, kernel] : spec.covariate_kernels) {
        const double d = std::abs(detail::covariate_value(a, name) - detail::covariate_value(b, name));
        sum += matern_correlation(d, kernel);
      }
      return spec.sigma2 * rho_s * sum;
    }
    case CovForm::FullSum: {
      double sum = rho_s;
      for (const auto& [name, kernel] : spec.covariate_kernels) {
        const double d = std::abs(detail::covariate_value(a, name) - detail::covariate_value(b, name));
        sum += matern_correlation(d, kernel);
      }
      return spec.sigma2 * sum;
    }
  }
  return 0.0;
}

/// n x n covariance with nugget tau^2 on the diagonal.  Symmetric by
/// construction: the upper triangle is computed and mirrored.
inline Eigen::MatrixXd covariance_matrix(const std::vector<InputPoint>& points,
                                         const CovarianceSpec& spec, double tau2) {
  if (tau2 < 0.0 || !std::isfinite(tau2)) {
    throw std::invalid_argument("covariance_matrix: tau2 must be finite and non-negative");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sigma(i, i) = pair_covariance(points[i], points[i], spec) + tau2;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = pair_covariance(points[i], points[j], spec);
      sigma(i, j) = v;
      sigma(j, i) = v;
    }
  }
  return sigma;
}

/// m x n cross covariance between targets and sources; no nugget.
inline Eigen::MatrixXd cross_covariance(const std::vector<InputPoint>& targets,
                                        const std::vector<InputPoint>& sources,
                                        const CovarianceSpec& spec) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(targets.size()),
                    static_cast<Eigen::Index>(sources.size()));
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      c(i, j) = pair_covariance(targets[static_cast<std::size_t>(i)],
                                sources[static_cast<std::size_t>(j)], spec);
    }
  }
  return c;
}

}  // namespace nsgeo
