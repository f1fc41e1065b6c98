// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nsgeo {

/// Input table or point set does not carry a column/covariate the model needs.
class SchemaError : public std::runtime_error {
public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration document is malformed or inconsistent.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Covariance matrix could not be factorized even after jitter escalation.
/// Carries the flattened parameter values that produced the matrix.
class SingularCovarianceError : public std::runtime_error {
public:
  SingularCovarianceError(const std::string& what, std::vector<double> theta_values)
      : std::runtime_error(what), theta(std::move(theta_values)) {}
  std::vector<double> theta;
};

/// All optimizer restarts failed to produce a usable objective value.
class OptimizationError : public std::runtime_error {
public:
  explicit OptimizationError(const std::string& what) : std::runtime_error(what) {}
};

/// Observed information matrix is not invertible; no standard errors.
class InformationError : public std::runtime_error {
public:
  explicit InformationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nsgeo
