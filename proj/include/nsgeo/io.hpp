// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nsgeo/errors.hpp"
#include "nsgeo/likelihood.hpp"
#include "nsgeo/metrics.hpp"
#include "nsgeo/model.hpp"
#include "nsgeo/predict.hpp"
#include "nsgeo/simulate.hpp"

namespace nsgeo {

inline constexpr const char* kConfigSchema = "nonstat-geo/v1";

/// 17 significant digits: enough for an exact double round-trip.
inline std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline double parse_double(const std::string& text, const std::string& where) {
  if (text.empty()) throw SchemaError(where + ": empty value");
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    throw SchemaError(where + ": cannot parse '" + text + "' as a number");
  }
  return value;
}

/// Outcome transform for prevalence counts, with the 0.5 continuity
/// correction so 0% and 100% prevalence stay finite:
/// log((positive + 0.5) / (examined - positive + 0.5)).
inline double empirical_logit(double positive, double examined) {
  if (!(examined >= 1.0) || !(positive >= 0.0) || !(positive <= examined)) {
    throw std::domain_error("empirical_logit: need 0 <= positive <= examined and examined >= 1");
  }
  return std::log((positive + 0.5) / (examined - positive + 0.5));
}

// ---------------------------------------------------------------------------
// CSV framing (RFC 4180: quoted fields, doubled quotes, embedded newlines)
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; -1 when absent.  Duplicate names are rejected at
  /// parse time, so the first match is the only match.
  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

inline CsvTable csv_parse(const std::string& text, const std::string& origin) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;

  auto end_field = [&]() {
    record.push_back(field);
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&]() {
    end_field();
    // A lone blank line yields one empty unquoted field; skip it.
    if (!(record.size() == 1 && record[0].empty() && !field_was_quoted)) {
      records.push_back(record);
    }
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !field_was_quoted) {
      in_quotes = true;
      field_was_quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_record();
      ++i;
    } else if (c == '\n' || c == '\r') {
      end_record();
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw SchemaError(origin + ": unterminated quoted field");
  if (!field.empty() || !record.empty() || field_was_quoted) end_record();

  if (records.empty()) throw SchemaError(origin + ": empty file");
  CsvTable table;
  table.header = records.front();
  std::set<std::string> seen;
  for (const auto& name : table.header) {
    if (!seen.insert(name).second) {
      throw SchemaError(origin + ": duplicate column name '" + name + "'");
    }
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw SchemaError(origin + ": row " + std::to_string(r + 1) + " has " +
                        std::to_string(records[r].size()) + " fields, header has " +
                        std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

inline CsvTable csv_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return csv_parse(buf.str(), path);
}

inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline void csv_write(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  auto emit_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      out << csv_quote(row[i]);
    }
    out << '\n';
  };
  emit_row(table.header);
  for (const auto& row : table.rows) emit_row(row);
  if (!out) throw SchemaError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Observation and grid tables
// ---------------------------------------------------------------------------

namespace detail {

/// Distinct covariate columns the config needs, in first-use order.
inline std::vector<std::string> required_covariates(const ModelConfig& config) {
  std::vector<std::string> names;
  auto add = [&](const std::string& name) {
    for (const auto& existing : names) {
      if (existing == name) return;
    }
    names.push_back(name);
  };
  for (const auto& name : config.mean_covariates) add(name);
  for (const auto& c : config.cov_covariates) add(c.name);
  return names;
}

inline int require_column(const CsvTable& table, const std::string& name,
                          const std::string& origin) {
  const int idx = table.column(name);
  if (idx < 0) throw SchemaError(origin + ": missing required column '" + name + "'");
  return idx;
}

}  // namespace detail

/// Reads lon/lat, the outcome, and every covariate the model needs.  The
/// outcome is either a ready `y_elogit` column or `positive`/`examined`
/// prevalence counts run through the empirical logit; supplying both forms
/// is ambiguous and rejected.  Row numbers in errors count the header as
/// row 1.
inline ObservationSet load_observations(const std::string& path, const ModelConfig& config) {
  const CsvTable table = csv_read(path);
  const int lon = detail::require_column(table, "lon", path);
  const int lat = detail::require_column(table, "lat", path);

  const int y_col = table.column("y_elogit");
  const int pos_col = table.column("positive");
  const int exam_col = table.column("examined");
  if (y_col >= 0 && (pos_col >= 0 || exam_col >= 0)) {
    throw SchemaError(path + ": give either y_elogit or positive/examined counts, not both");
  }
  if (y_col < 0 && (pos_col < 0 || exam_col < 0)) {
    throw SchemaError(path + ": need outcome columns: y_elogit, or positive and examined");
  }

  const std::vector<std::string> covariates = detail::required_covariates(config);
  std::vector<int> cov_idx;
  for (const auto& name : covariates) {
    cov_idx.push_back(detail::require_column(table, name, path));
  }

  const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
  if (n == 0) throw SchemaError(path + ": no data rows");

  Eigen::MatrixXd coords(n, 2);
  Eigen::VectorXd outcome(n);
  Eigen::MatrixXd cov_values(n, static_cast<Eigen::Index>(covariates.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const std::string where = path + ": row " + std::to_string(i + 2);
    coords(i, 0) = parse_double(row[static_cast<std::size_t>(lon)], where + ", column 'lon'");
    coords(i, 1) = parse_double(row[static_cast<std::size_t>(lat)], where + ", column 'lat'");
    if (y_col >= 0) {
      outcome(i) = parse_double(row[static_cast<std::size_t>(y_col)], where + ", column 'y_elogit'");
    } else {
      const double pos =
          parse_double(row[static_cast<std::size_t>(pos_col)], where + ", column 'positive'");
      const double exam =
          parse_double(row[static_cast<std::size_t>(exam_col)], where + ", column 'examined'");
      try {
        outcome(i) = empirical_logit(pos, exam);
      } catch (const std::domain_error& e) {
        throw SchemaError(where + ": " + e.what());
      }
    }
    for (std::size_t j = 0; j < covariates.size(); ++j) {
      cov_values(i, static_cast<Eigen::Index>(j)) = parse_double(
          row[static_cast<std::size_t>(cov_idx[j])], where + ", column '" + covariates[j] + "'");
    }
  }

  // Mean design: intercept followed by the configured mean covariates.
  std::map<std::string, Eigen::Index> cov_pos;
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    cov_pos[covariates[j]] = static_cast<Eigen::Index>(j);
  }
  Eigen::MatrixXd design(n, config.q());
  design.col(0).setOnes();
  std::vector<std::string> design_names{"intercept"};
  for (std::size_t j = 0; j < config.mean_covariates.size(); ++j) {
    design.col(static_cast<Eigen::Index>(j) + 1) = cov_values.col(cov_pos[config.mean_covariates[j]]);
    design_names.push_back(config.mean_covariates[j]);
  }
  // Covariance-covariate block in config order.
  Eigen::MatrixXd cov_block(n, config.p());
  std::vector<std::string> cov_names;
  for (std::size_t j = 0; j < config.cov_covariates.size(); ++j) {
    cov_block.col(static_cast<Eigen::Index>(j)) = cov_values.col(cov_pos[config.cov_covariates[j].name]);
    cov_names.push_back(config.cov_covariates[j].name);
  }
  return ObservationSet(std::move(coords), std::move(design), std::move(design_names),
                        std::move(cov_block), std::move(cov_names), std::move(outcome));
}

/// Prediction targets parsed from a grid table.
struct GridData {
  Eigen::MatrixXd coords;            // m x 2
  std::vector<InputPoint> points;    // coords plus the covariance covariates
  Eigen::MatrixXd design;            // m x q mean design
};

inline GridData load_grid(const std::string& path, const ModelConfig& config) {
  const CsvTable table = csv_read(path);
  const int lon = detail::require_column(table, "lon", path);
  const int lat = detail::require_column(table, "lat", path);
  const std::vector<std::string> covariates = detail::required_covariates(config);
  std::vector<int> cov_idx;
  for (const auto& name : covariates) {
    cov_idx.push_back(detail::require_column(table, name, path));
  }

  const Eigen::Index m = static_cast<Eigen::Index>(table.rows.size());
  GridData grid;
  grid.coords.resize(m, 2);
  grid.points.resize(static_cast<std::size_t>(m));
  grid.design.resize(m, config.q());
  std::map<std::string, double> row_values;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const std::string where = path + ": row " + std::to_string(i + 2);
    grid.coords(i, 0) = parse_double(row[static_cast<std::size_t>(lon)], where + ", column 'lon'");
    grid.coords(i, 1) = parse_double(row[static_cast<std::size_t>(lat)], where + ", column 'lat'");
    row_values.clear();
    for (std::size_t j = 0; j < covariates.size(); ++j) {
      row_values[covariates[j]] = parse_double(
          row[static_cast<std::size_t>(cov_idx[j])], where + ", column '" + covariates[j] + "'");
    }
    InputPoint& point = grid.points[static_cast<std::size_t>(i)];
    point.coords = grid.coords.row(i).transpose();
    for (const auto& c : config.cov_covariates) point.covariates[c.name] = row_values[c.name];
    grid.design(i, 0) = 1.0;
    for (std::size_t j = 0; j < config.mean_covariates.size(); ++j) {
      grid.design(i, static_cast<Eigen::Index>(j) + 1) = row_values[config.mean_covariates[j]];
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Config JSON (schema "nonstat-geo/v1")
// ---------------------------------------------------------------------------

inline nlohmann::json fit_options_to_json(const FitOptions& fit) {
  return {
      {"restarts", fit.restarts},
      {"max_iter", fit.max_iter},
      {"grad_tol_abs", fit.grad_tol_abs},
      {"grad_tol_rel", fit.grad_tol_rel},
      {"rel_tol", fit.rel_tol},
      {"grad_step", fit.grad_step},
      {"hess_step", fit.hess_step},
      {"restart_jitter_sd", fit.restart_jitter_sd},
      {"seed", fit.seed},
      {"ci_level", fit.ci_level},
      {"ci_log_scale", fit.ci_log_scale},
  };
}

inline FitOptions fit_options_from_json(const nlohmann::json& j) {
  FitOptions fit;
  try {
    fit.restarts = j.value("restarts", fit.restarts);
    fit.max_iter = j.value("max_iter", fit.max_iter);
    fit.grad_tol_abs = j.value("grad_tol_abs", fit.grad_tol_abs);
    fit.grad_tol_rel = j.value("grad_tol_rel", fit.grad_tol_rel);
    fit.rel_tol = j.value("rel_tol", fit.rel_tol);
    fit.grad_step = j.value("grad_step", fit.grad_step);
    fit.hess_step = j.value("hess_step", fit.hess_step);
    fit.restart_jitter_sd = j.value("restart_jitter_sd", fit.restart_jitter_sd);
    fit.seed = j.value("seed", fit.seed);
    fit.ci_level = j.value("ci_level", fit.ci_level);
    fit.ci_log_scale = j.value("ci_log_scale", fit.ci_log_scale);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("fit options: ") + e.what());
  }
  if (fit.restarts < 1 || fit.max_iter < 1) {
    throw ConfigError("fit options: restarts and max_iter must be >= 1");
  }
  if (!(fit.ci_level > 0.0 && fit.ci_level < 1.0)) {
    throw ConfigError("fit options: ci_level must be in (0, 1)");
  }
  return fit;
}

inline nlohmann::json model_config_to_json(const ModelConfig& config) {
  nlohmann::json covs = nlohmann::json::array();
  for (const auto& c : config.cov_covariates) {
    covs.push_back({{"name", c.name}, {"kappa", c.kappa}, {"standardize", c.standardize}});
  }
  return {
      {"form", to_string(config.form)},
      {"kappa_spatial", config.kappa_spatial},
      {"mean_covariates", config.mean_covariates},
      {"covariance_covariates", covs},
      {"distance", config.distance == SpatialDistance::GreatCircle ? "great_circle" : "euclidean"},
      {"label", config.label},
  };
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig config;
  try {
    if (!j.contains("form")) throw ConfigError("model: missing 'form'");
    config.form = cov_form_from_string(j.at("form").get<std::string>());
    config.kappa_spatial = j.value("kappa_spatial", config.kappa_spatial);
    if (j.contains("mean_covariates")) {
      config.mean_covariates = j.at("mean_covariates").get<std::vector<std::string>>();
    }
    if (j.contains("covariance_covariates")) {
      for (const auto& c : j.at("covariance_covariates")) {
        ModelConfig::CovCovariate cov;
        cov.name = c.at("name").get<std::string>();
        cov.kappa = c.value("kappa", cov.kappa);
        cov.standardize = c.value("standardize", cov.standardize);
        config.cov_covariates.push_back(std::move(cov));
      }
    }
    const std::string distance = j.value("distance", std::string("euclidean"));
    if (distance == "euclidean") {
      config.distance = SpatialDistance::Euclidean;
    } else if (distance == "great_circle") {
      config.distance = SpatialDistance::GreatCircle;
    } else {
      throw ConfigError("model: unknown distance '" + distance + "'");
    }
    config.label = j.value("label", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  if (config.kappa_spatial <= 0.0) throw ConfigError("model: kappa_spatial must be positive");
  for (const auto& c : config.cov_covariates) {
    if (c.kappa <= 0.0) throw ConfigError("model: covariate kappa must be positive");
  }
  config.validate();
  return config;
}

inline nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
  return {
      {"label", cfg.label},
      {"form", to_string(cfg.form)},
      {"beta", std::vector<double>(cfg.theta_true.beta.data(),
                                   cfg.theta_true.beta.data() + cfg.theta_true.beta.size())},
      {"sigma2", cfg.theta_true.sigma2},
      {"phis", std::vector<double>(cfg.theta_true.phis.data(),
                                   cfg.theta_true.phis.data() + cfg.theta_true.phis.size())},
      {"tau2", cfg.theta_true.tau2},
      {"kappa", cfg.kappa},
      {"n", cfg.n},
      {"heldout_m", cfg.heldout_m},
      {"B", cfg.B},
      {"master_seed", cfg.master_seed},
      {"scenario_index", cfg.scenario_index},
  };
}

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig cfg;
  try {
    cfg.label = j.value("label", cfg.label);
    if (j.contains("form")) cfg.form = cov_form_from_string(j.at("form").get<std::string>());
    const auto beta = j.at("beta").get<std::vector<double>>();
    const auto phis = j.at("phis").get<std::vector<double>>();
    cfg.theta_true.beta =
        Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    cfg.theta_true.phis =
        Eigen::Map<const Eigen::VectorXd>(phis.data(), static_cast<Eigen::Index>(phis.size()));
    cfg.theta_true.sigma2 = j.at("sigma2").get<double>();
    cfg.theta_true.tau2 = j.value("tau2", 0.0);
    cfg.kappa = j.value("kappa", cfg.kappa);
    cfg.n = j.value("n", cfg.n);
    cfg.heldout_m = j.value("heldout_m", cfg.heldout_m);
    cfg.B = j.value("B", cfg.B);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.scenario_index = j.value("scenario_index", cfg.scenario_index);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  return cfg;
}

/// Parses and schema-checks a top-level config document.
inline nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.is_object() || j.value("schema", std::string()) != kConfigSchema) {
    throw ConfigError(path + ": expected a JSON object with \"schema\": \"" +
                      std::string(kConfigSchema) + "\"");
  }
  return j;
}

// ---------------------------------------------------------------------------
// Result emission
// ---------------------------------------------------------------------------

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw SchemaError("write failed for '" + path + "'");
}

inline nlohmann::json fit_to_json(const FitResult& fit) {
  nlohmann::json params = nlohmann::json::array();
  const std::vector<double> values = fit.theta_hat.flatten();
  for (std::size_t i = 0; i < fit.param_names.size(); ++i) {
    const Eigen::Index idx = static_cast<Eigen::Index>(i);
    params.push_back({
        {"name", fit.param_names[i]},
        {"estimate", values[i]},
        {"se_unconstrained", fit.se_valid ? nlohmann::json(fit.se_unconstrained(idx))
                                          : nlohmann::json()},
        {"ci_lower", fit.se_valid ? nlohmann::json(fit.ci_lower(idx)) : nlohmann::json()},
        {"ci_upper", fit.se_valid ? nlohmann::json(fit.ci_upper(idx)) : nlohmann::json()},
    });
  }
  return {
      {"schema", kConfigSchema},
      {"model", model_config_to_json(fit.config)},
      {"fit_options", fit_options_to_json(fit.config.fit)},
      {"parameters", params},
      {"loglik", fit.loglik},
      {"aic", fit.aic},
      {"bic", fit.bic},
      {"k", fit.k},
      {"n_obs", fit.n_obs},
      {"converged", fit.converged},
      {"se_valid", fit.se_valid},
      {"grad_norm_inf", fit.grad_norm_inf},
      {"stop_reason", fit.stop_reason},
      {"n_evals", fit.n_evals},
      {"n_restarts", fit.n_restarts},
      {"best_restart", fit.best_restart},
      {"ci_level", fit.config.fit.ci_level},
      {"covariate_scales", fit.covariate_scales},
      {"seed", fit.seed},
  };
}

inline FitResult fit_from_json(const nlohmann::json& j) {
  FitResult fit;
  try {
    fit.config = model_config_from_json(j.at("model"));
    fit.config.fit = fit_options_from_json(j.value("fit_options", nlohmann::json::object()));
    const auto& params = j.at("parameters");
    const Eigen::Index dim = static_cast<Eigen::Index>(params.size());
    if (dim != fit.config.n_parameters()) {
      throw SchemaError("fit file: parameter count does not match its model block");
    }
    Eigen::VectorXd values(dim);
    fit.se_unconstrained.resize(dim);
    fit.ci_lower.resize(dim);
    fit.ci_upper.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const auto& p = params[static_cast<std::size_t>(i)];
      fit.param_names.push_back(p.at("name").get<std::string>());
      values(i) = p.at("estimate").get<double>();
      fit.se_unconstrained(i) =
          p.at("se_unconstrained").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                             : p.at("se_unconstrained").get<double>();
      fit.ci_lower(i) = p.at("ci_lower").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                   : p.at("ci_lower").get<double>();
      fit.ci_upper(i) = p.at("ci_upper").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                   : p.at("ci_upper").get<double>();
    }
    const Eigen::Index q = fit.config.q();
    const Eigen::Index n_phis = fit.config.n_phis();
    fit.theta_hat.beta = values.head(q);
    fit.theta_hat.sigma2 = values(q);
    fit.theta_hat.phis = values.segment(q + 1, n_phis);
    fit.theta_hat.tau2 = values(values.size() - 1);
    fit.loglik = j.at("loglik").get<double>();
    fit.aic = j.at("aic").get<double>();
    fit.bic = j.at("bic").get<double>();
    fit.k = j.at("k").get<int>();
    fit.n_obs = j.at("n_obs").get<Eigen::Index>();
    fit.converged = j.at("converged").get<bool>();
    fit.se_valid = j.at("se_valid").get<bool>();
    fit.grad_norm_inf = j.value("grad_norm_inf", std::numeric_limits<double>::quiet_NaN());
    fit.stop_reason = j.value("stop_reason", std::string());
    fit.n_evals = j.value("n_evals", 0L);
    fit.n_restarts = j.value("n_restarts", 0);
    fit.best_restart = j.value("best_restart", 0);
    fit.covariate_scales = j.value("covariate_scales", std::vector<double>());
    fit.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("fit file: ") + e.what());
  }
  return fit;
}

inline FitResult read_fit_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open fit file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return fit_from_json(j);
}

inline void write_fit_json(const std::string& path, const FitResult& fit) {
  write_json(path, fit_to_json(fit));
}

/// predictions.csv: one row per target with latent-surface and outcome
/// uncertainty plus the 95% interval.
inline void write_predictions_csv(const std::string& path, const PredictionResult& pred) {
  CsvTable table;
  table.header = {"lon", "lat", "mean", "sd_Y", "sd_S", "lower95", "upper95"};
  for (Eigen::Index i = 0; i < pred.mean.size(); ++i) {
    const auto& point = pred.points[static_cast<std::size_t>(i)];
    table.rows.push_back({format_double(point.coords(0)), format_double(point.coords(1)),
                          format_double(pred.mean(i)), format_double(pred.sd_y(i)),
                          format_double(pred.sd_s(i)), format_double(pred.lower95(i)),
                          format_double(pred.upper95(i))});
  }
  csv_write(path, table);
}

/// Study tables: parameter recovery, held-out prediction, information
/// criteria, and per-cell failure counts.
inline void write_study_csvs(const std::string& out_dir, const StudyReport& report) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);

  CsvTable params;
  params.header = {"scenario", "model", "parameter", "truth",
                   "mean_estimate", "prb_percent", "coverage", "b_used", "b_intervals"};
  for (const auto& row : report.parameter_table) {
    params.rows.push_back({row.scenario, row.model, row.parameter, format_double(row.truth),
                           format_double(row.mean_estimate), format_double(row.prb),
                           format_double(row.coverage), std::to_string(row.b_used),
                           std::to_string(row.b_intervals)});
  }
  csv_write((dir / "study_parameters.csv").string(), params);

  CsvTable pred;
  pred.header = {"scenario", "model", "bias", "rmse", "coverage", "n_points", "b_used"};
  for (const auto& row : report.prediction_table) {
    pred.rows.push_back({row.scenario, row.model, format_double(row.bias),
                         format_double(row.rmse), format_double(row.coverage),
                         std::to_string(row.n_points), std::to_string(row.b_used)});
  }
  csv_write((dir / "study_prediction.csv").string(), pred);

  CsvTable sel;
  sel.header = {"scenario", "model", "mean_aic", "mean_bic",
                "aic_best_rate", "bic_best_rate", "b_used"};
  for (const auto& row : report.selection_table) {
    sel.rows.push_back({row.scenario, row.model, format_double(row.mean_aic),
                        format_double(row.mean_bic), format_double(row.aic_best_rate),
                        format_double(row.bic_best_rate), std::to_string(row.b_used)});
  }
  csv_write((dir / "study_selection.csv").string(), sel);

  CsvTable failures;
  failures.header = {"scenario_model", "n_failed"};
  for (const auto& [cell, count] : report.failure_counts) {
    failures.rows.push_back({cell, std::to_string(count)});
  }
  csv_write((dir / "study_failures.csv").string(), failures);
}

/// Writes one simulated replicate as an observation table (plus a held-out
/// table when present) so generated surfaces can be inspected directly.
inline void write_dataset_csv(const std::string& path, const ObservationSet& data) {
  CsvTable table;
  table.header = {"lon", "lat", "y_elogit"};
  for (const auto& name : data.cov_names) table.header.push_back(name);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    std::vector<std::string> row{format_double(data.coords(i, 0)),
                                 format_double(data.coords(i, 1)),
                                 format_double(data.outcome(i))};
    for (Eigen::Index j = 0; j < data.p(); ++j) row.push_back(format_double(data.cov_covariates(i, j)));
    table.rows.push_back(std::move(row));
  }
  csv_write(path, table);
}

}  // namespace nsgeo
