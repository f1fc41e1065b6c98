// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end.  Subcommands:
//   fit       maximum-likelihood fit of one configured model to a dataset
//   predict   kriging onto a grid from a saved fit
//   simulate  dump one synthetic replicate for inspection
//   study     full synthetic-data protocol over scenarios x candidate models
//   compare   fit several models to one dataset and rank by AIC
//
// Exit codes: 0 success, 2 usage/config/data error, 3 non-convergence.
// Tables go to stdout, diagnostics and progress to stderr.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "nsgeo/nsgeo.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNoConverge = 3;

int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void print_fit_table(const nsgeo::FitResult& fit) {
  std::printf("model: %s%s%s\n", nsgeo::to_string(fit.config.form).c_str(),
              fit.config.label.empty() ? "" : " ", fit.config.label.c_str());
  std::printf("n = %lld   k = %d   loglik = %.5f   AIC = %.4f   BIC = %.4f\n",
              static_cast<long long>(fit.n_obs), fit.k, fit.loglik, fit.aic, fit.bic);
  const int level = static_cast<int>(std::lround(fit.config.fit.ci_level * 100));
  std::printf("%-18s %12s %12s %12s\n", "parameter", "estimate",
              ("lower" + std::to_string(level)).c_str(), ("upper" + std::to_string(level)).c_str());
  const std::vector<double> values = fit.theta_hat.flatten();
  for (std::size_t i = 0; i < fit.param_names.size(); ++i) {
    const Eigen::Index idx = static_cast<Eigen::Index>(i);
    if (fit.se_valid) {
      std::printf("%-18s %12s %12s %12s\n", fit.param_names[i].c_str(), fmt(values[i]).c_str(),
                  fmt(fit.ci_lower(idx)).c_str(), fmt(fit.ci_upper(idx)).c_str());
    } else {
      std::printf("%-18s %12s %12s %12s\n", fit.param_names[i].c_str(), fmt(values[i]).c_str(),
                  "-", "-");
    }
  }
}

void print_fit_diagnostics(const nsgeo::FitResult& fit) {
  std::cerr << "stop: " << fit.stop_reason << "  |grad|_inf = " << fit.grad_norm_inf
            << "  evals = " << fit.n_evals << "  best restart " << fit.best_restart << "/"
            << fit.n_restarts << "\n";
  if (!fit.se_valid) {
    std::cerr << "observed information is not positive definite; no standard errors\n";
  }
}

nsgeo::ModelConfig model_config_from_file(const nlohmann::json& config_json) {
  if (!config_json.contains("model")) {
    throw nsgeo::ConfigError("config: missing 'model' block");
  }
  nsgeo::ModelConfig config = nsgeo::model_config_from_json(config_json.at("model"));
  config.fit = nsgeo::fit_options_from_json(config_json.value("fit", nlohmann::json::object()));
  return config;
}

int cmd_fit(const std::string& config_path, const std::string& data_path,
            const std::string& out_path, std::optional<std::uint64_t> seed, bool verbose) {
  nsgeo::ModelConfig config = model_config_from_file(nsgeo::load_config(config_path));
  if (seed) config.fit.seed = *seed;
  const nsgeo::ObservationSet data = nsgeo::load_observations(data_path, config);

  nsgeo::FitResult fit;
  try {
    fit = nsgeo::fit(data, config);
  } catch (const nsgeo::OptimizationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConverge;
  } catch (const nsgeo::SingularCovarianceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConverge;
  }

  print_fit_table(fit);
  if (verbose) print_fit_diagnostics(fit);
  nsgeo::write_fit_json(out_path, fit);
  std::cerr << "wrote " << out_path << "\n";
  if (!fit.converged) {
    std::cerr << "fit did not converge: " << fit.stop_reason << "\n";
    return kExitNoConverge;
  }
  return kExitOk;
}

int cmd_predict(const std::string& fit_path, const std::string& data_path,
                const std::string& grid_path, const std::string& out_path, int threads,
                bool verbose) {
  const nsgeo::FitResult fit = nsgeo::read_fit_json(fit_path);
  const nsgeo::ObservationSet data = nsgeo::load_observations(data_path, fit.config);
  const nsgeo::GridData grid = nsgeo::load_grid(grid_path, fit.config);
  if (verbose) {
    std::cerr << "kriging " << grid.points.size() << " targets from " << data.n()
              << " observations on " << threads << " thread(s)\n";
  }
  const nsgeo::PredictionResult pred =
      nsgeo::predict_grid(fit, data, grid.points, grid.design, 500, threads);
  nsgeo::write_predictions_csv(out_path, pred);
  std::cerr << "wrote " << out_path << "\n";

  const std::filesystem::path resolved =
      std::filesystem::path(out_path).parent_path() / "resolved_config.json";
  nsgeo::write_json(resolved.string(), nlohmann::json{{"schema", nsgeo::kConfigSchema},
                                                      {"command", "predict"},
                                                      {"fit_file", fit_path},
                                                      {"model", nsgeo::model_config_to_json(fit.config)},
                                                      {"threads", threads}});
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, std::uint64_t replicate) {
  const nlohmann::json config_json = nsgeo::load_config(config_path);
  if (!config_json.contains("simulate")) {
    throw nsgeo::ConfigError("config: missing 'simulate' block");
  }
  nsgeo::ScenarioConfig scenario = nsgeo::scenario_from_json(config_json.at("simulate"));
  if (seed) scenario.master_seed = *seed;

  const nsgeo::SimulatedDataset data = nsgeo::sample_dataset(scenario, replicate);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  nsgeo::write_dataset_csv((dir / "observed.csv").string(), data.observed);
  std::cerr << "wrote " << (dir / "observed.csv").string() << " (" << data.observed.n()
            << " rows)\n";
  if (data.heldout) {
    nsgeo::write_dataset_csv((dir / "heldout.csv").string(), *data.heldout);
    std::cerr << "wrote " << (dir / "heldout.csv").string() << " (" << data.heldout->n()
              << " rows)\n";
  }
  nsgeo::write_json((dir / "resolved_config.json").string(),
                    nlohmann::json{{"schema", nsgeo::kConfigSchema},
                                   {"command", "simulate"},
                                   {"simulate", nsgeo::scenario_to_json(scenario)},
                                   {"replicate", replicate}});
  return kExitOk;
}

int cmd_study(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed, std::optional<int> threads, bool verbose) {
  const nlohmann::json config_json = nsgeo::load_config(config_path);
  if (!config_json.contains("study")) {
    throw nsgeo::ConfigError("config: missing 'study' block");
  }
  const nlohmann::json& study_json = config_json.at("study");

  std::vector<nsgeo::ScenarioConfig> scenarios;
  if (!study_json.contains("scenarios") || study_json.at("scenarios").empty()) {
    throw nsgeo::ConfigError("study: need at least one scenario");
  }
  for (const auto& s : study_json.at("scenarios")) {
    scenarios.push_back(nsgeo::scenario_from_json(s));
  }
  if (seed) {
    for (auto& s : scenarios) s.master_seed = *seed;
  }

  nsgeo::StudyOptions options;
  options.fit = nsgeo::fit_options_from_json(config_json.value("fit", nlohmann::json::object()));
  if (study_json.contains("fit_forms")) {
    options.fit_forms.clear();
    for (const auto& f : study_json.at("fit_forms")) {
      options.fit_forms.push_back(nsgeo::cov_form_from_string(f.get<std::string>()));
    }
  }
  options.threads = threads ? *threads : study_json.value("threads", default_threads());
  options.progress = [&](std::size_t done, std::size_t total) {
    std::cerr << "replicate " << done << "/" << total << " complete\n";
  };
  if (verbose) {
    std::cerr << "study: " << scenarios.size() << " scenario(s), " << options.fit_forms.size()
              << " model(s), " << options.threads << " thread(s)\n";
  }

  const nsgeo::StudyReport report = nsgeo::run_study(scenarios, options);
  nsgeo::write_study_csvs(out_dir, report);

  nlohmann::json scenarios_json = nlohmann::json::array();
  for (const auto& s : scenarios) scenarios_json.push_back(nsgeo::scenario_to_json(s));
  nlohmann::json forms_json = nlohmann::json::array();
  for (const auto& f : options.fit_forms) forms_json.push_back(nsgeo::to_string(f));
  nsgeo::write_json((std::filesystem::path(out_dir) / "resolved_config.json").string(),
                    nlohmann::json{{"schema", nsgeo::kConfigSchema},
                                   {"command", "study"},
                                   {"study",
                                    {{"scenarios", scenarios_json},
                                     {"fit_forms", forms_json},
                                     {"threads", options.threads}}},
                                   {"fit", nsgeo::fit_options_to_json(options.fit)}});

  std::size_t failures = 0;
  for (const auto& [cell, count] : report.failure_counts) failures += count;
  std::printf("study complete: %zu parameter rows, %zu prediction rows, %zu excluded fits\n",
              report.parameter_table.size(), report.prediction_table.size(), failures);
  std::cerr << "wrote study tables to " << out_dir << "\n";
  return kExitOk;
}

int cmd_compare(const std::string& config_path, const std::string& data_path,
                const std::string& out_dir, std::optional<std::uint64_t> seed, bool verbose) {
  const nlohmann::json config_json = nsgeo::load_config(config_path);
  if (!config_json.contains("compare") || !config_json.at("compare").contains("models")) {
    throw nsgeo::ConfigError("config: missing 'compare.models' list");
  }
  const nlohmann::json& models_json = config_json.at("compare").at("models");
  if (models_json.size() < 2) throw nsgeo::ConfigError("compare: need at least two models");
  const nsgeo::FitOptions shared_fit =
      nsgeo::fit_options_from_json(config_json.value("fit", nlohmann::json::object()));

  struct Row {
    std::string label;
    bool ok = false;
    std::string error;
    double loglik = 0.0, aic = 0.0, bic = 0.0;
    int k = 0;
    nsgeo::FitResult fit;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < models_json.size(); ++i) {
    nsgeo::ModelConfig config = nsgeo::model_config_from_json(models_json[i]);
    config.fit = shared_fit;
    if (seed) config.fit.seed = *seed;
    if (config.label.empty()) {
      config.label = nsgeo::to_string(config.form) + "#" + std::to_string(i + 1);
    }
    Row row;
    row.label = config.label;
    try {
      const nsgeo::ObservationSet data = nsgeo::load_observations(data_path, config);
      row.fit = nsgeo::fit(data, config);
      row.ok = row.fit.converged;
      row.error = row.fit.converged ? "" : ("did not converge: " + row.fit.stop_reason);
      row.loglik = row.fit.loglik;
      row.aic = row.fit.aic;
      row.bic = row.fit.bic;
      row.k = row.fit.k;
      if (verbose) {
        std::cerr << "fitted " << row.label << ": loglik = " << row.fit.loglik << "\n";
      }
    } catch (const nsgeo::SchemaError&) {
      throw;  // bad data is fatal, not a per-model condition
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.ok != b.ok) return a.ok;  // failures sink to the bottom
    if (!a.ok) return a.label < b.label;
    if (a.aic != b.aic) return a.aic < b.aic;
    if (a.bic != b.bic) return a.bic < b.bic;
    return a.label < b.label;
  });

  std::printf("%-24s %12s %4s %12s %12s  %s\n", "model", "loglik", "k", "AIC", "BIC", "status");
  for (const auto& row : rows) {
    if (row.ok) {
      std::printf("%-24s %12.4f %4d %12.4f %12.4f  ok\n", row.label.c_str(), row.loglik, row.k,
                  row.aic, row.bic);
    } else {
      std::printf("%-24s %12s %4s %12s %12s  %s\n", row.label.c_str(), "-", "-", "-", "-",
                  row.error.c_str());
    }
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    nsgeo::CsvTable table;
    table.header = {"model", "loglik", "k", "aic", "bic", "status"};
    nlohmann::json models_echo = nlohmann::json::array();
    for (const auto& row : rows) {
      if (row.ok) {
        table.rows.push_back({row.label, nsgeo::format_double(row.loglik), std::to_string(row.k),
                              nsgeo::format_double(row.aic), nsgeo::format_double(row.bic), "ok"});
        nsgeo::write_fit_json((dir / ("fit_" + row.label + ".json")).string(), row.fit);
        models_echo.push_back(nsgeo::model_config_to_json(row.fit.config));
      } else {
        table.rows.push_back({row.label, "", "", "", "", row.error});
      }
    }
    nsgeo::csv_write((dir / "comparison.csv").string(), table);
    nsgeo::write_json((dir / "resolved_config.json").string(),
                      nlohmann::json{{"schema", nsgeo::kConfigSchema},
                                     {"command", "compare"},
                                     {"compare", {{"models", models_echo}}},
                                     {"fit", nsgeo::fit_options_to_json(shared_fit)}});
    std::cerr << "wrote comparison tables to " << out_dir << "\n";
  }

  const bool any_ok = std::any_of(rows.begin(), rows.end(), [](const Row& r) { return r.ok; });
  return any_ok ? kExitOk : kExitNoConverge;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geostatistical models with covariate-driven non-stationary covariance"};
  app.require_subcommand(1);

  std::string config_path, data_path, grid_path, fit_path, out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads_opt;
  std::uint64_t replicate = 0;
  bool verbose = false;
  app.add_flag("--verbose,-v", verbose, "Extra diagnostics on stderr");

  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit one model by maximum likelihood");
  fit_cmd->add_option("--config", config_path, "Model config JSON")->required();
  fit_cmd->add_option("--data", data_path, "Observation CSV")->required();
  fit_cmd->add_option("--out", out_path, "Output fit file")->capture_default_str();
  fit_cmd->add_option("--seed", seed, "Override the fit seed");

  CLI::App* predict_cmd = app.add_subcommand("predict", "Krige a saved fit onto a grid");
  predict_cmd->add_option("--fit", fit_path, "Fit file from the fit subcommand")->required();
  predict_cmd->add_option("--data", data_path, "Observation CSV the model was fitted to")
      ->required();
  predict_cmd->add_option("--grid", grid_path, "Prediction grid CSV")->required();
  predict_cmd->add_option("--out", out_path, "Output predictions CSV")->capture_default_str();
  predict_cmd->add_option("--threads", threads_opt, "Worker threads for grid batches");

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Write one synthetic replicate");
  simulate_cmd->add_option("--config", config_path, "Config JSON with a 'simulate' block")
      ->required();
  simulate_cmd->add_option("--out", out_path, "Output directory")->capture_default_str();
  simulate_cmd->add_option("--seed", seed, "Override the master seed");
  simulate_cmd->add_option("--replicate", replicate, "Replicate index to draw")
      ->capture_default_str();

  CLI::App* study_cmd = app.add_subcommand("study", "Run the full synthetic-data protocol");
  study_cmd->add_option("--config", config_path, "Config JSON with a 'study' block")->required();
  study_cmd->add_option("--out", out_path, "Output directory")->capture_default_str();
  study_cmd->add_option("--seed", seed, "Override every scenario's master seed");
  study_cmd->add_option("--threads", threads_opt, "Concurrent replicate tasks");

  CLI::App* compare_cmd = app.add_subcommand("compare", "Rank several models on one dataset");
  compare_cmd->add_option("--config", config_path, "Config JSON with a 'compare' block")
      ->required();
  compare_cmd->add_option("--data", data_path, "Observation CSV")->required();
  compare_cmd->add_option("--out", out_path, "Optional output directory");
  compare_cmd->add_option("--seed", seed, "Override the fit seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) {
      return cmd_fit(config_path, data_path, out_path.empty() ? "fit.json" : out_path, seed,
                     verbose);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(fit_path, data_path, grid_path,
                         out_path.empty() ? "predictions.csv" : out_path,
                         threads_opt ? *threads_opt : default_threads(), verbose);
    }
    if (simulate_cmd->parsed()) {
      return cmd_simulate(config_path, out_path.empty() ? "simulated" : out_path, seed, replicate);
    }
    if (study_cmd->parsed()) {
      return cmd_study(config_path, out_path.empty() ? "study" : out_path, seed, threads_opt,
                       verbose);
    }
    if (compare_cmd->parsed()) {
      return cmd_compare(config_path, data_path, out_path, seed, verbose);
    }
  } catch (const nsgeo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nsgeo::SchemaError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nsgeo::OptimizationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConverge;
  } catch (const nsgeo::SingularCovarianceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConverge;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
