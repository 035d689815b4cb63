#pragma once

#include "admm_dkf/dkf.hpp"
#include "admm_dkf/graph.hpp"
#include "admm_dkf/linalg.hpp"
#include "admm_dkf/params.hpp"
#include "admm_dkf/sysmodel.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace admm_dkf {

/// One experiment definition. Every field has a default; the defaults are the
/// 100-node constant-velocity reproduction run.
struct ScenarioConfig {
  // [model]
  double dt = 0.1;
  double q_intensity = 1.0;
  double r_var = 0.5;
  SensorAssignment sensor_assignment = SensorAssignment::static_split;
  std::uint64_t assignment_seed = 0;
  double init_spread = 1.0;  // half-width of the box x_{i,0|0} is drawn from

  // [graph]
  int n_nodes = 100;
  TopologySpec topology = topology::RandomRegular{8, 3, 1000};

  // [dkf]; an empty optional means "auto"
  std::optional<double> alpha_lambda = 0.10;
  std::optional<double> mu = 0.001;
  std::optional<double> alpha_nu = 0.04;
  int L = 20;

  // [run]
  int horizon_steps = 100;
  int n_mc_runs = 50;
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "results";
  int threads = 1;

  // [flags]
  bool noise_free = false;
  bool exact_consensus_init = false;
  bool sub_iterated_covariance = false;
  bool override_stability_guard = false;

  /// Throws ConfigRejected on out-of-range values.
  void validate() const;
};

/// key = value lines grouped in [model], [graph], [dkf], [run], [flags].
/// '#' and ';' start comments. Unknown keys are rejected. Relative edge_file
/// paths resolve against `base_dir`.
ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const ScenarioConfig& config);

StateSpaceModel build_model(const ScenarioConfig& config);
SensorGraph build_scenario_graph(const ScenarioConfig& config);
/// Fills "auto" entries from lambda_max.
DkfParams resolve_params(const ScenarioConfig& config, double lambda_max);

struct ValidationReport {
  SpectralSummary spectrum;
  DkfParams params;
  StabilityReport covariance;
  StabilityReport state;

  /// Both sufficient bounds hold.
  bool passed() const { return covariance.sufficient_bound_holds && state.sufficient_bound_holds; }
};

ValidationReport validate_params(const ScenarioConfig& config);
ValidationReport validate_params(const ScenarioConfig& config, const SensorGraph& graph);
void print_validation(std::ostream& out, const ValidationReport& report);

struct RunMetrics {
  int n_nodes = 0;
  int horizon = 0;
  int L = 0;
  int n_runs = 0;
  std::vector<std::vector<double>> rmse_pos;         // [t][node]
  std::vector<std::vector<double>> rmse_vel;         // [t][node]
  std::vector<std::vector<double>> consensus_error;  // [t][l], l = 0..L
  std::vector<std::vector<double>> cov_error;        // [t][node], relative Frobenius vs P*
  CommLedger comm;                                   // ledger of run 0
  bool comm_identical_across_runs = true;
  double max_conservation_residual = 0.0;
  long wire_violations = 0;
  long projections = 0;
  SymMatrix P_star;
  ValidationReport validation;
};

/// Executes every Monte-Carlo run and aggregates the metrics in run order.
/// Throws ConfigRejected when the stability guard fails without override and
/// NumericalFailure (run, t, node) on a fatal numerical error.
RunMetrics run_scenario(const ScenarioConfig& config);

/// Writes rmse_position.csv, rmse_velocity.csv, consensus_error.csv,
/// covariance_error.csv and communication.csv. Throws IoError.
void export_csv(const RunMetrics& metrics, const std::filesystem::path& output_dir);

}  // namespace admm_dkf
