#include "admm_dkf/errors.hpp"
#include "admm_dkf/harness.hpp"
#include "admm_dkf/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <thread>

namespace admm_dkf {

StateSpaceModel build_model(const ScenarioConfig& config) {
  ConstantVelocityOptions o;
  o.dt = config.dt;
  o.q_intensity = config.q_intensity;
  o.n_nodes = config.n_nodes;
  o.assignment = config.sensor_assignment;
  o.assignment_seed = config.assignment_seed;
  o.r_var = config.r_var;
  return build_constant_velocity_model(o);
}

SensorGraph build_scenario_graph(const ScenarioConfig& config) {
  return build_graph(config.topology, config.n_nodes);
}

DkfParams resolve_params(const ScenarioConfig& config, double lambda_max) {
  DkfParams p = auto_params(lambda_max, config.L);
  if (config.mu) p.mu = *config.mu;
  p.alpha_lambda = config.alpha_lambda ? *config.alpha_lambda : 0.9 * state_step_bound(lambda_max) - 2.0 * p.mu;
  if (config.alpha_nu) p.alpha_nu = *config.alpha_nu;
  return p;
}

ValidationReport validate_params(const ScenarioConfig& config, const SensorGraph& graph) {
  ValidationReport r;
  r.spectrum = spectral_summary(graph);
  r.params = resolve_params(config, r.spectrum.lambda_max);
  r.covariance = check_covariance_stability(r.params, r.spectrum);
  r.state = check_state_stability(r.params, r.spectrum);
  return r;
}

ValidationReport validate_params(const ScenarioConfig& config) {
  return validate_params(config, build_scenario_graph(config));
}

void print_validation(std::ostream& out, const ValidationReport& r) {
  const auto flags = out.flags();
  const auto verdict = [](bool ok) { return ok ? "PASS" : "FAIL"; };
  out << std::setprecision(6);
  out << "nodes:               " << r.spectrum.eigenvalues.size() << '\n'
      << "lambda_2:            " << r.spectrum.lambda_2 << '\n'
      << "lambda_max:          " << r.spectrum.lambda_max << '\n'
      << "alpha_lambda:        " << r.params.alpha_lambda << '\n'
      << "mu:                  " << r.params.mu << '\n'
      << "alpha_nu:            " << r.params.alpha_nu << '\n'
      << "L:                   " << r.params.L << '\n'
      << "covariance bound:    alpha_nu = " << r.covariance.lhs << " < 2/(3 lambda_max) = "
      << r.covariance.bound << "  " << verdict(r.covariance.sufficient_bound_holds) << '\n'
      << "  max mode radius:   " << r.covariance.spectral_radius << "  "
      << (r.covariance.is_schur ? "schur" : "NOT schur") << '\n'
      << "state bound:         alpha_lambda + 2 mu = " << r.state.lhs << " < 2/lambda_max = "
      << r.state.bound << "  " << verdict(r.state.sufficient_bound_holds) << '\n'
      << "  max mode radius:   " << r.state.spectral_radius << "  "
      << (r.state.is_schur ? "schur" : "NOT schur") << '\n';
  out << "per-mode radii (eigenvalue, covariance, state):\n";
  for (std::size_t k = 0; k < r.covariance.per_mode_radii.size(); ++k)
    out << "  " << r.covariance.per_mode_radii[k].first << "  " << r.covariance.per_mode_radii[k].second
        << "  " << r.state.per_mode_radii[k].second << '\n';
  out << "overall:             " << verdict(r.passed()) << '\n';
  out.flags(flags);
}

namespace {

struct RunAccumulator {
  std::vector<std::vector<double>> sq_pos, sq_vel, consensus, cov;
  CommLedger ledger;
  CommLedger::Counts state_total, cov_total;
  double conservation = 0.0;
  long projections = 0;
  long violations = 0;
};

RunAccumulator execute_run(const ScenarioConfig& config, const StateSpaceModel& model,
                           const SensorGraph& graph, const DkfParams& params, const SymMatrix& P_star,
                           int run) {
  const int N = model.n_nodes();
  const int T = config.horizon_steps;
  const std::uint64_t run_seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(run));

  SimulationOptions sim;
  sim.noise_free = config.noise_free;
  const Trajectory traj = simulate_trajectory(model, T, derive_seed(run_seed, 1), sim);

  Rng init_rng(derive_seed(run_seed, 2));
  std::vector<NodeInit> inits;
  inits.reserve(N);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd x = model.x0_mean;
    if (!config.exact_consensus_init)
      for (Eigen::Index k = 0; k < x.size(); ++k)
        x(k) += config.init_spread * (2.0 * uniform01(init_rng) - 1.0);
    inits.push_back({x, model.P0});
  }

  RunAccumulator acc;
  acc.sq_pos.assign(T, std::vector<double>(N, 0.0));
  acc.sq_vel.assign(T, std::vector<double>(N, 0.0));
  acc.cov.assign(T, std::vector<double>(N, 0.0));
  acc.consensus.assign(T, std::vector<double>(params.L + 1, 0.0));

  TimeStepOptions options;
  options.sub_iterated_covariance = config.sub_iterated_covariance;
  int current_t = 0;
  options.on_sub_iteration = [&](int l, std::span<const NodeState> nodes) {
    acc.consensus[current_t][l] = consensus_error(nodes);
  };

  DistributedKalmanFilter filter(graph, model, params, inits, options);
  const double p_star_norm = P_star.matrix().norm();
  for (int t = 0; t < T; ++t) {
    current_t = t;
    try {
      filter.step(traj.measurements[t]);
    } catch (const NodeFailure& e) {
      throw NumericalFailure(run, t + 1, e.node(), e.what());
    } catch (const Error& e) {
      throw NumericalFailure(run, t + 1, -1, e.what());
    }
    const auto& x = traj.states[t];
    const auto nodes = filter.nodes();
    for (int i = 0; i < N; ++i) {
      const Eigen::VectorXd err = x - nodes[i].x_post;
      if (!err.allFinite()) throw NumericalFailure(run, t + 1, i, "non-finite state estimate");
      acc.sq_pos[t][i] = err.head(2).squaredNorm();
      acc.sq_vel[t][i] = err.tail(2).squaredNorm();
      acc.cov[t][i] = (nodes[i].P_prior.matrix() - P_star.matrix()).norm() / p_star_norm;
    }
    acc.conservation = std::max(acc.conservation, conservation_residual(nodes));
  }
  for (const auto& node : filter.nodes()) acc.projections += node.projections;
  acc.violations = filter.wire().violations();
  acc.state_total = filter.ledger().total(Phase::state);
  acc.cov_total = filter.ledger().total(Phase::covariance);
  if (run == 0) acc.ledger = filter.ledger();
  return acc;
}

}  // namespace

RunMetrics run_scenario(const ScenarioConfig& config) {
  config.validate();
  const SensorGraph graph = build_scenario_graph(config);
  const ValidationReport validation = validate_params(config, graph);
  if (!validation.passed() && !config.override_stability_guard)
    throw ConfigRejected("step sizes violate the stability bounds (set override_stability_guard to run anyway)");

  const StateSpaceModel model = build_model(config);
  const SymMatrix P_star = dare_solve(model.F, model.stacked_H(), model.Q, model.stacked_R());
  const DkfParams params = validation.params;

  const int runs = config.n_mc_runs;
  std::vector<RunAccumulator> results(runs);
  std::vector<std::exception_ptr> errors(runs);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < runs; r = next++) {
      try {
        results[r] = execute_run(config, model, graph, params, P_star, r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(config.threads, runs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const int N = config.n_nodes;
  const int T = config.horizon_steps;
  RunMetrics m;
  m.n_nodes = N;
  m.horizon = T;
  m.L = params.L;
  m.n_runs = runs;
  m.P_star = P_star;
  m.validation = validation;
  m.rmse_pos.assign(T, std::vector<double>(N, 0.0));
  m.rmse_vel.assign(T, std::vector<double>(N, 0.0));
  m.cov_error.assign(T, std::vector<double>(N, 0.0));
  m.consensus_error.assign(T, std::vector<double>(params.L + 1, 0.0));

  for (int r = 0; r < runs; ++r) {
    const auto& acc = results[r];
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < N; ++i) {
        m.rmse_pos[t][i] += acc.sq_pos[t][i];
        m.rmse_vel[t][i] += acc.sq_vel[t][i];
        m.cov_error[t][i] += acc.cov[t][i];
      }
      for (int l = 0; l <= params.L; ++l) m.consensus_error[t][l] += acc.consensus[t][l];
    }
    m.max_conservation_residual = std::max(m.max_conservation_residual, acc.conservation);
    m.projections += acc.projections;
    m.wire_violations += acc.violations;
    const auto& ref = results[0];
    if (acc.state_total.scalars != ref.state_total.scalars ||
        acc.state_total.messages != ref.state_total.messages ||
        acc.cov_total.scalars != ref.cov_total.scalars || acc.cov_total.messages != ref.cov_total.messages)
      m.comm_identical_across_runs = false;
  }
  const double inv_runs = 1.0 / runs;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      m.rmse_pos[t][i] = std::sqrt(m.rmse_pos[t][i] * inv_runs);
      m.rmse_vel[t][i] = std::sqrt(m.rmse_vel[t][i] * inv_runs);
      m.cov_error[t][i] *= inv_runs;
    }
    for (auto& v : m.consensus_error[t]) v *= inv_runs;
  }
  m.comm = std::move(results[0].ledger);
  return m;
}

}  // namespace admm_dkf
