#pragma once

#include "admm_dkf/linalg.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace admm_dkf {

struct SensorSpec {
  int node_id = 0;
  Eigen::MatrixXd H;  // m_i x n
  SymMatrix R;        // m_i x m_i, SPD

  /// H^T R^{-1} H, this sensor's information-rate contribution.
  SymMatrix information() const;
};

enum class SensorAssignment {
  static_split,     // node keeps its sensor for the whole run
  per_step_random,  // node picks one of the candidate sensors at every step
};

/// x_{t+1} = F x_t + w_t,  y_{i,t} = H_i x_t + v_{i,t}.
struct StateSpaceModel {
  Eigen::MatrixXd F;
  SymMatrix Q;
  Eigen::VectorXd x0_mean;
  SymMatrix P0;
  /// Nominal (t = 0) sensor of every node.
  std::vector<SensorSpec> sensors;

  SensorAssignment assignment = SensorAssignment::static_split;
  /// Sensor rows a node may switch between under per_step_random.
  std::vector<SensorSpec> candidates;
  std::uint64_t assignment_seed = 0;

  int n() const { return static_cast<int>(F.rows()); }
  int n_nodes() const { return static_cast<int>(sensors.size()); }
  Eigen::MatrixXd stacked_H() const;
  SymMatrix stacked_R() const;

  /// Checks dimensions, SPD-ness of Q, P0 and every R_i, and observability of
  /// the stacked pair. Throws DimensionError, NotPositiveDefinite or ObservabilityError.
  void validate() const;
};

struct ConstantVelocityOptions {
  double dt = 0.1;
  double q_intensity = 1.0;
  int n_nodes = 100;
  SensorAssignment assignment = SensorAssignment::static_split;
  std::uint64_t assignment_seed = 0;
  double r_var = 0.5;
};

/// Planar constant-velocity target, state (p_x, p_y, v_x, v_y). Each node
/// measures a single position coordinate; under static_split the first
/// ceil(N/2) nodes see p_x and the rest p_y.
StateSpaceModel build_constant_velocity_model(const ConstantVelocityOptions& options);

/// One node's reading at one time step, together with the sensor that produced it.
struct Observation {
  Eigen::VectorXd y;
  SensorSpec sensor;
};

struct Trajectory {
  std::vector<Eigen::VectorXd> states;                 // x_1 ... x_T
  std::vector<std::vector<Observation>> measurements;  // [t][node]
  Eigen::VectorXd initial_state;                       // x_0
  std::uint64_t seed = 0;
};

struct SimulationOptions {
  bool noise_free = false;  // w = 0, v = 0, x_0 = x0_mean
};

/// Deterministic given (model, n_steps, seed).
Trajectory simulate_trajectory(const StateSpaceModel& model, int n_steps, std::uint64_t seed,
                               SimulationOptions options = {});

/// sum_i H_i^T R_i^{-1} H_i over the nominal sensors.
SymMatrix information_rate_target(const StateSpaceModel& model);

/// Draws from N(mean, cov) with a Cholesky factor of cov.
class GaussianSampler {
 public:
  GaussianSampler(Eigen::VectorXd mean, const SymMatrix& cov);
  template <class Gen>
  Eigen::VectorXd operator()(Gen& rng) {
    Eigen::VectorXd z(mean_.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = normal_(rng);
    return mean_ + factor_ * z;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
  std::normal_distribution<double> normal_;
};

}  // namespace admm_dkf
