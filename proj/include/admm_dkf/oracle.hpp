#pragma once

#include "admm_dkf/linalg.hpp"
#include "admm_dkf/sysmodel.hpp"

#include <span>
#include <vector>

namespace admm_dkf::oracle {

/// Centralised information-form Kalman filter state.
struct CentralizedState {
  Eigen::VectorXd x_hat;
  SymMatrix P;        // posterior covariance
  SymMatrix P_prior;  // covariance before the latest correction
  SymMatrix omega;    // P^{-1}

  static CentralizedState from_prior(Eigen::VectorXd mean, const SymMatrix& cov);
};

/// x <- F x,  P <- F P F^T + Q.
CentralizedState centralized_predict(const CentralizedState& state, const StateSpaceModel& model);

/// Information-form correction with every node's observation:
///   Omega+ = Omega- + sum H^T R^{-1} H,   Omega+ x+ = Omega- x- + sum H^T R^{-1} y.
/// An empty observation set leaves the prior untouched.
CentralizedState centralized_correct(const CentralizedState& prior,
                                     std::span<const Observation> observations);

CentralizedState centralized_kf_step(const CentralizedState& state, const StateSpaceModel& model,
                                     std::span<const Observation> observations);

/// Everything one node contributes to the network-wide MAP problem at time t.
struct LocalProblem {
  Eigen::VectorXd x_prior;
  SymMatrix P_prior;
  Eigen::VectorXd y;
  Eigen::MatrixXd H;
  SymMatrix R;
};

/// Minimiser of sum_i f_i(xi) under the consensus constraint:
///   (sum_i K_i^{-1})^{-1} sum_i (H_i^T R_i^{-1} y_i + P_i^{-1} x_i / N),
///   K_i^{-1} = H_i^T R_i^{-1} H_i + P_i^{-1} / N.
Eigen::VectorXd consensus_fixed_point(std::span<const LocalProblem> nodes);

/// Gradient of sum_i f_i at xi (prior terms weighted by 1/N).
Eigen::VectorXd consensus_objective_gradient(std::span<const LocalProblem> nodes,
                                             const Eigen::VectorXd& xi);

/// (1/N) sum_i K_i b_i, the network average of the per-node minimisers.
/// This is the value the primal-only sub-iteration actually settles on: its
/// node sum is invariant from the first sub-iteration onward.
Eigen::VectorXd local_map_average(std::span<const LocalProblem> nodes);

}  // namespace admm_dkf::oracle
