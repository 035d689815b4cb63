#pragma once

namespace admm_dkf {

/// Step sizes of the distributed filter.
struct DkfParams {
  double alpha_lambda = 0.10;  // state dual step
  double mu = 0.001;           // quadratic penalty weight
  double alpha_nu = 0.04;      // covariance consensus step
  int L = 20;                  // state-correction sub-iterations per time step
};

/// Largest admissible covariance step: alpha_nu < 2 / (3 lambda_max).
inline double covariance_step_bound(double lambda_max) { return 2.0 / (3.0 * lambda_max); }

/// Bound on alpha_lambda + 2 mu: 2 / lambda_max.
inline double state_step_bound(double lambda_max) { return 2.0 / lambda_max; }

/// Defaults placed inside the sufficient region with a 0.9 safety factor.
inline DkfParams auto_params(double lambda_max, int L = 20) {
  DkfParams p;
  p.alpha_nu = 0.9 * covariance_step_bound(lambda_max);
  p.mu = 0.01 * state_step_bound(lambda_max);
  p.alpha_lambda = 0.9 * state_step_bound(lambda_max) - 2.0 * p.mu;
  p.L = L;
  return p;
}

}  // namespace admm_dkf
