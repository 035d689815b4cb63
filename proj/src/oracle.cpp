#include "admm_dkf/oracle.hpp"

#include "admm_dkf/errors.hpp"

namespace admm_dkf::oracle {

CentralizedState CentralizedState::from_prior(Eigen::VectorXd mean, const SymMatrix& cov) {
  return {std::move(mean), cov, cov, spd_inverse(cov)};
}

CentralizedState centralized_predict(const CentralizedState& state, const StateSpaceModel& model) {
  CentralizedState next;
  next.x_hat = model.F * state.x_hat;
  next.P_prior = SymMatrix(model.F * state.P.matrix() * model.F.transpose() + model.Q.matrix());
  next.P = next.P_prior;
  next.omega = spd_inverse(next.P_prior);
  return next;
}

CentralizedState centralized_correct(const CentralizedState& prior,
                                     std::span<const Observation> observations) {
  const SymMatrix omega_prior = spd_inverse(prior.P);
  Eigen::MatrixXd omega = omega_prior.matrix();
  Eigen::VectorXd info = omega_prior.matrix() * prior.x_hat;
  for (const auto& o : observations) {
    omega += o.sensor.information().matrix();
    info += o.sensor.H.transpose() * spd_solve(o.sensor.R, o.y);
  }
  CentralizedState post;
  post.P_prior = prior.P;
  post.omega = SymMatrix(omega);
  try {
    post.P = spd_inverse(post.omega);
  } catch (const NotPositiveDefinite&) {
    throw NotPositiveDefinite("centralized correction produced a non-PD information matrix");
  }
  post.x_hat = spd_solve(post.omega, info);
  return post;
}

CentralizedState centralized_kf_step(const CentralizedState& state, const StateSpaceModel& model,
                                     std::span<const Observation> observations) {
  return centralized_correct(centralized_predict(state, model), observations);
}

namespace {

struct LocalTerms {
  SymMatrix gain_inv;    // K_i^{-1}
  Eigen::VectorXd info;  // b_i
};

LocalTerms local_terms(const LocalProblem& p, double n_nodes) {
  const SymMatrix prior_info = spd_inverse(p.P_prior);
  const Eigen::MatrixXd HtRinv = spd_solve(p.R, p.H).transpose();
  return {SymMatrix(HtRinv * p.H + prior_info.matrix() / n_nodes),
          HtRinv * p.y + prior_info.matrix() * p.x_prior / n_nodes};
}

}  // namespace

Eigen::VectorXd consensus_fixed_point(std::span<const LocalProblem> nodes) {
  if (nodes.empty()) throw DimensionError("consensus_fixed_point: no nodes");
  const auto N = static_cast<double>(nodes.size());
  const auto n = nodes.front().x_prior.size();
  Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (const auto& p : nodes) {
    const auto terms = local_terms(p, N);
    hessian += terms.gain_inv.matrix();
    rhs += terms.info;
  }
  return spd_solve(SymMatrix(hessian), rhs);
}

Eigen::VectorXd consensus_objective_gradient(std::span<const LocalProblem> nodes,
                                             const Eigen::VectorXd& xi) {
  const auto N = static_cast<double>(nodes.size());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(xi.size());
  for (const auto& p : nodes) {
    grad += spd_solve(p.P_prior, Eigen::VectorXd(xi - p.x_prior)) / N;
    grad -= p.H.transpose() * spd_solve(p.R, Eigen::VectorXd(p.y - p.H * xi));
  }
  return grad;
}

Eigen::VectorXd local_map_average(std::span<const LocalProblem> nodes) {
  if (nodes.empty()) throw DimensionError("local_map_average: no nodes");
  const auto N = static_cast<double>(nodes.size());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(nodes.front().x_prior.size());
  for (const auto& p : nodes) {
    const auto terms = local_terms(p, N);
    sum += spd_solve(terms.gain_inv, terms.info);
  }
  return sum / N;
}

}  // namespace admm_dkf::oracle
