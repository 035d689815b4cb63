#pragma once

#include "admm_dkf/dkf.hpp"
#include "admm_dkf/graph.hpp"
#include "admm_dkf/linalg.hpp"
#include "admm_dkf/random.hpp"
#include "admm_dkf/sysmodel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace testing {

using namespace admm_dkf;

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform01(rng) * static_cast<double>(hi - lo + 1));
}

inline Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = uniform(rng, -1.0, 1.0);
  return m;
}

inline Eigen::MatrixXd random_symmetric(Rng& rng, int n) {
  const Eigen::MatrixXd g = random_matrix(rng, n, n);
  return g + g.transpose();
}

/// G G^T + I.
inline SymMatrix random_spd(Rng& rng, int n) {
  const Eigen::MatrixXd g = random_matrix(rng, n, n);
  return SymMatrix(g * g.transpose() + Eigen::MatrixXd::Identity(n, n));
}

/// Orthogonal basis times a log-uniform spectrum in [1, cond].
inline SymMatrix random_spd_with_condition(Rng& rng, int n, double cond) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(rng, n, n));
  const Eigen::MatrixXd U = qr.householderQ();
  Eigen::VectorXd s(n);
  for (int k = 0; k < n; ++k) s(k) = std::pow(cond, uniform01(rng));
  s(0) = 1.0;
  if (n > 1) s(n - 1) = cond;
  return SymMatrix(U * s.asDiagonal() * U.transpose());
}

/// Erdos-Renyi edges, optionally re-drawn until connected.
inline std::vector<Edge> random_edges(Rng& rng, int n, double p) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform01(rng) < p) edges.emplace_back(i, j);
  return edges;
}

inline SensorGraph random_connected_graph(Rng& rng, int n, double p) {
  for (;;) {
    auto g = SensorGraph::from_edges(n, random_edges(rng, n, p));
    if (is_connected(g)) return g;
  }
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  return (a - b).cwiseAbs().maxCoeff();
}

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
  return out;
}

/// Lower-triangle column-major half-vectorisation, written out independently.
inline Eigen::VectorXd dense_vech(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  Eigen::VectorXd v(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = c; r < n; ++r) v(k++) = m(r, c);
  return v;
}

inline Eigen::MatrixXd dense_unvech(const Eigen::VectorXd& v, Eigen::Index n) {
  Eigen::MatrixXd m(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = c; r < n; ++r) m(r, c) = m(c, r) = v(k++);
  return m;
}

/// Result of one monolithic time step on the stacked network vectors.
struct DenseStep {
  Eigen::VectorXd xi, lambda, theta, nu, x_post;
  std::vector<Eigen::MatrixXd> P_prior, P_post;
};

/// One full time step written against the stacked Laplacian L (x) I with
/// explicit inverses and block-diagonal gains. Shares no code with the engine.
inline DenseStep dense_time_step(const std::vector<NodeState>& before, const SensorGraph& graph,
                                 const StateSpaceModel& model, const std::vector<Observation>& obs,
                                 const DkfParams& params) {
  const int N = static_cast<int>(before.size());
  const int n = model.n();
  const int nc = n * (n + 1) / 2;
  const Eigen::MatrixXd F = model.F;
  const Eigen::MatrixXd Q = model.Q.matrix();

  DenseStep out;
  Eigen::VectorXd x_prior(N * n), b(N * n), omega(N * nc), theta(N * nc), nu(N * nc);
  Eigen::MatrixXd Kinv = Eigen::MatrixXd::Zero(N * n, N * n);
  std::vector<Eigen::MatrixXd> prior_info(N);
  for (int i = 0; i < N; ++i) {
    const Eigen::MatrixXd P = F * before[i].P_post.matrix() * F.transpose() + Q;
    out.P_prior.push_back(P);
    prior_info[i] = P.inverse();
    const Eigen::MatrixXd Rinv = obs[i].sensor.R.matrix().inverse();
    const Eigen::MatrixXd& H = obs[i].sensor.H;
    x_prior.segment(i * n, n) = F * before[i].x_post;
    Kinv.block(i * n, i * n, n, n) = H.transpose() * Rinv * H + prior_info[i] / N;
    b.segment(i * n, n) = H.transpose() * Rinv * obs[i].y + prior_info[i] * x_prior.segment(i * n, n) / N;
    omega.segment(i * nc, nc) = N * dense_vech(H.transpose() * Rinv * H);
    theta.segment(i * nc, nc) = before[i].theta;
    nu.segment(i * nc, nc) = before[i].nu_tilde;
  }
  const Eigen::MatrixXd K = Kinv.inverse();
  const Eigen::MatrixXd Lx = kron(graph.laplacian(), Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd Lc = kron(graph.laplacian(), Eigen::MatrixXd::Identity(nc, nc));

  Eigen::VectorXd xi = x_prior;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(N * n);
  for (int l = 0; l < params.L; ++l) {
    const Eigen::VectorXd d = Lx * xi;
    lambda += params.alpha_lambda * Kinv * d;
    xi = K * (b - lambda) - params.mu * d;
  }

  const Eigen::VectorXd e = Lc * theta;
  nu += params.alpha_nu * e;
  theta = omega - nu - params.alpha_nu * e;

  out.xi = xi;
  out.lambda = lambda;
  out.theta = theta;
  out.nu = nu;
  out.x_post = xi;
  for (int i = 0; i < N; ++i)
    out.P_post.push_back((prior_info[i] + dense_unvech(theta.segment(i * nc, nc), n)).inverse());
  return out;
}

/// Largest deviation of the engine's node states from the dense step.
inline double dense_step_discrepancy(std::span<const NodeState> nodes, const DenseStep& dense) {
  const int N = static_cast<int>(nodes.size());
  const int n = static_cast<int>(nodes.front().xi.size());
  const int nc = static_cast<int>(nodes.front().theta.size());
  double worst = 0.0;
  for (int i = 0; i < N; ++i) {
    worst = std::max(worst, max_abs_diff(nodes[i].xi, dense.xi.segment(i * n, n)));
    worst = std::max(worst, max_abs_diff(nodes[i].lambda_tilde, dense.lambda.segment(i * n, n)));
    worst = std::max(worst, max_abs_diff(nodes[i].theta, dense.theta.segment(i * nc, nc)));
    worst = std::max(worst, max_abs_diff(nodes[i].nu_tilde, dense.nu.segment(i * nc, nc)));
    worst = std::max(worst, max_abs_diff(nodes[i].x_post, dense.x_post.segment(i * n, n)));
    worst = std::max(worst, max_abs_diff(nodes[i].P_prior.matrix(), dense.P_prior[i]));
    worst = std::max(worst, max_abs_diff(nodes[i].P_post.matrix(), dense.P_post[i]));
  }
  return worst;
}

/// Initial estimates drawn from a box of half-width `spread` around the model mean.
inline std::vector<NodeInit> box_inits(const StateSpaceModel& model, Rng& rng, double spread) {
  std::vector<NodeInit> inits;
  for (int i = 0; i < model.n_nodes(); ++i) {
    Eigen::VectorXd x = model.x0_mean;
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) += uniform(rng, -spread, spread);
    inits.push_back({x, model.P0});
  }
  return inits;
}

inline ConstantVelocityOptions cv_options(int n_nodes) {
  ConstantVelocityOptions o;
  o.n_nodes = n_nodes;
  return o;
}

}  // namespace testing
