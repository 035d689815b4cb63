#include "admm_dkf/dkf.hpp"

#include "admm_dkf/errors.hpp"

#include <algorithm>
#include <exception>
#include <string>
#include <thread>

namespace admm_dkf {

std::vector<NodeState> initialize_nodes(const StateSpaceModel& model, std::span<const NodeInit> inits) {
  const int N = model.n_nodes();
  if (static_cast<int>(inits.size()) != N)
    throw DimensionError("need one initial estimate per node");
  const int n = model.n();
  std::vector<NodeState> nodes(N);
  for (int i = 0; i < N; ++i) {
    auto& node = nodes[i];
    if (inits[i].x_post.size() != n || inits[i].P_post.dim() != n)
      throw DimensionError("initial estimate of node " + std::to_string(i) + " has wrong dimension");
    node.node_id = i;
    node.x_post = inits[i].x_post;
    node.P_post = inits[i].P_post;
    node.x_prior = node.x_post;
    node.P_prior = node.P_post;
    node.xi = node.x_post;
    node.lambda_tilde = Eigen::VectorXd::Zero(n);
    node.scaled_omega = static_cast<double>(N) * vech(model.sensors[i].information()).data;
    node.theta = node.scaled_omega;
    node.nu_tilde = Eigen::VectorXd::Zero(node.theta.size());
  }
  return nodes;
}

// ---------------------------------------------------------------------------
// Ledger and wire

void CommLedger::record(int t, int node, Phase phase, long messages, long scalars) {
  auto& c = entries_[{t, node, phase}];
  c.messages += messages;
  c.scalars += scalars;
}

CommLedger::Counts CommLedger::total() const {
  Counts c;
  for (const auto& [key, v] : entries_) {
    c.messages += v.messages;
    c.scalars += v.scalars;
  }
  return c;
}

CommLedger::Counts CommLedger::total(Phase phase) const {
  Counts c;
  for (const auto& [key, v] : entries_)
    if (std::get<2>(key) == phase) {
      c.messages += v.messages;
      c.scalars += v.scalars;
    }
  return c;
}

CommLedger::Counts CommLedger::at(int t, int node, Phase phase) const {
  auto it = entries_.find({t, node, phase});
  return it == entries_.end() ? Counts{} : it->second;
}

Wire::Wire(const SensorGraph& graph, CommLedger& ledger)
    : graph_(&graph),
      ledger_(&ledger),
      state_in_(graph.size()),
      cov_in_(graph.size()),
      state_count_(graph.size(), 0),
      cov_count_(graph.size(), 0) {
  for (int i = 0; i < graph.size(); ++i) {
    state_in_[i].resize(graph.neighbors(i).size());
    cov_in_[i].resize(graph.neighbors(i).size());
  }
}

void Wire::clear_inboxes() {
  std::fill(state_count_.begin(), state_count_.end(), 0);
  std::fill(cov_count_.begin(), cov_count_.end(), 0);
}

void Wire::broadcast(const NodeState& from, Payload payload, int t, int l) {
  const auto& targets = graph_->neighbors(from.node_id);
  const long fanout = static_cast<long>(targets.size());
  switch (payload) {
    case Payload::xi:
      for (int j : targets) {
        auto& slot = state_in_[j].at(state_count_[j]++);
        slot.sender = from.node_id;
        slot.t = t;
        slot.l = l;
        slot.xi = from.xi;
      }
      ledger_->record(t, from.node_id, Phase::state, fanout, fanout * from.xi.size());
      return;
    case Payload::theta:
      for (int j : targets) {
        auto& slot = cov_in_[j].at(cov_count_[j]++);
        slot.sender = from.node_id;
        slot.t = t;
        slot.theta = from.theta;
      }
      ledger_->record(t, from.node_id, Phase::covariance, fanout, fanout * from.theta.size());
      return;
    case Payload::lambda_tilde:
    case Payload::nu_tilde:
      break;
  }
  ++violations_;
  throw WireSchemaViolation("node " + std::to_string(from.node_id) +
                            " attempted to transmit a dual variable");
}

std::span<const StateMessage> Wire::state_inbox(int node) const {
  return {state_in_[node].data(), state_count_[node]};
}

std::span<const CovarianceMessage> Wire::covariance_inbox(int node) const {
  return {cov_in_[node].data(), cov_count_[node]};
}

// ---------------------------------------------------------------------------
// Local steps

namespace {

// Runs fn(i) for every node; errors are rethrown as NodeFailure tagged with the
// lowest failing node index, whatever the thread count.
template <class Fn>
void for_each_node(int count, Execution exec, Fn&& fn) {
  const int threads = std::max(1, std::min(exec.threads, count));
  std::vector<std::exception_ptr> errors(threads);
  std::vector<int> failed_at(threads, -1);
  auto chunk = [&](int w) {
    for (int i = w * count / threads; i < (w + 1) * count / threads; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
        failed_at[w] = i;
        return;
      }
    }
  };
  if (threads == 1) {
    chunk(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) pool.emplace_back(chunk, w);
    for (auto& th : pool) th.join();
  }
  for (int w = 0; w < threads; ++w) {
    if (!errors[w]) continue;
    try {
      std::rethrow_exception(errors[w]);
    } catch (const NodeFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw NodeFailure(failed_at[w], e.what());
    }
  }
}

}  // namespace

void predict(NodeState& node, const StateSpaceModel& model) {
  node.x_prior = model.F * node.x_post;
  node.P_prior = SymMatrix(model.F * node.P_post.matrix() * model.F.transpose() + model.Q.matrix());
}

GainPair compute_gain(const NodeState& node, const SensorSpec& sensor, int n_nodes) {
  const SymMatrix prior_info = spd_inverse(node.P_prior);
  SymMatrix gain_inv(sensor.information().matrix() + prior_info.matrix() / n_nodes);
  SymMatrix gain = spd_inverse(gain_inv);
  return {std::move(gain_inv), std::move(gain)};
}

void begin_correction(NodeState& node, const Observation& obs, int n_nodes) {
  const auto& s = obs.sensor;
  node.prior_info = spd_inverse(node.P_prior);
  const Eigen::MatrixXd HtRinv = spd_solve(s.R, s.H).transpose();
  const SymMatrix sensor_info(HtRinv * s.H);
  auto [gain_inv, gain] = compute_gain(node, s, n_nodes);
  node.gain_inv = std::move(gain_inv);
  node.gain = std::move(gain);
  node.local_info = HtRinv * obs.y + node.prior_info.matrix() * node.x_prior / n_nodes;
  node.scaled_omega = static_cast<double>(n_nodes) * vech(sensor_info).data;
  node.xi = node.x_prior;
  node.lambda_tilde = Eigen::VectorXd::Zero(node.x_prior.size());
}

void state_correction_round(std::span<NodeState> nodes, const SensorGraph& graph,
                            const DkfParams& params, Wire& wire, int t, int l, Execution exec) {
  if (graph.size() != static_cast<int>(nodes.size())) throw DimensionError("graph/node count mismatch");
  wire.clear_inboxes();
  for (const auto& node : nodes) wire.broadcast(node, Payload::xi, t, l);

  for_each_node(static_cast<int>(nodes.size()), exec, [&](int i) {
    auto& node = nodes[i];
    Eigen::VectorXd d = Eigen::VectorXd::Zero(node.xi.size());
    for (const auto& msg : wire.state_inbox(i)) d += node.xi - msg.xi;
    node.lambda_tilde += params.alpha_lambda * (node.gain_inv.matrix() * d);
    node.xi = node.gain.matrix() * (node.local_info - node.lambda_tilde) - params.mu * d;
  });
}

void covariance_consensus_step(std::span<NodeState> nodes, const SensorGraph& graph,
                               const DkfParams& params, Wire& wire, int t, Execution exec) {
  if (graph.size() != static_cast<int>(nodes.size())) throw DimensionError("graph/node count mismatch");
  wire.clear_inboxes();
  for (const auto& node : nodes) wire.broadcast(node, Payload::theta, t);

  for_each_node(static_cast<int>(nodes.size()), exec, [&](int i) {
    auto& node = nodes[i];
    Eigen::VectorXd e = Eigen::VectorXd::Zero(node.theta.size());
    for (const auto& msg : wire.covariance_inbox(i)) e += node.theta - msg.theta;
    node.nu_tilde += params.alpha_nu * e;
    node.theta = node.scaled_omega - node.nu_tilde - params.alpha_nu * e;
  });
}

bool assemble_posterior(NodeState& node) {
  node.x_post = node.xi;
  const SymMatrix Theta = unvech(node.theta);
  const Eigen::MatrixXd prior_info =
      node.prior_info.dim() == node.P_prior.dim() ? node.prior_info.matrix()
                                                  : spd_inverse(node.P_prior).matrix();

  SymMatrix info(prior_info + Theta.matrix());
  if (is_positive_definite(info)) {
    node.P_post = spd_inverse(info);
    return false;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Theta.matrix());
  const Eigen::VectorXd floored = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd projected = eig.eigenvectors() * floored.asDiagonal() * eig.eigenvectors().transpose();
  info = SymMatrix(prior_info + projected);
  try {
    node.P_post = spd_inverse(info);
  } catch (const NotPositiveDefinite&) {
    throw NotPositiveDefinite("posterior information of node " + std::to_string(node.node_id) +
                              " is not positive definite even after projection");
  }
  ++node.projections;
  return true;
}

void dkf_time_step(std::span<NodeState> nodes, const SensorGraph& graph, const StateSpaceModel& model,
                   std::span<const Observation> observations, const DkfParams& params, Wire& wire,
                   int t, const TimeStepOptions& options) {
  const int N = static_cast<int>(nodes.size());
  if (static_cast<int>(observations.size()) != N || graph.size() != N)
    throw DimensionError("one observation per node is required");

  for_each_node(N, options.exec, [&](int i) {
    predict(nodes[i], model);
    begin_correction(nodes[i], observations[i], N);
  });
  if (options.on_sub_iteration) options.on_sub_iteration(0, nodes);

  for (int l = 0; l < params.L; ++l) {
    state_correction_round(nodes, graph, params, wire, t, l, options.exec);
    if (options.on_sub_iteration) options.on_sub_iteration(l + 1, nodes);
  }

  const int covariance_rounds = options.sub_iterated_covariance ? params.L : 1;
  for (int k = 0; k < covariance_rounds; ++k)
    covariance_consensus_step(nodes, graph, params, wire, t, options.exec);

  for_each_node(N, options.exec, [&](int i) { assemble_posterior(nodes[i]); });
}

double conservation_residual(std::span<const NodeState> nodes) {
  if (nodes.empty()) return 0.0;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(nodes.front().theta.size());
  for (const auto& node : nodes) sum += node.theta + node.nu_tilde - node.scaled_omega;
  return sum.cwiseAbs().maxCoeff();
}

double consensus_error(std::span<const NodeState> nodes) {
  if (nodes.empty()) return 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(nodes.front().xi.size());
  for (const auto& node : nodes) mean += node.xi;
  mean /= static_cast<double>(nodes.size());
  double total = 0.0;
  for (const auto& node : nodes) total += (node.xi - mean).norm();
  return total / static_cast<double>(nodes.size());
}

DistributedKalmanFilter::DistributedKalmanFilter(const SensorGraph& graph, const StateSpaceModel& model,
                                                 DkfParams params, std::span<const NodeInit> inits,
                                                 TimeStepOptions options)
    : graph_(&graph),
      model_(&model),
      params_(params),
      nodes_(initialize_nodes(model, inits)),
      wire_(graph, ledger_),
      options_(std::move(options)) {
  if (graph.size() != model.n_nodes())
    throw DimensionError("graph and model disagree on the number of nodes");
  if (!(params.alpha_lambda > 0.0) || !(params.mu > 0.0) || !(params.alpha_nu > 0.0) || params.L < 1)
    throw DimensionError("DKF parameters must be positive with L >= 1");
}

void DistributedKalmanFilter::step(std::span<const Observation> observations) {
  ++t_;
  dkf_time_step(nodes_, *graph_, *model_, observations, params_, wire_, t_, options_);
}

}  // namespace admm_dkf
