#pragma once

#include "admm_dkf/graph.hpp"
#include "admm_dkf/linalg.hpp"
#include "admm_dkf/params.hpp"
#include "admm_dkf/sysmodel.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <span>
#include <tuple>
#include <vector>

namespace admm_dkf {

/// One local estimator. Primal variables (xi, theta) are the only ones that
/// ever leave the node; the transformed duals stay local.
struct NodeState {
  int node_id = 0;
  Eigen::VectorXd x_prior;
  SymMatrix P_prior;
  Eigen::VectorXd xi;            // state-consensus primal iterate
  Eigen::VectorXd lambda_tilde;  // state-consensus transformed dual
  Eigen::VectorXd theta;         // half-vectorised information-rate estimate
  Eigen::VectorXd nu_tilde;      // covariance-consensus transformed dual
  Eigen::VectorXd x_post;
  SymMatrix P_post;

  // Per-time-step quantities derived from the prior and the local observation.
  SymMatrix prior_info;          // P_prior^{-1}
  SymMatrix gain_inv;            // K^{-1} = H^T R^{-1} H + P_prior^{-1} / N
  SymMatrix gain;                // K
  Eigen::VectorXd local_info;    // H^T R^{-1} y + P_prior^{-1} x_prior / N
  Eigen::VectorXd scaled_omega;  // N vech(H^T R^{-1} H), the covariance-consensus target

  int projections = 0;  // posterior assemblies that needed eigenvalue flooring
};

struct NodeInit {
  Eigen::VectorXd x_post;
  SymMatrix P_post;
};

/// theta_0 = N vech(H_i^T R_i^{-1} H_i) from each node's nominal sensor, nu_0 = 0.
std::vector<NodeState> initialize_nodes(const StateSpaceModel& model, std::span<const NodeInit> inits);

enum class Phase { state, covariance };

/// Message and scalar counts per (time step, node, phase).
class CommLedger {
 public:
  struct Counts {
    long messages = 0;
    long scalars = 0;
  };
  using Key = std::tuple<int, int, Phase>;  // (t, node, phase)

  void record(int t, int node, Phase phase, long messages, long scalars);
  const std::map<Key, Counts>& entries() const { return entries_; }
  Counts total() const;
  Counts total(Phase phase) const;
  Counts at(int t, int node, Phase phase) const;
  void clear() { entries_.clear(); }

 private:
  std::map<Key, Counts> entries_;
};

/// What a node may put on the wire. The enum also names the duals so that an
/// attempt to send one is representable, and rejected.
enum class Payload { xi, theta, lambda_tilde, nu_tilde };

/// State-phase wire message.
struct StateMessage {
  int sender = 0;
  int t = 0;
  int l = 0;
  Eigen::VectorXd xi;
};

/// Covariance-phase wire message.
struct CovarianceMessage {
  int sender = 0;
  int t = 0;
  Eigen::VectorXd theta;
};

/// Simulated synchronous broadcast layer. Each send copies the payload into
/// every neighbour's inbox and is charged to the ledger.
class Wire {
 public:
  Wire(const SensorGraph& graph, CommLedger& ledger);

  /// Throws WireSchemaViolation for lambda_tilde / nu_tilde.
  void broadcast(const NodeState& from, Payload payload, int t, int l = 0);
  void clear_inboxes();

  std::span<const StateMessage> state_inbox(int node) const;
  std::span<const CovarianceMessage> covariance_inbox(int node) const;
  long violations() const { return violations_; }

 private:
  const SensorGraph* graph_;
  CommLedger* ledger_;
  std::vector<std::vector<StateMessage>> state_in_;
  std::vector<std::vector<CovarianceMessage>> cov_in_;
  std::vector<std::size_t> state_count_;
  std::vector<std::size_t> cov_count_;
  long violations_ = 0;
};

/// x_prior = F x_post, P_prior = F P_post F^T + Q.
void predict(NodeState& node, const StateSpaceModel& model);

struct GainPair {
  SymMatrix gain_inv;
  SymMatrix gain;
};

/// K^{-1} = H^T R^{-1} H + P_prior^{-1} / N and its inverse.
GainPair compute_gain(const NodeState& node, const SensorSpec& sensor, int n_nodes);

/// Fills the per-step quantities from the local observation and resets the
/// sub-iteration: xi = x_prior, lambda_tilde = 0.
void begin_correction(NodeState& node, const Observation& obs, int n_nodes);

/// Synchronous execution helper; `threads` <= 1 runs serially.
struct Execution {
  int threads = 1;
};

/// One Jacobi sub-iteration l -> l+1 of the state correction on every node:
///   d = sum_j (xi_i - xi_j),  lambda += alpha_lambda K^{-1} d,
///   xi = K (b - lambda) - mu d.
void state_correction_round(std::span<NodeState> nodes, const SensorGraph& graph,
                            const DkfParams& params, Wire& wire, int t, int l,
                            Execution exec = {});

/// One step of the sub-iteration-free information-rate consensus, driven by
/// the previous step's theta:
///   e = sum_j (theta_i - theta_j),  nu += alpha_nu e,  theta = N omega - nu - alpha_nu e.
void covariance_consensus_step(std::span<NodeState> nodes, const SensorGraph& graph,
                               const DkfParams& params, Wire& wire, int t, Execution exec = {});

/// x_post = xi, P_post = (P_prior^{-1} + unvech(theta))^{-1}. Negative eigenvalues
/// of unvech(theta) are floored at zero when the sum is not positive definite.
/// Returns true when flooring was needed. Throws NotPositiveDefinite if even the
/// floored sum fails.
bool assemble_posterior(NodeState& node);

struct TimeStepOptions {
  /// Run the covariance consensus L times per step instead of once.
  bool sub_iterated_covariance = false;
  Execution exec;
  /// Called with l = 0 (after initialisation) and after every sub-iteration.
  std::function<void(int l, std::span<const NodeState>)> on_sub_iteration;
};

/// predict -> L state rounds -> covariance consensus -> posterior, for every node.
void dkf_time_step(std::span<NodeState> nodes, const SensorGraph& graph, const StateSpaceModel& model,
                   std::span<const Observation> observations, const DkfParams& params, Wire& wire,
                   int t, const TimeStepOptions& options = {});

/// max_k | sum_i (theta_i + nu_i - N omega_i)_k |; zero up to rounding at every step.
double conservation_residual(std::span<const NodeState> nodes);

/// Mean over nodes of ||xi_i - mean_j xi_j||.
double consensus_error(std::span<const NodeState> nodes);

/// Owns the node states, the wire and the ledger of one network run.
class DistributedKalmanFilter {
 public:
  DistributedKalmanFilter(const SensorGraph& graph, const StateSpaceModel& model, DkfParams params,
                          std::span<const NodeInit> inits, TimeStepOptions options = {});
  DistributedKalmanFilter(const DistributedKalmanFilter&) = delete;
  DistributedKalmanFilter& operator=(const DistributedKalmanFilter&) = delete;

  /// Advances one time step with the observations of every node.
  void step(std::span<const Observation> observations);

  int time() const { return t_; }
  std::span<const NodeState> nodes() const { return nodes_; }
  std::span<NodeState> mutable_nodes() { return nodes_; }
  const CommLedger& ledger() const { return ledger_; }
  const Wire& wire() const { return wire_; }
  TimeStepOptions& options() { return options_; }

 private:
  const SensorGraph* graph_;
  const StateSpaceModel* model_;
  DkfParams params_;
  std::vector<NodeState> nodes_;
  CommLedger ledger_;
  Wire wire_;
  TimeStepOptions options_;
  int t_ = 0;
};

}  // namespace admm_dkf
