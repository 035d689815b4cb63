#include "admm_dkf/sysmodel.hpp"

#include "admm_dkf/errors.hpp"
#include "admm_dkf/random.hpp"

#include <string>

namespace admm_dkf {

SymMatrix SensorSpec::information() const {
  return SymMatrix(H.transpose() * spd_solve(R, H));
}

Eigen::MatrixXd StateSpaceModel::stacked_H() const {
  Eigen::Index rows = 0;
  for (const auto& s : sensors) rows += s.H.rows();
  Eigen::MatrixXd H(rows, n());
  Eigen::Index r = 0;
  for (const auto& s : sensors) {
    H.middleRows(r, s.H.rows()) = s.H;
    r += s.H.rows();
  }
  return H;
}

SymMatrix StateSpaceModel::stacked_R() const {
  Eigen::Index rows = 0;
  for (const auto& s : sensors) rows += s.R.dim();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(rows, rows);
  Eigen::Index r = 0;
  for (const auto& s : sensors) {
    R.block(r, r, s.R.dim(), s.R.dim()) = s.R.matrix();
    r += s.R.dim();
  }
  return SymMatrix(R);
}

namespace {

void validate_sensor(const SensorSpec& s, int n) {
  const auto id = std::to_string(s.node_id);
  if (s.H.cols() != n) throw DimensionError("sensor " + id + ": H has wrong column count");
  if (s.H.rows() < 1) throw DimensionError("sensor " + id + ": needs at least one output");
  if (s.R.dim() != s.H.rows()) throw DimensionError("sensor " + id + ": R does not match H");
  if (!is_positive_definite(s.R)) throw NotPositiveDefinite("sensor " + id + ": R not positive definite");
}

}  // namespace

void StateSpaceModel::validate() const {
  const int dim = n();
  if (dim < 1 || F.cols() != dim) throw DimensionError("F must be square and non-empty");
  if (Q.dim() != dim || P0.dim() != dim || x0_mean.size() != dim)
    throw DimensionError("Q, P0 and x0_mean must match the state dimension");
  if (!is_positive_definite(Q)) throw NotPositiveDefinite("Q not positive definite");
  if (!is_positive_definite(P0)) throw NotPositiveDefinite("P0 not positive definite");
  if (sensors.empty()) throw DimensionError("model has no sensors");
  for (const auto& s : sensors) validate_sensor(s, dim);
  for (const auto& s : candidates) validate_sensor(s, dim);
  if (assignment == SensorAssignment::per_step_random && candidates.empty())
    throw DimensionError("per_step_random assignment needs candidate sensors");
  if (!is_observable(F, stacked_H()))
    throw ObservabilityError("stacked (F, H) is not observable");
}

StateSpaceModel build_constant_velocity_model(const ConstantVelocityOptions& o) {
  if (!(o.dt > 0.0)) throw DimensionError("dt must be positive");
  if (o.n_nodes < 2) throw DimensionError("need at least 2 nodes");
  if (!(o.q_intensity > 0.0) || !(o.r_var > 0.0))
    throw DimensionError("q_intensity and r_var must be positive");

  const double dt = o.dt;
  const Eigen::Matrix2d I2 = Eigen::Matrix2d::Identity();
  StateSpaceModel m;
  m.F = Eigen::MatrixXd::Identity(4, 4);
  m.F.topRightCorner(2, 2) = dt * I2;

  Eigen::MatrixXd Q(4, 4);
  Q << dt * dt * dt / 3.0 * I2, dt * dt / 2.0 * I2, dt * dt / 2.0 * I2, dt * I2;
  m.Q = SymMatrix(o.q_intensity * Q);
  m.x0_mean = Eigen::Vector4d(0.0, 0.0, 1.0, 1.0);
  m.P0 = SymMatrix::identity(4);

  const SymMatrix R(Eigen::MatrixXd::Constant(1, 1, o.r_var));
  auto position_sensor = [&](int node, int axis) {
    SensorSpec s{node, Eigen::MatrixXd::Zero(1, 4), R};
    s.H(0, axis) = 1.0;
    return s;
  };

  const int first_half = (o.n_nodes + 1) / 2;
  for (int i = 0; i < o.n_nodes; ++i) m.sensors.push_back(position_sensor(i, i < first_half ? 0 : 1));
  m.assignment = o.assignment;
  m.assignment_seed = o.assignment_seed;
  m.candidates = {position_sensor(-1, 0), position_sensor(-1, 1)};
  m.validate();
  return m;
}

GaussianSampler::GaussianSampler(Eigen::VectorXd mean, const SymMatrix& cov) : mean_(std::move(mean)) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov.matrix());
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("sampler covariance not positive definite");
  factor_ = llt.matrixL();
}

Trajectory simulate_trajectory(const StateSpaceModel& model, int n_steps, std::uint64_t seed,
                               SimulationOptions options) {
  if (n_steps < 1) throw DimensionError("n_steps must be at least 1");
  const int n = model.n();
  Rng rng(derive_seed(seed, 0));
  Rng assignment_rng(derive_seed(seed ^ mix_seed(model.assignment_seed), 1));

  Trajectory traj;
  traj.seed = seed;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  GaussianSampler process(zero, model.Q);
  GaussianSampler initial(model.x0_mean, model.P0);

  traj.initial_state = options.noise_free ? Eigen::VectorXd(model.x0_mean) : initial(rng);
  traj.states.reserve(n_steps);
  traj.measurements.reserve(n_steps);

  Eigen::VectorXd x = traj.initial_state;
  for (int t = 0; t < n_steps; ++t) {
    x = model.F * x;
    if (!options.noise_free) x += process(rng);
    traj.states.push_back(x);

    std::vector<Observation> obs;
    obs.reserve(model.sensors.size());
    for (int i = 0; i < model.n_nodes(); ++i) {
      SensorSpec sensor = model.sensors[i];
      if (model.assignment == SensorAssignment::per_step_random) {
        const auto k = static_cast<std::size_t>(uniform01(assignment_rng) *
                                                static_cast<double>(model.candidates.size()));
        sensor = model.candidates[k];
        sensor.node_id = i;
      }
      Eigen::VectorXd y = sensor.H * x;
      if (!options.noise_free) {
        GaussianSampler noise(Eigen::VectorXd::Zero(y.size()), sensor.R);
        y += noise(rng);
      }
      obs.push_back({std::move(y), std::move(sensor)});
    }
    traj.measurements.push_back(std::move(obs));
  }
  return traj;
}

SymMatrix information_rate_target(const StateSpaceModel& model) {
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(model.n(), model.n());
  for (const auto& s : model.sensors) total += s.information().matrix();
  return SymMatrix(total);
}

}  // namespace admm_dkf
