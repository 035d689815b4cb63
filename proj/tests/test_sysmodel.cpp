#include "admm_dkf/errors.hpp"
#include "admm_dkf/sysmodel.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace admm_dkf;
using namespace testing;

namespace {

StateSpaceModel scalar_model(double f, double q, double r) {
  StateSpaceModel m;
  m.F = Eigen::MatrixXd::Constant(1, 1, f);
  m.Q = SymMatrix(Eigen::MatrixXd::Constant(1, 1, q));
  m.x0_mean = Eigen::VectorXd::Zero(1);
  m.P0 = SymMatrix::identity(1);
  m.sensors.push_back({0, Eigen::MatrixXd::Ones(1, 1), SymMatrix(Eigen::MatrixXd::Constant(1, 1, r))});
  m.validate();
  return m;
}

SensorSpec unit_sensor(int node, Eigen::RowVectorXd h, double r = 1.0) {
  return {node, h, SymMatrix(Eigen::MatrixXd::Constant(1, 1, r))};
}

}  // namespace

TEST_SUITE("constant velocity model") {
  TEST_CASE("transition matrix") {
    const auto m = build_constant_velocity_model(cv_options(10));
    Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
    F(0, 2) = 0.1;
    F(1, 3) = 0.1;
    CHECK(m.F == F);
    CHECK(m.n() == 4);
    CHECK(m.x0_mean == Eigen::Vector4d(0, 0, 1, 1));
    CHECK(m.P0.matrix() == Eigen::MatrixXd::Identity(4, 4));
  }

  TEST_CASE("white-noise-acceleration process covariance") {
    auto o = cv_options(2);
    o.dt = 0.2;
    o.q_intensity = 3.0;
    const auto m = build_constant_velocity_model(o);
    CHECK(m.Q(0, 0) == doctest::Approx(3.0 * 0.008 / 3.0));
    CHECK(m.Q(0, 2) == doctest::Approx(3.0 * 0.02));
    CHECK(m.Q(2, 2) == doctest::Approx(3.0 * 0.2));
    CHECK(m.Q(0, 1) == 0.0);
    CHECK(is_positive_definite(m.Q));
  }

  TEST_CASE("degenerate inputs are rejected") {
    auto o = cv_options(4);
    o.dt = 0.0;
    CHECK_THROWS_AS(build_constant_velocity_model(o), DimensionError);
    o = cv_options(1);
    CHECK_THROWS_AS(build_constant_velocity_model(o), DimensionError);
    o = cv_options(4);
    o.r_var = -1.0;
    CHECK_THROWS_AS(build_constant_velocity_model(o), DimensionError);
  }

  TEST_CASE("static split on four nodes") {
    const auto m = build_constant_velocity_model(cv_options(4));
    const Eigen::RowVector4d x1(1, 0, 0, 0), x2(0, 1, 0, 0);
    CHECK(m.sensors[0].H == x1);
    CHECK(m.sensors[1].H == x1);
    CHECK(m.sensors[2].H == x2);
    CHECK(m.sensors[3].H == x2);
    CHECK(m.sensors[0].R(0, 0) == 0.5);
    CHECK(is_observable(m.F, m.stacked_H()));
    CHECK(m.stacked_R().matrix() == 0.5 * Eigen::MatrixXd::Identity(4, 4));
  }

  TEST_CASE("odd node count gives the extra node to the first coordinate") {
    const auto m = build_constant_velocity_model(cv_options(5));
    int first = 0;
    for (const auto& s : m.sensors) first += s.H(0, 0) == 1.0;
    CHECK(first == 3);
  }
}

TEST_SUITE("model validation") {
  TEST_CASE("unobservable stacked pair") {
    auto m = build_constant_velocity_model(cv_options(4));
    for (auto& s : m.sensors) s.H = Eigen::RowVector4d(1, 0, 0, 0);
    CHECK_THROWS_AS(m.validate(), ObservabilityError);
  }

  TEST_CASE("non-SPD noise and wrong shapes") {
    auto m = build_constant_velocity_model(cv_options(4));
    auto bad_r = m;
    bad_r.sensors[1].R = SymMatrix(Eigen::MatrixXd::Constant(1, 1, -0.5));
    CHECK_THROWS_AS(bad_r.validate(), NotPositiveDefinite);
    auto bad_q = m;
    bad_q.Q = SymMatrix::zero(4);
    CHECK_THROWS_AS(bad_q.validate(), NotPositiveDefinite);
    auto bad_h = m;
    bad_h.sensors[0].H = Eigen::RowVector3d(1, 0, 0);
    CHECK_THROWS_AS(bad_h.validate(), DimensionError);
  }
}

TEST_SUITE("trajectories") {
  TEST_CASE("noise-free trajectory follows the mean dynamics") {
    const auto m = build_constant_velocity_model(cv_options(4));
    SimulationOptions o;
    o.noise_free = true;
    const auto traj = simulate_trajectory(m, 50, 5, o);
    Eigen::VectorXd x = m.x0_mean;
    for (int t = 0; t < 50; ++t) {
      x = m.F * x;
      CHECK(traj.states[t] == x);
      for (int i = 0; i < 4; ++i) CHECK(traj.measurements[t][i].y == m.sensors[i].H * x);
    }
  }

  TEST_CASE("same seed gives bit-identical trajectories") {
    const auto m = build_constant_velocity_model(cv_options(6));
    const auto a = simulate_trajectory(m, 30, 99);
    const auto b = simulate_trajectory(m, 30, 99);
    const auto c = simulate_trajectory(m, 30, 100);
    CHECK(a.initial_state == b.initial_state);
    bool same = true, differs = false;
    for (int t = 0; t < 30; ++t) {
      same = same && a.states[t] == b.states[t];
      differs = differs || a.states[t] != c.states[t];
      for (int i = 0; i < 6; ++i) same = same && a.measurements[t][i].y == b.measurements[t][i].y;
    }
    CHECK(same);
    CHECK(differs);
    CHECK(a.seed == 99);
    CHECK_THROWS_AS(simulate_trajectory(m, 0, 1), DimensionError);
  }

  TEST_CASE("process noise has covariance Q and is white") {
    const auto m = scalar_model(0.9, 2.0, 1.0);
    const int T = 100000;
    const auto traj = simulate_trajectory(m, T, 3);
    std::vector<double> w(T);
    Eigen::VectorXd prev = traj.initial_state;
    for (int t = 0; t < T; ++t) {
      w[t] = (traj.states[t] - m.F * prev)(0);
      prev = traj.states[t];
    }
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= T;
    double var = 0.0;
    for (double v : w) var += (v - mean) * (v - mean);
    var /= T - 1;
    CHECK(std::abs(var - 2.0) < 0.03 * 2.0);

    const double bound = 5.0 / std::sqrt(static_cast<double>(T));
    for (int lag = 1; lag <= 5; ++lag) {
      double acc = 0.0;
      for (int t = lag; t < T; ++t) acc += (w[t] - mean) * (w[t - lag] - mean);
      CHECK(std::abs(acc / (T - lag) / var) < bound);
    }
  }

  TEST_CASE("measurement noise has covariance R") {
    const auto m = scalar_model(0.5, 1.0, 0.25);
    const int T = 100000;
    const auto traj = simulate_trajectory(m, T, 4);
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
      const double v = (traj.measurements[t][0].y - traj.states[t])(0);
      acc += v * v;
    }
    CHECK(std::abs(acc / T - 0.25) < 0.03 * 0.25);
  }

  TEST_CASE("per-step random sensors draw from the candidates") {
    auto o = cv_options(8);
    o.assignment = SensorAssignment::per_step_random;
    o.assignment_seed = 17;
    const auto m = build_constant_velocity_model(o);
    const auto traj = simulate_trajectory(m, 40, 8);
    int on_x1 = 0, total = 0;
    bool changed = false;
    for (int t = 0; t < 40; ++t)
      for (int i = 0; i < 8; ++i) {
        const auto& s = traj.measurements[t][i].sensor;
        CHECK(s.node_id == i);
        CHECK((s.H == m.candidates[0].H || s.H == m.candidates[1].H));
        on_x1 += s.H(0, 0) == 1.0;
        ++total;
        if (t > 0) changed = changed || s.H != traj.measurements[t - 1][i].sensor.H;
      }
    CHECK(changed);
    CHECK(on_x1 > total / 4);
    CHECK(on_x1 < 3 * total / 4);
  }
}

TEST_SUITE("information rate") {
  TEST_CASE("orthogonal unit sensors") {
    StateSpaceModel m;
    m.F = Eigen::MatrixXd::Identity(2, 2);
    m.Q = SymMatrix::identity(2);
    m.x0_mean = Eigen::VectorXd::Zero(2);
    m.P0 = SymMatrix::identity(2);
    m.sensors = {unit_sensor(0, Eigen::RowVector2d(1, 0)), unit_sensor(1, Eigen::RowVector2d(0, 1))};
    CHECK(information_rate_target(m).matrix() == Eigen::MatrixXd::Identity(2, 2));
  }

  TEST_CASE("identical sensors scale linearly") {
    StateSpaceModel m;
    m.F = Eigen::MatrixXd::Identity(2, 2);
    m.Q = SymMatrix::identity(2);
    m.x0_mean = Eigen::VectorXd::Zero(2);
    m.P0 = SymMatrix::identity(2);
    const auto s = unit_sensor(0, Eigen::RowVector2d(0.5, -2.0), 4.0);
    for (int i = 0; i < 7; ++i) m.sensors.push_back(s);
    CHECK(max_abs_diff(information_rate_target(m).matrix(), 7.0 * s.information().matrix()) < 1e-14);
  }

  TEST_CASE("reproduction model target") {
    const auto m = build_constant_velocity_model(cv_options(100));
    const Eigen::Vector4d diag(100, 100, 0, 0);
    CHECK(max_abs_diff(information_rate_target(m).matrix(), Eigen::MatrixXd(diag.asDiagonal())) < 1e-12);
  }

  TEST_CASE("matrix-space and vech-space sums agree exactly") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
      StateSpaceModel m;
      const int n = uniform_int(rng, 1, 5);
      m.F = Eigen::MatrixXd::Identity(n, n);
      m.Q = SymMatrix::identity(n);
      m.x0_mean = Eigen::VectorXd::Zero(n);
      m.P0 = SymMatrix::identity(n);
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(half_vec_size(n));
      const int N = uniform_int(rng, 1, 10);
      for (int i = 0; i < N; ++i) {
        const int rows = uniform_int(rng, 1, 3);
        m.sensors.push_back({i, random_matrix(rng, rows, n), random_spd(rng, rows)});
        sum += vech(m.sensors.back().information()).data;
      }
      CHECK(information_rate_target(m).matrix() == unvech(sum).matrix());
    }
  }
}
