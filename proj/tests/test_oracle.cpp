#include "admm_dkf/errors.hpp"
#include "admm_dkf/oracle.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace admm_dkf;
using namespace admm_dkf::oracle;
using namespace testing;

namespace {

StateSpaceModel scalar_model() {
  StateSpaceModel m;
  m.F = Eigen::MatrixXd::Ones(1, 1);
  m.Q = SymMatrix::identity(1);
  m.x0_mean = Eigen::VectorXd::Zero(1);
  m.P0 = SymMatrix::identity(1);
  m.sensors.push_back({0, Eigen::MatrixXd::Ones(1, 1), SymMatrix::identity(1)});
  return m;
}

LocalProblem random_problem(Rng& rng, int n) {
  const int m = uniform_int(rng, 1, 3);
  return {random_matrix(rng, n, 1), random_spd(rng, n), random_matrix(rng, m, 1), random_matrix(rng, m, n),
          random_spd(rng, m)};
}

}  // namespace

TEST_SUITE("centralised filter") {
  TEST_CASE("scalar textbook update") {
    const auto prior = CentralizedState::from_prior(Eigen::VectorXd::Zero(1), SymMatrix::identity(1));
    const std::vector<Observation> obs{{Eigen::VectorXd::Constant(1, 2.0), scalar_model().sensors[0]}};
    const auto post = centralized_correct(prior, obs);
    CHECK(post.x_hat(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(post.P(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(post.omega(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(post.P_prior(0, 0) == 1.0);
  }

  TEST_CASE("empty correction keeps the prior") {
    Rng rng(41);
    const auto prior = CentralizedState::from_prior(random_matrix(rng, 3, 1), random_spd(rng, 3));
    const auto post = centralized_correct(prior, {});
    CHECK(max_abs_diff(post.x_hat, prior.x_hat) < 1e-12);
    CHECK(max_abs_diff(post.P.matrix(), prior.P.matrix()) < 1e-12);
  }

  TEST_CASE("constant-velocity step matches a gain-form filter") {
    const auto model = build_constant_velocity_model(cv_options(4));
    const double y[] = {0.5, 0.2, 0.25, -0.15};
    std::vector<Observation> obs;
    for (int i = 0; i < 4; ++i) obs.push_back({Eigen::VectorXd::Constant(1, y[i]), model.sensors[i]});
    const auto post = centralized_kf_step(CentralizedState::from_prior(model.x0_mean, model.P0), model, obs);

    // Joseph-form gain update in numpy (tools/oracles/derive_goldens.py).
    const Eigen::Vector4d x(0.3004099444591378, 0.05991801110817246, 1.0208278233271622, 0.9958344353345676);
    Eigen::Matrix4d P;
    P << 0.2004099444591378, 0.0, 0.02082782332716213, 0.0,
         0.0, 0.2004099444591378, 0.0, 0.02082782332716213,
         0.02082782332716213, 0.0, 1.091252314202592, 0.0,
         0.0, 0.02082782332716213, 0.0, 1.091252314202592;
    CHECK(max_abs_diff(post.x_hat, x) < 1e-10);
    CHECK(max_abs_diff(post.P.matrix(), P) < 1e-10);
    CHECK(max_abs_diff(post.omega.matrix() * post.P.matrix(), Eigen::MatrixXd::Identity(4, 4)) < 1e-10);
  }

  TEST_CASE("prediction") {
    const auto model = build_constant_velocity_model(cv_options(4));
    const auto s = centralized_predict(CentralizedState::from_prior(model.x0_mean, model.P0), model);
    CHECK(max_abs_diff(s.x_hat, model.F * model.x0_mean) == 0.0);
    CHECK(max_abs_diff(s.P_prior.matrix(), model.F * model.F.transpose() + model.Q.matrix()) < 1e-15);
  }
}

TEST_SUITE("consensus fixed point") {
  TEST_CASE("identical nodes reproduce the single-node MAP estimate") {
    Rng rng(42);
    const auto p = random_problem(rng, 3);
    const int N = 6;
    const std::vector<LocalProblem> nodes(N, p);
    // Single-node MAP with prior weight 1/N: (H'R^-1H + P^-1/N)^-1 (H'R^-1y + P^-1 x/N).
    const Eigen::MatrixXd Rinv = p.R.matrix().inverse();
    const Eigen::MatrixXd Pinv = p.P_prior.matrix().inverse();
    const Eigen::MatrixXd A = p.H.transpose() * Rinv * p.H + Pinv / N;
    const Eigen::VectorXd b = p.H.transpose() * Rinv * p.y + Pinv * p.x_prior / N;
    CHECK(max_abs_diff(consensus_fixed_point(nodes), A.inverse() * b) < 1e-10);
  }

  TEST_CASE("shared prior and stacked sensors give the centralised posterior mean") {
    Rng rng(43);
    const auto model = build_constant_velocity_model(cv_options(7));
    const Eigen::VectorXd x = random_matrix(rng, 4, 1);
    const SymMatrix P = random_spd(rng, 4);
    std::vector<Observation> obs;
    std::vector<LocalProblem> nodes;
    for (const auto& s : model.sensors) {
      const Eigen::VectorXd y = random_matrix(rng, 1, 1);
      obs.push_back({y, s});
      nodes.push_back({x, P, y, s.H, s.R});
    }
    const auto post = centralized_correct(CentralizedState::from_prior(x, P), obs);
    CHECK(max_abs_diff(consensus_fixed_point(nodes), post.x_hat) < 1e-10);
  }

  TEST_CASE("two-node scalar case against the normal equations") {
    const std::vector<LocalProblem> nodes{
        {Eigen::VectorXd::Constant(1, 1.0), SymMatrix(Eigen::MatrixXd::Constant(1, 1, 2.0)),
         Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Constant(1, 1, 1.0), SymMatrix::identity(1)},
        {Eigen::VectorXd::Constant(1, -1.0), SymMatrix(Eigen::MatrixXd::Constant(1, 1, 0.5)),
         Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 2.0),
         SymMatrix(Eigen::MatrixXd::Constant(1, 1, 4.0))}};
    // numpy weighted least squares (tools/oracles/derive_goldens.py).
    CHECK(consensus_fixed_point(nodes)(0) == doctest::Approx(0.6923076923076923).epsilon(1e-14));
  }

  TEST_CASE("the fixed point zeroes the objective gradient") {
    Rng rng(44);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = uniform_int(rng, 1, 6);
      std::vector<LocalProblem> nodes;
      for (int i = 0, N = uniform_int(rng, 1, 12); i < N; ++i) nodes.push_back(random_problem(rng, n));
      const auto xi = consensus_fixed_point(nodes);
      CHECK(consensus_objective_gradient(nodes, xi).norm() < 1e-9);
      const Eigen::VectorXd off = xi + random_matrix(rng, n, 1);
      CHECK(consensus_objective_gradient(nodes, off).norm() > 1e-6);
    }
  }

  TEST_CASE("local MAP average coincides with the fixed point for homogeneous nodes") {
    Rng rng(45);
    const auto p = random_problem(rng, 4);
    std::vector<LocalProblem> nodes(5, p);
    CHECK(max_abs_diff(local_map_average(nodes), consensus_fixed_point(nodes)) < 1e-10);
  }

  TEST_CASE("empty input is rejected") {
    CHECK_THROWS_AS(consensus_fixed_point({}), DimensionError);
  }
}
