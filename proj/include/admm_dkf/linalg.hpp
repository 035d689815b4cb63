#pragma once

#include "admm_dkf/graph.hpp"
#include "admm_dkf/params.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace admm_dkf {

/// Square matrix symmetrised on construction: m <- (m + m^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix zero(int n) { return SymMatrix(Eigen::MatrixXd::Zero(n, n)); }
  static SymMatrix identity(int n) { return SymMatrix(Eigen::MatrixXd::Identity(n, n)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  operator const Eigen::MatrixXd&() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

 private:
  Eigen::MatrixXd m_;
};

/// Half-vectorisation of an n x n symmetric matrix, n(n+1)/2 entries.
struct HalfVec {
  int n = 0;
  Eigen::VectorXd data;
};

constexpr int half_vec_size(int n) { return n * (n + 1) / 2; }

/// Lower triangle, column-major: (0,0), (1,0), ..., (n-1,0), (1,1), (2,1), ...
/// Every node must use this same ordering.
HalfVec vech(const SymMatrix& m);
/// Throws DimensionError when the length is not a triangular number.
SymMatrix unvech(const Eigen::VectorXd& data);
inline SymMatrix unvech(const HalfVec& v) { return unvech(v.data); }

/// Solves a x = b through a Cholesky factorisation. Throws NotPositiveDefinite.
Eigen::MatrixXd spd_solve(const SymMatrix& a, const Eigen::MatrixXd& b);
Eigen::VectorXd spd_solve(const SymMatrix& a, const Eigen::VectorXd& b);
SymMatrix spd_inverse(const SymMatrix& a);
bool is_positive_definite(const Eigen::MatrixXd& a);

/// Rank of [H; HF; ...; HF^{n-1}].
int observability_rank(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H);
bool is_observable(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H);

struct DareOptions {
  double tol = 1e-12;
  int max_iter = 200000;
};

/// Prior-covariance DARE  P = F P F^T - F P H^T (H P H^T + R)^{-1} H P F^T + Q,
/// solved by the Riccati recursion started at P_0 = Q.
/// Throws ObservabilityError for an unobservable (F, H) and RiccatiDivergence
/// when the recursion does not settle within max_iter.
SymMatrix dare_solve(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H,
                     const SymMatrix& Q, const SymMatrix& R_bar, DareOptions options = {});

/// One Riccati step; also used to report the residual of a candidate solution.
SymMatrix riccati_map(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H, const SymMatrix& Q,
                      const SymMatrix& R_bar, const SymMatrix& P);

/// Per-mode iteration matrix of the covariance consensus:
/// [[1 - 2 a l, a l], [1, 0]].
Eigen::Matrix2d covariance_mode_matrix(double alpha_nu, double laplacian_eigenvalue);

/// Per-mode iteration matrix of the state sub-iteration:
/// [[1 - (a + mu) l, mu l], [1, 0]].
Eigen::Matrix2d state_mode_matrix(double alpha_lambda, double mu, double laplacian_eigenvalue);

double spectral_radius(const Eigen::Matrix2d& m);

struct StabilityReport {
  double spectral_radius = 0.0;
  bool is_schur = false;  // spectral_radius < 1 over every nonzero mode
  bool sufficient_bound_holds = false;
  double bound = 0.0;     // right-hand side of the sufficient condition
  double lhs = 0.0;       // configured quantity compared against it
  std::vector<std::pair<double, double>> per_mode_radii;  // (eigenvalue, radius)
};

/// alpha_nu against 2/(3 lambda_max), plus exact radii of every mode matrix.
StabilityReport check_covariance_stability(const DkfParams& params, const SpectralSummary& spectrum);
/// alpha_lambda + 2 mu against 2/lambda_max, plus exact radii.
StabilityReport check_state_stability(const DkfParams& params, const SpectralSummary& spectrum);

}  // namespace admm_dkf
