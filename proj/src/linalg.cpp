#include "admm_dkf/linalg.hpp"

#include "admm_dkf/errors.hpp"

#include <cmath>
#include <complex>
#include <string>

namespace admm_dkf {

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionError("SymMatrix requires a square matrix");
  m_ = 0.5 * (m + m.transpose());
}

HalfVec vech(const SymMatrix& m) {
  const int n = m.dim();
  HalfVec v{n, Eigen::VectorXd(half_vec_size(n))};
  int k = 0;
  for (int c = 0; c < n; ++c)
    for (int r = c; r < n; ++r) v.data(k++) = m(r, c);
  return v;
}

SymMatrix unvech(const Eigen::VectorXd& data) {
  const auto len = data.size();
  const int n = static_cast<int>(std::lround((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
  if (len == 0 || half_vec_size(n) != len)
    throw DimensionError("length " + std::to_string(len) + " is not a triangular number");
  Eigen::MatrixXd m(n, n);
  int k = 0;
  for (int c = 0; c < n; ++c)
    for (int r = c; r < n; ++r) {
      m(r, c) = data(k);
      m(c, r) = data(k);
      ++k;
    }
  return SymMatrix(m);
}

namespace {

Eigen::LLT<Eigen::MatrixXd> factor(const SymMatrix& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a.matrix());
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("Cholesky factorisation failed (matrix not positive definite)");
  return llt;
}

}  // namespace

Eigen::MatrixXd spd_solve(const SymMatrix& a, const Eigen::MatrixXd& b) {
  if (b.rows() != a.dim()) throw DimensionError("spd_solve: right-hand side has wrong row count");
  return factor(a).solve(b);
}

Eigen::VectorXd spd_solve(const SymMatrix& a, const Eigen::VectorXd& b) {
  if (b.size() != a.dim()) throw DimensionError("spd_solve: right-hand side has wrong length");
  return factor(a).solve(b);
}

SymMatrix spd_inverse(const SymMatrix& a) {
  return SymMatrix(factor(a).solve(Eigen::MatrixXd::Identity(a.dim(), a.dim())));
}

bool is_positive_definite(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (a + a.transpose()));
  return llt.info() == Eigen::Success;
}

int observability_rank(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H) {
  const auto n = F.rows();
  if (F.cols() != n || H.cols() != n) throw DimensionError("observability: F and H disagree on n");
  Eigen::MatrixXd obs(H.rows() * n, n);
  Eigen::MatrixXd block = H;
  for (Eigen::Index k = 0; k < n; ++k) {
    obs.middleRows(k * H.rows(), H.rows()) = block;
    block = block * F;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(obs);
  return static_cast<int>(qr.rank());
}

bool is_observable(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H) {
  return observability_rank(F, H) == F.rows();
}

SymMatrix riccati_map(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H, const SymMatrix& Q,
                      const SymMatrix& R_bar, const SymMatrix& P) {
  const Eigen::MatrixXd PHt = P.matrix() * H.transpose();
  const SymMatrix S(H * PHt + R_bar.matrix());
  const Eigen::MatrixXd gain_t = spd_solve(S, Eigen::MatrixXd(PHt.transpose()));  // S^{-1} H P
  const Eigen::MatrixXd posterior = P.matrix() - PHt * gain_t;
  return SymMatrix(F * posterior * F.transpose() + Q.matrix());
}

SymMatrix dare_solve(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H, const SymMatrix& Q,
                     const SymMatrix& R_bar, DareOptions options) {
  if (H.rows() != R_bar.dim()) throw DimensionError("dare_solve: H and R_bar disagree on m");
  if (Q.dim() != F.rows()) throw DimensionError("dare_solve: Q and F disagree on n");
  if (!is_observable(F, H)) throw ObservabilityError("(F, H) is not observable");
  if (!is_positive_definite(Q) || !is_positive_definite(R_bar))
    throw NotPositiveDefinite("dare_solve: Q and R_bar must be positive definite");

  SymMatrix P = Q;
  for (int k = 0; k < options.max_iter; ++k) {
    SymMatrix next = riccati_map(F, H, Q, R_bar, P);
    const double change = (next.matrix() - P.matrix()).norm();
    P = std::move(next);
    if (!std::isfinite(change)) break;
    if (change <= options.tol * P.matrix().norm()) return P;
  }
  throw RiccatiDivergence("Riccati recursion did not converge within " +
                          std::to_string(options.max_iter) + " iterations");
}

Eigen::Matrix2d covariance_mode_matrix(double alpha_nu, double laplacian_eigenvalue) {
  const double a = alpha_nu * laplacian_eigenvalue;
  Eigen::Matrix2d m;
  m << 1.0 - 2.0 * a, a, 1.0, 0.0;
  return m;
}

Eigen::Matrix2d state_mode_matrix(double alpha_lambda, double mu, double laplacian_eigenvalue) {
  Eigen::Matrix2d m;
  m << 1.0 - (alpha_lambda + mu) * laplacian_eigenvalue, mu * laplacian_eigenvalue, 1.0, 0.0;
  return m;
}

double spectral_radius(const Eigen::Matrix2d& m) {
  // Roots of z^2 - tr z + det.
  const std::complex<double> tr = m.trace();
  const std::complex<double> det = m.determinant();
  const std::complex<double> disc = std::sqrt(tr * tr - 4.0 * det);
  return std::max(std::abs((tr + disc) / 2.0), std::abs((tr - disc) / 2.0));
}

namespace {

template <class ModeFn>
StabilityReport mode_report(const SpectralSummary& spectrum, ModeFn&& mode) {
  StabilityReport r;
  for (double lambda : spectrum.eigenvalues) {
    if (lambda <= 0.0) continue;  // consensus direction, not a disagreement mode
    const double radius = spectral_radius(mode(lambda));
    r.per_mode_radii.emplace_back(lambda, radius);
    r.spectral_radius = std::max(r.spectral_radius, radius);
  }
  r.is_schur = r.spectral_radius < 1.0;
  return r;
}

}  // namespace

StabilityReport check_covariance_stability(const DkfParams& params, const SpectralSummary& spectrum) {
  auto r = mode_report(spectrum, [&](double l) { return covariance_mode_matrix(params.alpha_nu, l); });
  r.lhs = params.alpha_nu;
  r.bound = covariance_step_bound(spectrum.lambda_max);
  r.sufficient_bound_holds = params.alpha_nu > 0.0 && r.lhs < r.bound;
  return r;
}

StabilityReport check_state_stability(const DkfParams& params, const SpectralSummary& spectrum) {
  auto r = mode_report(spectrum,
                       [&](double l) { return state_mode_matrix(params.alpha_lambda, params.mu, l); });
  r.lhs = params.alpha_lambda + 2.0 * params.mu;
  r.bound = state_step_bound(spectrum.lambda_max);
  r.sufficient_bound_holds = params.alpha_lambda > 0.0 && params.mu > 0.0 && r.lhs < r.bound;
  return r;
}

}  // namespace admm_dkf
