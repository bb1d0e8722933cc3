#pragma once

#include <Eigen/Dense>

namespace akrrlab {

// Thin SVD of the n x d design matrix X = U S V', truncated to the numerical
// rank r (singular values above s_1 * max(n,d) * 1e-12). xtx_eigs holds the
// eigenvalues of (1/n) X'X, i.e. s_i^2 / n, padded with zeros past the rank.
struct DesignFactor {
  Eigen::MatrixXd u;                // n x r
  Eigen::VectorXd singular_values;  // r
  Eigen::MatrixXd v;                // d x r
  Eigen::VectorXd xtx_eigs;         // d
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index rank = 0;
};

DesignFactor factor_design(const Eigen::MatrixXd& x);

// Orthogonal projections onto the column space of X and its complement.
Eigen::VectorXd apply_px(const DesignFactor& f, const Eigen::VectorXd& v);
Eigen::VectorXd apply_qx(const DesignFactor& f, const Eigen::VectorXd& v);
Eigen::MatrixXd apply_px(const DesignFactor& f, const Eigen::MatrixXd& m);
Eigen::MatrixXd apply_qx(const DesignFactor& f, const Eigen::MatrixXd& m);

// Ridge smoother P_mu = X (X'X + n*mu*I)^-1 X' and its complement
// Q_mu = I - P_mu. With half=true applies the symmetric square root of Q_mu
// instead (Q_mu is positive semidefinite, not a projection, for mu > 0).
// mu = 0 recovers P_X / Q_X exactly.
Eigen::VectorXd apply_qmu(const DesignFactor& f, const Eigen::VectorXd& v, double mu,
                          bool half = false);
Eigen::MatrixXd apply_qmu(const DesignFactor& f, const Eigen::MatrixXd& m, double mu,
                          bool half = false);
Eigen::VectorXd apply_pmu(const DesignFactor& f, const Eigen::VectorXd& v, double mu);

// Minimum-norm least squares coefficient V S^-1 U' y.
Eigen::VectorXd lsq_coef(const DesignFactor& f, const Eigen::VectorXd& y);

// Ridge coefficient (X'X + n*mu*I)^-1 X' y, evaluated in the singular basis.
Eigen::VectorXd ridge_coef(const DesignFactor& f, const Eigen::VectorXd& y, double mu);

// Solves (A + ridge*I) x = b for symmetric positive semidefinite A via
// Cholesky, with an LDLT fallback and one step of iterative refinement.
// Requires max|A - A'| <= 1e-10 * max(1, max|A|) and leaves a residual of at
// most 1e-8 * ||b||; violations raise std::invalid_argument / NumericError.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                          double ridge = 0.0);
Eigen::MatrixXd solve_spd_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                 double ridge = 0.0);

}  // namespace akrrlab
