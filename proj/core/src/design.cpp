#include "akrrlab/design.hpp"

#include <cmath>
#include <stdexcept>

#include "akrrlab/common.hpp"

namespace akrrlab {
namespace {

void check_rows(const DesignFactor& f, Eigen::Index n, const char* who) {
  if (n != f.rows) {
    throw std::invalid_argument(std::string(who) + ": length does not match the design");
  }
}

// Shared core of all four projection-style maps: out = m - U diag(coef) U' m.
template <typename Mat>
Mat subtract_in_basis(const DesignFactor& f, const Mat& m,
                      const Eigen::VectorXd& coef) {
  if (f.rank == 0) {
    return m;
  }
  Mat proj = f.u.transpose() * m;
  proj.array().colwise() *= coef.array();
  return m - f.u * proj;
}

Eigen::VectorXd qmu_coef(const DesignFactor& f, double mu, bool half) {
  if (!(mu >= 0.0)) {
    throw std::invalid_argument("apply_qmu: mu must be nonnegative");
  }
  Eigen::VectorXd coef(f.rank);
  for (Eigen::Index i = 0; i < f.rank; ++i) {
    const double tau = f.xtx_eigs[i];
    // Q_mu acts as mu/(tau+mu) on the i-th singular direction and as the
    // identity off the column space; subtracting 1 - ratio (or 1 - sqrt) from
    // the identity realizes it without forming an n x n matrix.
    const double ratio = (mu == 0.0) ? 0.0 : mu / (tau + mu);
    coef[i] = half ? 1.0 - std::sqrt(ratio) : 1.0 - ratio;
  }
  return coef;
}

}  // namespace

DesignFactor factor_design(const Eigen::MatrixXd& x) {
  if (x.rows() < 1 || x.cols() < 1) {
    throw std::invalid_argument("factor_design: design matrix is empty");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("factor_design: design matrix has non-finite entries");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cut =
      (s.size() > 0 ? s[0] : 0.0) * static_cast<double>(std::max(x.rows(), x.cols())) *
      1e-12;
  Eigen::Index r = 0;
  while (r < s.size() && s[r] > cut) {
    ++r;
  }
  DesignFactor f;
  f.rows = x.rows();
  f.cols = x.cols();
  f.rank = r;
  f.u = svd.matrixU().leftCols(r);
  f.v = svd.matrixV().leftCols(r);
  f.singular_values = s.head(r);
  f.xtx_eigs = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index i = 0; i < r; ++i) {
    f.xtx_eigs[i] = s[i] * s[i] / static_cast<double>(x.rows());
  }
  return f;
}

Eigen::VectorXd apply_px(const DesignFactor& f, const Eigen::VectorXd& v) {
  check_rows(f, v.size(), "apply_px");
  if (f.rank == 0) {
    return Eigen::VectorXd::Zero(v.size());
  }
  return f.u * (f.u.transpose() * v);
}

Eigen::MatrixXd apply_px(const DesignFactor& f, const Eigen::MatrixXd& m) {
  check_rows(f, m.rows(), "apply_px");
  if (f.rank == 0) {
    return Eigen::MatrixXd::Zero(m.rows(), m.cols());
  }
  return f.u * (f.u.transpose() * m);
}

Eigen::VectorXd apply_qx(const DesignFactor& f, const Eigen::VectorXd& v) {
  check_rows(f, v.size(), "apply_qx");
  return subtract_in_basis(f, v, Eigen::VectorXd::Ones(f.rank));
}

Eigen::MatrixXd apply_qx(const DesignFactor& f, const Eigen::MatrixXd& m) {
  check_rows(f, m.rows(), "apply_qx");
  return subtract_in_basis(f, m, Eigen::VectorXd::Ones(f.rank));
}

Eigen::VectorXd apply_qmu(const DesignFactor& f, const Eigen::VectorXd& v, double mu,
                          bool half) {
  check_rows(f, v.size(), "apply_qmu");
  return subtract_in_basis(f, v, qmu_coef(f, mu, half));
}

Eigen::MatrixXd apply_qmu(const DesignFactor& f, const Eigen::MatrixXd& m, double mu,
                          bool half) {
  check_rows(f, m.rows(), "apply_qmu");
  return subtract_in_basis(f, m, qmu_coef(f, mu, half));
}

Eigen::VectorXd apply_pmu(const DesignFactor& f, const Eigen::VectorXd& v, double mu) {
  check_rows(f, v.size(), "apply_pmu");
  return v - apply_qmu(f, v, mu, false);
}

Eigen::VectorXd lsq_coef(const DesignFactor& f, const Eigen::VectorXd& y) {
  check_rows(f, y.size(), "lsq_coef");
  if (f.rank == 0) {
    return Eigen::VectorXd::Zero(f.cols);
  }
  Eigen::VectorXd z = f.u.transpose() * y;
  z.array() /= f.singular_values.array();
  return f.v * z;
}

Eigen::VectorXd ridge_coef(const DesignFactor& f, const Eigen::VectorXd& y, double mu) {
  check_rows(f, y.size(), "ridge_coef");
  if (!(mu >= 0.0)) {
    throw std::invalid_argument("ridge_coef: mu must be nonnegative");
  }
  if (f.rank == 0) {
    return Eigen::VectorXd::Zero(f.cols);
  }
  if (mu == 0.0) {
    return lsq_coef(f, y);
  }
  Eigen::VectorXd z = f.u.transpose() * y;
  const double n = static_cast<double>(f.rows);
  for (Eigen::Index i = 0; i < f.rank; ++i) {
    const double s = f.singular_values[i];
    z[i] *= s / (s * s + n * mu);
  }
  return f.v * z;
}

Eigen::MatrixXd solve_spd_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                 double ridge) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("solve_spd: matrix is not square");
  }
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("solve_spd: right-hand side length mismatch");
  }
  if (!(ridge >= 0.0)) {
    throw std::invalid_argument("solve_spd: ridge must be nonnegative");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    throw std::invalid_argument("solve_spd: matrix is not symmetric");
  }

  Eigen::MatrixXd m = (a + a.transpose()) / 2.0;
  if (ridge > 0.0) {
    m.diagonal().array() += ridge;
  }

  Eigen::MatrixXd x;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) {
    x = llt.solve(b);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success) {
      throw NumericError("solve_spd: factorization failed");
    }
    x = ldlt.solve(b);
  }

  const double bnorm = b.norm();
  double resid = (m * x - b).norm();
  if (resid > 1e-8 * bnorm) {
    // One step of iterative refinement before giving up.
    const Eigen::MatrixXd r = b - m * x;
    if (llt.info() == Eigen::Success) {
      x += llt.solve(r);
    } else {
      x += Eigen::LDLT<Eigen::MatrixXd>(m).solve(r);
    }
    resid = (m * x - b).norm();
    if (resid > 1e-8 * bnorm) {
      throw NumericError("solve_spd: residual exceeds 1e-8 * ||b|| (singular system?)");
    }
  }
  if (!x.allFinite()) {
    throw NumericError("solve_spd: solution has non-finite entries");
  }
  return x;
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                          double ridge) {
  return Eigen::VectorXd(solve_spd_matrix(a, Eigen::MatrixXd(b), ridge));
}

}  // namespace akrrlab
