#pragma once

#include <Eigen/Dense>
#include <string>

namespace akrrlab {

enum class KernelFamily { gaussian, spline };

// Positive definite kernel description.
//   gaussian: K(x,y) = exp(-||x-y||^2 / gamma), gamma > 0, any input dimension.
//   spline:   K(x,y) = 1 + 2 * sum_{k=1..M} cos(2*pi*k*(x-y)) * k^(-2q),
//             q > 1/2, M >= 1, inputs are scalars reduced modulo 1 before
//             differencing. The truncated series is itself a valid positive
//             semidefinite kernel, so no PSD repair is ever needed.
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double gamma = 1.0;
  double q = 1.0;
  int truncation = 200;

  static KernelSpec gaussian(double gamma);
  static KernelSpec spline(double q, int truncation = 200);

  // Text form: "gaussian:gamma=<float>" or "spline:q=<float>,M=<int>".
  // parse(format(s)) reproduces s exactly; floats use 17 significant digits.
  static KernelSpec parse(const std::string& text);
  std::string format() const;
};

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y);

// Entries are K(X_i, X_j) / n with the applied constant recorded in scale,
// so downstream solvers never re-divide. Exactly symmetric: each unordered
// pair is evaluated once and mirrored.
struct KernelMatrix {
  Eigen::MatrixXd entries;
  double scale = 0.0;
};

KernelMatrix kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x);

// Unscaled Gram matrix K(X_i, X_j). kernel_matrix is this times 1/n, entry by
// entry, so cross-validation can slice one Gram into fold blocks and rescale
// by the fold size without re-evaluating the kernel.
Eigen::MatrixXd kernel_gram(const KernelSpec& spec, const Eigen::MatrixXd& x);

// Unscaled Gram block K(A_i, B_j); prediction and cross-validation slice it.
Eigen::MatrixXd kernel_cross(const KernelSpec& spec, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b);

// Upper bound on the sup-norm error of truncating the spline series at M
// terms: 2 * M^(1-2q) / (2q - 1).
double spline_truncation_error(double q, int truncation);

}  // namespace akrrlab
