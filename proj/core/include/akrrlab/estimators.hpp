#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>

#include "akrrlab/design.hpp"
#include "akrrlab/kernels.hpp"

namespace akrrlab {

struct Dataset {
  Eigen::MatrixXd x;  // n x d
  Eigen::VectorXd y;  // n

  void validate() const;
};

enum class EstimatorKind {
  ols,
  linear_ridge,
  krr,
  akrr,
  akrr_ridge,
  two_step,
  iterated,
};

std::string estimator_kind_name(EstimatorKind kind);
EstimatorKind parse_estimator_kind(const std::string& name);
bool estimator_uses_kernel(EstimatorKind kind);

// The dual vector c absorbs a sqrt(n) factor so that in-sample fitted values
// are (scaled kernel matrix) * c and out of sample
//   g(x) = (1/n) * sum_i c_i K(X_i, x).
// For partially linear kinds the prediction adds x' alpha.
struct FittedModel {
  EstimatorKind kind = EstimatorKind::ols;
  Eigen::VectorXd alpha;  // d; zero for krr
  Eigen::VectorXd dual;   // n; zero for ols / linear_ridge
  double lambda = 0.0;
  double mu = 0.0;
  std::optional<KernelSpec> kernel;
  Eigen::MatrixXd train_x;
  int iterations = 0;  // backfitting passes actually performed (iterated only)
};

FittedModel fit_ols(const Dataset& data);
FittedModel fit_linear_ridge(const Dataset& data, double mu);
FittedModel fit_krr(const Dataset& data, const KernelSpec& kernel, double lambda);

// Joint least squares over (alpha, g): the linear part is unpenalized, only
// the kernel part is. Solved through the symmetric system
//   (Q_X K Q_X + lambda I) c = Q_X y,
// whose solution automatically satisfies Q_X c = c and hence also solves
//   (Q_X K + lambda I) c = Q_X y.
FittedModel fit_akrr(const Dataset& data, const KernelSpec& kernel, double lambda);

// Both parts penalized: mu ||alpha||^2 on the linear part, lambda on the
// kernel part. Solved through c = Q_mu^(1/2) b with
//   (Q_mu^(1/2) K Q_mu^(1/2) + lambda I) b = Q_mu^(1/2) y.
FittedModel fit_akrr_ridge(const Dataset& data, const KernelSpec& kernel,
                           double lambda, double mu);

// OLS first, then KRR on the OLS residual; no joint refitting.
FittedModel fit_two_step(const Dataset& data, const KernelSpec& kernel, double lambda);

// Alternating backfitting: g_0 = 0; alpha_t = OLS on y - g_(t-1)(X);
// g_t = KRR on y - X alpha_t. One pass reproduces fit_two_step; the iteration
// contracts toward fit_akrr at rate at most mu_1/(mu_1 + lambda). Stops after
// max_iterations passes or when successive in-sample fits agree to
// 1e-10 * ||y||.
FittedModel fit_iterated(const Dataset& data, const KernelSpec& kernel, double lambda,
                         int max_iterations);

// Single dispatch point used by tuning refits and the command line tool.
// Kernel kinds require a kernel spec; linear kinds require none.
FittedModel fit_any(const Dataset& data, EstimatorKind kind,
                    const std::optional<KernelSpec>& kernel, double lambda, double mu,
                    int iterations = 100);

Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& x_new);

// Text format, one model per stream:
//   akrrlab-model v1 kind=<kind> n=<n> d=<d> lambda=<f> mu=<f> kernel=<spec|none>
//   alpha: <d floats>
//   dual: <n floats>
//   <n rows of d floats>             (training X)
// Floats carry 17 significant digits so save/load round-trips exactly.
void save_model(const FittedModel& model, std::ostream& out);
FittedModel load_model(std::istream& in);
void save_model_file(const FittedModel& model, const std::string& path);
FittedModel load_model_file(const std::string& path);

}  // namespace akrrlab
