#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "akrrlab/design.hpp"
#include "akrrlab/kernels.hpp"

namespace akrrlab {

// What a spectrum was computed from; recorded so report assembly can reject
// mismatched inputs (e.g. a population-law bound fed an empirical spectrum).
enum class SpectrumSource {
  empirical_k,         // scaled kernel matrix K/n
  empirical_qkq,       // Q_X (K/n) Q_X
  empirical_qmukqmu,   // Q_mu (K/n) Q_mu
  empirical_sigma,     // (1/n) X'X
  analytic,            // closed-form eigenvalue law
};

struct EigenSpectrum {
  Eigen::VectorXd values;  // nonnegative, sorted descending
  SpectrumSource source = SpectrumSource::analytic;
  int n_context = 1;       // sample size the complexity normalization uses
};

// Eigenvalues of a symmetric PSD matrix, sorted descending, roundoff-level
// negatives clamped to zero. Asymmetry beyond 1e-10 or eigenvalues below
// -1e-8 * max(1, trace) raise an error.
EigenSpectrum spectrum(const Eigen::MatrixXd& psd, SpectrumSource source,
                       int n_context);

// tau-hat spectrum of (1/n) X'X straight from a design factorization.
EigenSpectrum sigma_spectrum(const DesignFactor& f);

// Analytic laws: mu_j = j^(-2*beta) and mu_j = exp(-gamma*j), j = 1..length.
EigenSpectrum analytic_polynomial(double beta, int length, int n_context);
EigenSpectrum analytic_exponential(double gamma, int length, int n_context);

// sum_j (mu_j / (mu_j + lambda))^2; the lambda -> 0 limit counts nonzero
// eigenvalues.
double variance_trace(const EigenSpectrum& spec, double lambda);

// sum_j mu_j / (mu_j + lambda).
double ratio_trace(const EigenSpectrum& spec, double lambda);

// Empirical complexity R(lambda) = sqrt((1/n) sum_j min(lambda, mu_j)).
double kernel_complexity(const EigenSpectrum& spec, double lambda);

// Unique positive solution of R(delta) = delta (0 for a zero spectrum),
// located by bisection to |R(delta) - delta| <= 1e-12 * max(1, delta).
double critical_radius(const EigenSpectrum& spec);

// Number of eigenvalues >= delta; delta must be positive.
int statistical_dimension(const EigenSpectrum& spec, double delta);

// Elementwise comparison of the residualized spectrum against the raw one:
// nu_i <= mu_i must hold up to roundoff. worst_margin = min_i (mu_i - nu_i).
struct ComparisonCheck {
  bool ok = false;
  double worst_margin = 0.0;
};
ComparisonCheck check_eigen_comparison(const KernelMatrix& km, const DesignFactor& f,
                                       double tol = 1e-9);

// Proof-level trace inequality behind the two-stage variance control:
//   tr(V^2 (V+lambda)^-2) <= tr(Q_X K^2 (K+lambda)^-2) + rank(X),
// with V = Q_X K Q_X.
struct TwoStepVarianceCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rank term granted on the right
  bool ok = false;
};
TwoStepVarianceCheck check_twostep_variance(const KernelMatrix& km,
                                            const DesignFactor& f, double lambda);

// Floor delta_n >= min(mu_1, 1) / (10 n) satisfied by every critical radius.
struct DeltaFloorCheck {
  double delta = 0.0;
  double floor = 0.0;
  bool ok = false;
};
DeltaFloorCheck delta_lower_bound_check(const EigenSpectrum& spec);

// Candidate decomposition handed to bound_report when the true regression
// function is unknown: alpha is the candidate linear part, f_norm the RKHS
// norm of a kernel part assumed to interpolate the remainder (so the
// approximation column is zero). When f_star (the true signal on the training
// inputs) and matrices are supplied instead, the exact regularization-bias
// expressions from the risk identities are used.
struct BoundOracle {
  std::optional<Eigen::VectorXd> alpha;
  std::optional<double> f_norm;
  std::optional<Eigen::VectorXd> f_star;
};

struct BoundContext {
  const KernelMatrix* kernel = nullptr;
  const DesignFactor* design = nullptr;
};

struct BoundReport {
  std::string theorem;
  double lambda = 0.0;
  double mu = 0.0;
  double sigma2 = 0.0;
  double bias = 0.0;
  double approx = 0.0;
  double var_linear = 0.0;
  double var_kernel = 0.0;
  double total = 0.0;
};

// Assembles the risk bound for one of the five results:
//   T1 plain kernel fit, fixed design          (kernel_spec = empirical K)
//   T2 partially linear fit, fixed design      (kernel_spec = empirical QKQ)
//   T3 partially linear fit, population law    (kernel_spec = analytic)
//   T4 doubly penalized fit, fixed design      (kernel_spec = empirical
//       QmuKQmu, linear_spec = empirical sigma; leading constant 2)
//   T5 doubly penalized fit, population law    (kernel_spec = analytic,
//       linear_spec = analytic)
// d is the linear dimension charged by T2/T3, n the sample size. The oracle
// supplies the bias route as described above; T1/T2/T4 can use the exact
// route when context matrices and f_star are present.
BoundReport bound_report(const std::string& theorem, const EigenSpectrum& kernel_spec,
                         const std::optional<EigenSpectrum>& linear_spec,
                         double lambda, double mu, double sigma2, int d, int n,
                         const BoundOracle& oracle, const BoundContext& context = {});

std::string bound_report_csv(const std::vector<BoundReport>& reports);

}  // namespace akrrlab
