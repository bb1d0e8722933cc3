#include "akrrlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "akrrlab/common.hpp"

namespace akrrlab {
namespace {

void check_spectrum(const EigenSpectrum& spec, const char* who) {
  if (spec.values.size() == 0) {
    throw std::invalid_argument(std::string(who) + ": empty spectrum");
  }
  if (spec.n_context < 1) {
    throw std::invalid_argument(std::string(who) + ": n_context must be positive");
  }
  if ((spec.values.array() < 0.0).any()) {
    throw std::invalid_argument(std::string(who) + ": negative eigenvalues");
  }
}

void check_lambda(double lambda, const char* who) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument(std::string(who) + ": lambda must be nonnegative");
  }
}

}  // namespace

EigenSpectrum spectrum(const Eigen::MatrixXd& psd, SpectrumSource source,
                       int n_context) {
  if (psd.rows() != psd.cols() || psd.rows() < 1) {
    throw std::invalid_argument("spectrum: matrix is not square");
  }
  if (n_context < 1) {
    throw std::invalid_argument("spectrum: n_context must be positive");
  }
  const double scale = std::max(1.0, psd.cwiseAbs().maxCoeff());
  if ((psd - psd.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("spectrum: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((psd + psd.transpose()) / 2.0,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("spectrum: eigensolver failed");
  }
  const Eigen::VectorXd raw = es.eigenvalues();
  const double neg_tol = 1e-8 * std::max(1.0, std::abs(psd.trace()));
  EigenSpectrum out;
  out.source = source;
  out.n_context = n_context;
  out.values.resize(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const double v = raw[raw.size() - 1 - i];  // descending
    if (v < -neg_tol) {
      throw std::invalid_argument("spectrum: matrix is not positive semidefinite");
    }
    out.values[i] = std::max(v, 0.0);
  }
  return out;
}

EigenSpectrum sigma_spectrum(const DesignFactor& f) {
  EigenSpectrum out;
  out.source = SpectrumSource::empirical_sigma;
  out.n_context = static_cast<int>(f.rows);
  out.values = f.xtx_eigs;
  std::sort(out.values.data(), out.values.data() + out.values.size(),
            std::greater<double>());
  return out;
}

EigenSpectrum analytic_polynomial(double beta, int length, int n_context) {
  if (!(beta > 0.5)) {
    throw std::invalid_argument("analytic_polynomial: need beta > 1/2");
  }
  if (length < 1 || n_context < 1) {
    throw std::invalid_argument("analytic_polynomial: bad length or n_context");
  }
  EigenSpectrum out;
  out.source = SpectrumSource::analytic;
  out.n_context = n_context;
  out.values.resize(length);
  for (int j = 1; j <= length; ++j) {
    out.values[j - 1] = std::pow(j, -2.0 * beta);
  }
  return out;
}

EigenSpectrum analytic_exponential(double gamma, int length, int n_context) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("analytic_exponential: need gamma > 0");
  }
  if (length < 1 || n_context < 1) {
    throw std::invalid_argument("analytic_exponential: bad length or n_context");
  }
  EigenSpectrum out;
  out.source = SpectrumSource::analytic;
  out.n_context = n_context;
  out.values.resize(length);
  for (int j = 1; j <= length; ++j) {
    out.values[j - 1] = std::exp(-gamma * j);
  }
  return out;
}

double variance_trace(const EigenSpectrum& spec, double lambda) {
  check_spectrum(spec, "variance_trace");
  check_lambda(lambda, "variance_trace");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
    const double e = spec.values[i];
    if (e > 0.0) {
      const double r = e / (e + lambda);
      acc += r * r;
    }
  }
  return acc;
}

double ratio_trace(const EigenSpectrum& spec, double lambda) {
  check_spectrum(spec, "ratio_trace");
  check_lambda(lambda, "ratio_trace");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
    const double e = spec.values[i];
    if (e > 0.0) {
      acc += e / (e + lambda);
    }
  }
  return acc;
}

double kernel_complexity(const EigenSpectrum& spec, double lambda) {
  check_spectrum(spec, "kernel_complexity");
  check_lambda(lambda, "kernel_complexity");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
    acc += std::min(lambda, spec.values[i]);
  }
  return std::sqrt(acc / static_cast<double>(spec.n_context));
}

double critical_radius(const EigenSpectrum& spec) {
  check_spectrum(spec, "critical_radius");
  if (spec.values.maxCoeff() == 0.0) {
    return 0.0;
  }
  // R is increasing and concave with R(0) = 0 and R(x)/x -> infinity at 0, so
  // R(x) - x has exactly one positive root; bisect on a sign change.
  const auto resid = [&spec](double x) { return kernel_complexity(spec, x) - x; };
  double hi = kernel_complexity(spec, spec.values[0]) + 1.0;
  double lo = std::min(1e-300, hi / 2.0);
  if (resid(lo) <= 0.0) {
    return lo;  // spectrum so small the root is below representable range
  }
  for (int iter = 0; iter < 300; ++iter) {
    const double mid = (lo + hi) / 2.0;
    if (resid(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-16 * std::max(1.0, lo)) {
      break;
    }
  }
  const double delta = (lo + hi) / 2.0;
  if (std::abs(resid(delta)) > 1e-12 * std::max(1.0, delta)) {
    throw NumericError("critical_radius: bisection did not meet tolerance");
  }
  return delta;
}

int statistical_dimension(const EigenSpectrum& spec, double delta) {
  check_spectrum(spec, "statistical_dimension");
  if (!(delta > 0.0)) {
    throw std::invalid_argument("statistical_dimension: delta must be positive");
  }
  int count = 0;
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
    if (spec.values[i] >= delta) {
      ++count;
    }
  }
  return count;
}

ComparisonCheck check_eigen_comparison(const KernelMatrix& km, const DesignFactor& f,
                                       double tol) {
  const int n = static_cast<int>(km.entries.rows());
  const EigenSpectrum mu = spectrum(km.entries, SpectrumSource::empirical_k, n);
  const Eigen::MatrixXd v =
      apply_qx(f, Eigen::MatrixXd(apply_qx(f, km.entries).transpose()));
  const EigenSpectrum nu = spectrum(v, SpectrumSource::empirical_qkq, n);
  ComparisonCheck out;
  out.worst_margin = (mu.values - nu.values).minCoeff();
  out.ok = out.worst_margin >= -tol;
  return out;
}

TwoStepVarianceCheck check_twostep_variance(const KernelMatrix& km,
                                            const DesignFactor& f, double lambda) {
  check_lambda(lambda, "check_twostep_variance");
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("check_twostep_variance: lambda must be positive");
  }
  const Eigen::Index n = km.entries.rows();
  const Eigen::MatrixXd k = km.entries;
  const Eigen::MatrixXd v =
      apply_qx(f, Eigen::MatrixXd(apply_qx(f, k).transpose()));
  const Eigen::MatrixXd vsym = (v + v.transpose()) / 2.0;

  const Eigen::MatrixXd vv = solve_spd_matrix(vsym, vsym, lambda);  // (V+l)^-1 V
  const Eigen::MatrixXd kk = solve_spd_matrix(k, k, lambda);        // (K+l)^-1 K
  const Eigen::MatrixXd qkk = apply_qx(f, kk);

  TwoStepVarianceCheck out;
  out.lhs = (vv.transpose() * vv).trace();
  out.slack = static_cast<double>(f.rank);
  out.rhs = (kk.transpose() * qkk).trace() + out.slack;
  out.ok = out.lhs <= out.rhs + 1e-9 * std::max(1.0, out.rhs) &&
           n == static_cast<Eigen::Index>(f.rows);
  return out;
}

DeltaFloorCheck delta_lower_bound_check(const EigenSpectrum& spec) {
  DeltaFloorCheck out;
  out.delta = critical_radius(spec);
  out.floor = std::min(spec.values.size() > 0 ? spec.values[0] : 0.0, 1.0) /
              (10.0 * static_cast<double>(spec.n_context));
  out.ok = out.delta >= out.floor;
  return out;
}

namespace {

double exact_bias_t1(const KernelMatrix& km, double lambda,
                     const Eigen::VectorXd& f_star) {
  const Eigen::VectorXd b = lambda * solve_spd(km.entries, f_star, lambda);
  return b.squaredNorm() / static_cast<double>(f_star.size());
}

double exact_bias_t2(const KernelMatrix& km, const DesignFactor& f, double lambda,
                     const Eigen::VectorXd& f_star) {
  const Eigen::MatrixXd v =
      apply_qx(f, Eigen::MatrixXd(apply_qx(f, km.entries).transpose()));
  const Eigen::MatrixXd sys = (v + v.transpose()) / 2.0;
  const Eigen::VectorXd t = apply_qx(f, f_star);
  const Eigen::VectorXd b =
      lambda * apply_qx(f, Eigen::VectorXd(solve_spd(sys, t, lambda)));
  return b.squaredNorm() / static_cast<double>(f_star.size());
}

double exact_bias_t4(const KernelMatrix& km, const DesignFactor& f, double lambda,
                     double mu, const Eigen::VectorXd& f_star) {
  const Eigen::MatrixXd v =
      apply_qmu(f, Eigen::MatrixXd(apply_qmu(f, km.entries, mu).transpose()), mu);
  const Eigen::MatrixXd sys = (v + v.transpose()) / 2.0;
  const Eigen::VectorXd t = apply_qmu(f, f_star, mu);
  const Eigen::VectorXd b =
      lambda * apply_qmu(f, Eigen::VectorXd(solve_spd(sys, t, lambda)), mu);
  return b.squaredNorm() / static_cast<double>(f_star.size());
}

void require_source(const EigenSpectrum& spec, SpectrumSource a, SpectrumSource b,
                    const std::string& theorem, const char* what) {
  if (spec.source != a && spec.source != b) {
    throw std::invalid_argument("bound_report " + theorem + ": unexpected " + what +
                                " spectrum source");
  }
}

}  // namespace

BoundReport bound_report(const std::string& theorem, const EigenSpectrum& kernel_spec,
                         const std::optional<EigenSpectrum>& linear_spec,
                         double lambda, double mu, double sigma2, int d, int n,
                         const BoundOracle& oracle, const BoundContext& context) {
  check_spectrum(kernel_spec, "bound_report");
  check_lambda(lambda, "bound_report");
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("bound_report: lambda must be positive");
  }
  if (!(mu >= 0.0) || !(sigma2 >= 0.0) || n < 1 || d < 0) {
    throw std::invalid_argument("bound_report: bad mu, sigma2, d or n");
  }
  const double dn = static_cast<double>(n);

  BoundReport r;
  r.theorem = theorem;
  r.lambda = lambda;
  r.mu = mu;
  r.sigma2 = sigma2;

  const bool exact_route = oracle.f_star.has_value() && context.kernel != nullptr &&
                           context.design != nullptr;
  const bool candidate_route = oracle.f_norm.has_value();
  const double penalty_alpha =
      oracle.alpha ? mu * oracle.alpha->squaredNorm() : 0.0;
  const double penalty_f =
      candidate_route ? lambda * (*oracle.f_norm) * (*oracle.f_norm) : 0.0;

  if (theorem == "T1") {
    require_source(kernel_spec, SpectrumSource::empirical_k,
                   SpectrumSource::empirical_k, theorem, "kernel");
    r.var_kernel = sigma2 / dn * variance_trace(kernel_spec, lambda);
    if (exact_route) {
      r.bias = exact_bias_t1(*context.kernel, lambda, *oracle.f_star);
    } else if (candidate_route) {
      r.bias = penalty_f;
    } else {
      throw std::invalid_argument("bound_report T1: no oracle candidate or f_star");
    }
  } else if (theorem == "T2") {
    require_source(kernel_spec, SpectrumSource::empirical_qkq,
                   SpectrumSource::empirical_qkq, theorem, "kernel");
    r.var_linear = sigma2 * static_cast<double>(d) / dn;
    r.var_kernel = sigma2 / dn * variance_trace(kernel_spec, lambda);
    if (exact_route) {
      r.bias = exact_bias_t2(*context.kernel, *context.design, lambda, *oracle.f_star);
    } else if (candidate_route) {
      r.bias = penalty_f;
    } else {
      throw std::invalid_argument("bound_report T2: no oracle candidate or f_star");
    }
  } else if (theorem == "T3") {
    require_source(kernel_spec, SpectrumSource::analytic, SpectrumSource::analytic,
                   theorem, "kernel");
    const double rl = kernel_complexity(kernel_spec, lambda);
    r.var_linear = sigma2 * static_cast<double>(d) / dn;
    r.var_kernel = sigma2 * rl * rl / lambda;
    if (!candidate_route) {
      throw std::invalid_argument("bound_report T3: population bound needs an oracle"
                                  " candidate");
    }
    r.bias = penalty_f;
  } else if (theorem == "T4") {
    require_source(kernel_spec, SpectrumSource::empirical_qmukqmu,
                   SpectrumSource::empirical_qmukqmu, theorem, "kernel");
    if (!linear_spec) {
      throw std::invalid_argument("bound_report T4: needs the tau spectrum");
    }
    require_source(*linear_spec, SpectrumSource::empirical_sigma,
                   SpectrumSource::analytic, theorem, "linear");
    r.var_linear = 2.0 * sigma2 / dn * variance_trace(*linear_spec, mu);
    r.var_kernel = 2.0 * sigma2 / dn * variance_trace(kernel_spec, lambda);
    if (exact_route) {
      r.bias =
          exact_bias_t4(*context.kernel, *context.design, lambda, mu, *oracle.f_star);
    } else if (candidate_route) {
      // The infimum in this bound carries a leading constant of 2 on both
      // penalty terms.
      r.bias = 2.0 * (penalty_alpha + penalty_f);
    } else {
      throw std::invalid_argument("bound_report T4: no oracle candidate or f_star");
    }
  } else if (theorem == "T5") {
    require_source(kernel_spec, SpectrumSource::analytic, SpectrumSource::analytic,
                   theorem, "kernel");
    if (!linear_spec) {
      throw std::invalid_argument("bound_report T5: needs the tau spectrum");
    }
    const double rl = kernel_complexity(kernel_spec, lambda);
    r.var_linear = sigma2 / dn * ratio_trace(*linear_spec, mu);
    r.var_kernel = sigma2 * rl * rl / lambda;
    if (!candidate_route) {
      throw std::invalid_argument("bound_report T5: population bound needs an oracle"
                                  " candidate");
    }
    r.bias = 2.0 * (penalty_alpha + penalty_f);
  } else {
    throw std::invalid_argument("bound_report: unknown theorem id " + theorem);
  }

  r.total = r.bias + r.approx + r.var_linear + r.var_kernel;
  return r;
}

std::string bound_report_csv(const std::vector<BoundReport>& reports) {
  std::ostringstream out;
  out << "theorem,lambda,mu,sigma2,bias,approx,var_linear,var_kernel,total\n";
  for (const BoundReport& r : reports) {
    out << r.theorem << ',' << format_g17(r.lambda) << ',' << format_g17(r.mu) << ','
        << format_g17(r.sigma2) << ',' << format_g17(r.bias) << ','
        << format_g17(r.approx) << ',' << format_g17(r.var_linear) << ','
        << format_g17(r.var_kernel) << ',' << format_g17(r.total) << '\n';
  }
  return out.str();
}

}  // namespace akrrlab
