// Acceptance gate: one criterion per invocation, selected by argv[1] (1..11).
// Each criterion prints a single PASS/FAIL line plus supporting detail and
// exits 0 on pass, 1 on fail. Tolerances are pinned next to each check.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "akrrlab/design.hpp"
#include "akrrlab/estimators.hpp"
#include "akrrlab/kernels.hpp"
#include "akrrlab/rng.hpp"
#include "akrrlab/simulation.hpp"
#include "akrrlab/theory.hpp"

using namespace akrrlab;

namespace {

int checks_run = 0;
int checks_failed = 0;

void expect(bool ok, const std::string& what) {
  ++checks_run;
  if (!ok) {
    ++checks_failed;
    std::printf("  check failed: %s\n", what.c_str());
  }
}

Dataset random_dataset(Rng& rng, int n, int d, bool unit_box) {
  Dataset data;
  data.x.resize(n, d);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      data.x(i, j) = unit_box ? rng.uniform() : rng.uniform(-2.0, 2.0);
    }
    data.y[i] = rng.uniform(-2.0, 2.0) + rng.normal();
  }
  return data;
}

KernelSpec random_kernel(Rng& rng, bool spline) {
  if (spline) {
    return KernelSpec::spline(1.0 + rng.uniform(), 60);
  }
  return KernelSpec::gaussian(0.4 + rng.uniform());
}

// ----- criterion 1: closed forms beat a long gradient descent -------------

double joint_objective(const Dataset& data, const Eigen::MatrixXd& kb,
                       const Eigen::VectorXd& alpha, const Eigen::VectorXd& c,
                       double lambda, double mu) {
  const double n = static_cast<double>(data.y.size());
  Eigen::VectorXd resid = data.y - kb * c;
  if (alpha.size() > 0) {
    resid -= data.x * alpha;
  }
  double value = resid.squaredNorm() / n + lambda / n * c.dot(kb * c);
  if (alpha.size() > 0) {
    value += mu * alpha.squaredNorm();
  }
  return value;
}

// Steepest descent with exact line search on the quadratic objective.
double descend_joint(const Dataset& data, const Eigen::MatrixXd& kb, double lambda,
                     double mu, bool with_alpha, int steps) {
  const double n = static_cast<double>(data.y.size());
  const Eigen::Index d = data.x.cols();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(with_alpha ? d : 0);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(data.y.size());
  for (int it = 0; it < steps; ++it) {
    Eigen::VectorXd resid = data.y - kb * c;
    if (with_alpha) {
      resid -= data.x * alpha;
    }
    Eigen::VectorXd ga;
    if (with_alpha) {
      ga = -2.0 / n * (data.x.transpose() * resid) + 2.0 * mu * alpha;
    } else {
      ga = Eigen::VectorXd::Zero(0);
    }
    const Eigen::VectorXd gc = -2.0 / n * (kb * resid) + 2.0 * lambda / n * (kb * c);
    const double gg = ga.squaredNorm() + gc.squaredNorm();
    if (gg == 0.0) {
      break;
    }
    Eigen::VectorXd dir_fit = kb * gc;
    if (with_alpha) {
      dir_fit += data.x * ga;
    }
    const double curv = 2.0 / n * dir_fit.squaredNorm() +
                        2.0 * lambda / n * gc.dot(kb * gc) +
                        2.0 * mu * ga.squaredNorm();
    if (!(curv > 0.0)) {
      break;
    }
    const double t = gg / curv;
    if (with_alpha) {
      alpha -= t * ga;
    }
    c -= t * gc;
  }
  return joint_objective(data, kb, alpha, c, lambda, mu);
}

bool closed_form_optimality() {
  constexpr double kMargin = 1e-8;
  constexpr int kSteps = 10000;
  Rng rng(9001);
  for (int t = 0; t < 20; ++t) {
    const int n = 3 + static_cast<int>(rng.uniform_index(6));
    const bool spline = t % 2 == 0;
    const int d = spline ? 1 : 1 + static_cast<int>(rng.uniform_index(2));
    const Dataset data = random_dataset(rng, n, d, spline);
    const KernelSpec ks = random_kernel(rng, spline);
    const double lambda = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
    const double mu = std::exp(rng.uniform(std::log(1e-3), std::log(1.0)));
    const Eigen::MatrixXd kb = kernel_matrix(ks, data.x).entries;

    const FittedModel krr = fit_krr(data, ks, lambda);
    expect(joint_objective(data, kb, Eigen::VectorXd(), krr.dual, lambda, 0.0) <=
               descend_joint(data, kb, lambda, 0.0, false, kSteps) + kMargin,
           "krr closed form vs descent, instance " + std::to_string(t));

    const FittedModel akrr = fit_akrr(data, ks, lambda);
    expect(joint_objective(data, kb, akrr.alpha, akrr.dual, lambda, 0.0) <=
               descend_joint(data, kb, lambda, 0.0, true, kSteps) + kMargin,
           "akrr closed form vs descent, instance " + std::to_string(t));

    const FittedModel ridge = fit_akrr_ridge(data, ks, lambda, mu);
    expect(joint_objective(data, kb, ridge.alpha, ridge.dual, lambda, mu) <=
               descend_joint(data, kb, lambda, mu, true, kSteps) + kMargin,
           "akrr_ridge closed form vs descent, instance " + std::to_string(t));
  }
  return checks_failed == 0;
}

// ----- criterion 2: penalty limits collapse onto the simpler estimators ---

bool limit_lattice() {
  constexpr double kRel = 1e-6;
  Rng rng(9002);
  for (int t = 0; t < 20; ++t) {
    const int n = 10 + static_cast<int>(rng.uniform_index(21));
    const bool spline = t % 2 == 0;
    const int d = spline ? 1 : 1 + static_cast<int>(rng.uniform_index(3));
    const Dataset data = random_dataset(rng, n, d, spline);
    const KernelSpec ks = random_kernel(rng, spline);
    // Iterated backfitting contracts at rate mu1/(mu1+lambda) per pass, so the
    // T=200 comparison needs lambda bounded away from zero.
    const double lambda = std::exp(rng.uniform(std::log(0.5), std::log(5.0)));
    const double mu = std::exp(rng.uniform(std::log(0.01), std::log(2.0)));
    const double scale = kRel * data.y.norm();

    const auto fit_gap = [&](const FittedModel& a, const FittedModel& b) {
      return (predict(a, data.x) - predict(b, data.x)).norm();
    };

    expect(fit_gap(fit_akrr(data, ks, 1e12), fit_ols(data)) <= scale,
           "akrr at huge lambda vs ols, instance " + std::to_string(t));
    expect(fit_gap(fit_akrr_ridge(data, ks, lambda, 1e12),
                   fit_krr(data, ks, lambda)) <= scale,
           "akrr_ridge at huge mu vs krr, instance " + std::to_string(t));
    expect(fit_gap(fit_akrr_ridge(data, ks, 1e12, mu),
                   fit_linear_ridge(data, mu)) <= scale,
           "akrr_ridge at huge lambda vs linear ridge, instance " + std::to_string(t));
    expect(fit_gap(fit_iterated(data, ks, lambda, 1),
                   fit_two_step(data, ks, lambda)) <= scale,
           "single backfitting pass vs two-step, instance " + std::to_string(t));
    expect(fit_gap(fit_iterated(data, ks, lambda, 200),
                   fit_akrr(data, ks, lambda)) <= scale,
           "long backfitting vs joint solution, instance " + std::to_string(t));
  }
  return checks_failed == 0;
}

// ----- criterion 3: Monte Carlo risk matches the exact decomposition ------

bool risk_decomposition() {
  const int n = 30;
  const int reps = 2000;
  const double lambda = 0.05;
  const double sigma = 1.5;
  const KernelSpec ks = KernelSpec::spline(2.0, 100);

  Rng x_rng(331);
  Dataset data;
  data.x.resize(n, 1);
  Eigen::VectorXd f_star(n);
  for (int i = 0; i < n; ++i) {
    const double x = x_rng.uniform();
    data.x(i, 0) = x;
    f_star[i] = 2.0 * x + 1.5 * std::sin(2.0 * M_PI * x);
  }
  data.y = f_star;

  const KernelMatrix km = kernel_matrix(ks, data.x);
  const Eigen::MatrixXd& kb = km.entries;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  const DesignFactor factor = factor_design(data.x);

  // exact expected in-sample risk of the plain kernel smoother S = K (K+l)^-1
  const Eigen::MatrixXd s_krr = kb * (kb + lambda * eye).ldlt().solve(eye);
  const double krr_bias = (s_krr * f_star - f_star).squaredNorm() / n;
  const double krr_var =
      sigma * sigma / n * (s_krr.transpose() * s_krr).trace();
  const double krr_exact = krr_bias + krr_var;

  // exact expected in-sample risk of the partially linear smoother P + V(V+l)^-1 Q
  const Eigen::MatrixXd p = factor.u * factor.u.transpose();
  const Eigen::MatrixXd q = eye - p;
  const Eigen::MatrixXd v = (q * kb * q + (q * kb * q).transpose()) / 2.0;
  const Eigen::MatrixXd s_akrr = p + v * (v + lambda * eye).ldlt().solve(q);
  const double akrr_bias = (s_akrr * f_star - f_star).squaredNorm() / n;
  const double akrr_var =
      sigma * sigma / n * (s_akrr.transpose() * s_akrr).trace();
  const double akrr_exact = akrr_bias + akrr_var;

  // the same numbers must fall out of the bound assembly's exact route
  {
    BoundOracle oracle;
    oracle.f_star = f_star;
    BoundContext ctx;
    ctx.kernel = &km;
    ctx.design = &factor;
    const EigenSpectrum mu_spec =
        spectrum(km.entries, SpectrumSource::empirical_k, n);
    const BoundReport t1 = bound_report("T1", mu_spec, std::nullopt, lambda, 0.0,
                                        sigma * sigma, 0, n, oracle, ctx);
    expect(std::abs(t1.total - krr_exact) <= 1e-10,
           "report total vs dense closed form, plain kernel");

    const EigenSpectrum nu_spec =
        spectrum(v, SpectrumSource::empirical_qkq, n);
    const BoundReport t2 =
        bound_report("T2", nu_spec, std::nullopt, lambda, 0.0, sigma * sigma,
                     static_cast<int>(factor.rank), n, oracle, ctx);
    expect(std::abs(t2.total - akrr_exact) <= 1e-10,
           "report total vs dense closed form, partially linear");
  }

  // Monte Carlo over fresh noise at fixed design
  double krr_sum = 0.0, krr_sumsq = 0.0, akrr_sum = 0.0, akrr_sumsq = 0.0;
  Rng noise_rng(332);
  Dataset rep = data;
  for (int r = 0; r < reps; ++r) {
    for (int i = 0; i < n; ++i) {
      rep.y[i] = f_star[i] + sigma * noise_rng.normal();
    }
    const double krr_risk =
        (predict(fit_krr(rep, ks, lambda), rep.x) - f_star).squaredNorm() / n;
    const double akrr_risk =
        (predict(fit_akrr(rep, ks, lambda), rep.x) - f_star).squaredNorm() / n;
    krr_sum += krr_risk;
    krr_sumsq += krr_risk * krr_risk;
    akrr_sum += akrr_risk;
    akrr_sumsq += akrr_risk * akrr_risk;
  }
  const auto mc_check = [&](double sum, double sumsq, double exact,
                            const char* label) {
    const double mean = sum / reps;
    const double var = (sumsq - sum * sum / reps) / (reps - 1);
    const double se = std::sqrt(var / reps);
    std::printf("  %s: mc=%.6f exact=%.6f se=%.6f\n", label, mean, exact, se);
    expect(std::abs(mean - exact) <= 4.0 * se,
           std::string(label) + " within 4 standard errors");
  };
  mc_check(krr_sum, krr_sumsq, krr_exact, "plain kernel");
  mc_check(akrr_sum, akrr_sumsq, akrr_exact, "partially linear");
  return checks_failed == 0;
}

// ----- criterion 4: projected spectra dominate, traces follow -------------

bool spectrum_domination() {
  Rng rng(9004);
  for (int t = 0; t < 100; ++t) {
    const bool spline = t % 2 == 0;
    const int d = 1 + static_cast<int>(rng.uniform_index(4));
    const int n = 25;
    const Dataset data = random_dataset(rng, n, spline ? 1 : d, spline);
    Dataset design = data;
    if (spline && d > 1) {
      design.x.conservativeResize(n, d);
      for (int i = 0; i < n; ++i) {
        for (int j = 1; j < d; ++j) {
          design.x(i, j) = rng.uniform(-1.0, 1.0);
        }
      }
    }
    const KernelSpec ks = random_kernel(rng, spline);
    const KernelMatrix km = kernel_matrix(ks, data.x);
    const DesignFactor factor = factor_design(design.x);
    const ComparisonCheck cmp = check_eigen_comparison(km, factor);
    expect(cmp.ok && cmp.worst_margin >= -1e-9,
           "elementwise eigenvalue domination, instance " + std::to_string(t));

    const double lambda = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
    const Eigen::MatrixXd qk = apply_qx(factor, km.entries);
    const Eigen::MatrixXd v =
        apply_qx(factor, Eigen::MatrixXd(qk.transpose()));
    const EigenSpectrum nu =
        spectrum((v + v.transpose()) / 2.0, SpectrumSource::empirical_qkq, n);
    const EigenSpectrum mu = spectrum(km.entries, SpectrumSource::empirical_k, n);
    const double vt_nu = variance_trace(nu, lambda);
    const double vt_mu = variance_trace(mu, lambda);
    expect(vt_nu <= vt_mu * (1.0 + 1e-9) + 1e-9,
           "variance trace domination, instance " + std::to_string(t));
  }
  return checks_failed == 0;
}

// ----- criterion 5: resolvent identities at the operator level ------------

double op_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()[0];
}

bool hat_matrix_identities() {
  constexpr double kOpTol = 1e-8;
  Rng rng(9005);
  for (int t = 0; t < 50; ++t) {
    const int n = 10 + static_cast<int>(rng.uniform_index(21));
    const bool spline = t % 2 == 0;
    const int d = 1 + static_cast<int>(rng.uniform_index(3));
    const Dataset data = random_dataset(rng, n, spline ? 1 : d, spline);
    const KernelSpec ks = random_kernel(rng, spline);
    const double lambda = std::exp(rng.uniform(std::log(1e-2), std::log(10.0)));

    const Eigen::MatrixXd kb = kernel_matrix(ks, data.x).entries;
    const DesignFactor factor = factor_design(data.x);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd p = factor.rank > 0
                                  ? Eigen::MatrixXd(factor.u * factor.u.transpose())
                                  : Eigen::MatrixXd(Eigen::MatrixXd::Zero(n, n));
    const Eigen::MatrixXd q = eye - p;
    const Eigen::MatrixXd v = (q * kb * q + (q * kb * q).transpose()) / 2.0;

    const Eigen::MatrixXd resolvent = (q * kb + lambda * eye).partialPivLu().solve(eye);
    const Eigen::MatrixXd v_inv = (v + lambda * eye).ldlt().solve(eye);

    const Eigen::MatrixXd lhs1 = q * kb * resolvent * q;
    const Eigen::MatrixXd rhs1 = v * v_inv;
    expect(op_norm(lhs1 - rhs1) <= kOpTol,
           "smoother identity, instance " + std::to_string(t));
    expect(op_norm(lhs1) <= 1.0 + kOpTol,
           "smoother norm bound lhs, instance " + std::to_string(t));
    expect(op_norm(rhs1) <= 1.0 + kOpTol,
           "smoother norm bound rhs, instance " + std::to_string(t));

    // Q_X(I - P_lambda) with P_lambda = K (QK + lambda)^-1 Q from the
    // nonsymmetric resolvent, against the symmetric form the solver uses.
    const Eigen::MatrixXd lhs2 = q - q * kb * resolvent * q;
    const Eigen::MatrixXd rhs2 = lambda * q * v_inv * q;
    expect(op_norm(lhs2 - rhs2) <= kOpTol,
           "residual identity, instance " + std::to_string(t));
    expect(op_norm(lhs2) <= 1.0 + kOpTol,
           "residual norm bound, instance " + std::to_string(t));
  }
  return checks_failed == 0;
}

// ----- criterion 6: critical radius rates ---------------------------------

bool critical_radius_rates() {
  const auto residual_ok = [](const EigenSpectrum& spec, const char* label) {
    const double delta = critical_radius(spec);
    expect(std::abs(kernel_complexity(spec, delta) - delta) <=
               1e-12 * std::max(1.0, delta),
           std::string("fixed point residual, ") + label);
    return delta;
  };

  residual_ok(analytic_polynomial(1.0, 100000, 1000), "polynomial spectrum");
  residual_ok(analytic_exponential(1.0, 1000, 1000), "exponential spectrum");
  Rng rng(9006);
  for (int t = 0; t < 20; ++t) {
    const int len = 1 + static_cast<int>(rng.uniform_index(50));
    EigenSpectrum s;
    s.values.resize(len);
    for (int i = 0; i < len; ++i) {
      s.values[i] = std::exp(rng.uniform(-8.0, 2.0));
    }
    std::sort(s.values.data(), s.values.data() + len, std::greater<double>());
    s.n_context = 1 + static_cast<int>(rng.uniform_index(500));
    residual_ok(s, "random spectrum");
  }

  // polynomial decay j^-2 gives delta_n ~ n^(-2/3)
  for (const int n : {100, 1000, 10000}) {
    const double delta = critical_radius(analytic_polynomial(1.0, 100000, n));
    const double rate = std::pow(static_cast<double>(n), -2.0 / 3.0);
    expect(delta >= rate / 3.0 && delta <= rate * 3.0,
           "polynomial rate at n=" + std::to_string(n));
    std::printf("  polynomial n=%d delta=%.3e target=%.3e\n", n, delta, rate);
  }

  // exponential decay gives delta_n ~ log(n)/n
  {
    const int n = 1000;
    const double delta = critical_radius(analytic_exponential(1.0, n, n));
    const double rate = std::log(static_cast<double>(n)) / n;
    expect(delta >= rate / 5.0 && delta <= rate * 5.0, "exponential rate");
    std::printf("  exponential n=%d delta=%.3e target=%.3e\n", n, delta, rate);
  }
  return checks_failed == 0;
}

// ----- criteria 7-11: registered desk-scale reproductions -----------------

bool run_experiment(const std::string& id, std::uint64_t seed) {
  const std::string dir = "/tmp/akrrlab_acceptance_" + id;
  std::filesystem::remove_all(dir);
  const ExperimentResult result = reproduce(id, "desk", seed, dir);
  for (const ExperimentCheck& check : result.checks) {
    std::printf("  %s %s: %s\n", check.passed ? "PASS" : "FAIL",
                check.name.c_str(), check.detail.c_str());
    expect(check.passed, id + " " + check.name);
  }
  expect(result.all_passed(), id + " all registered checks");
  return checks_failed == 0;
}

bool slope_table() { return run_experiment("tab1", 17); }
bool lambda_selection_table() { return run_experiment("tab2", 7); }
bool risk_ordering_figures() {
  const bool left = run_experiment("fig1_left", 7);
  const bool right = run_experiment("fig1_right", 7);
  return left && right;
}
bool highdim_table() { return run_experiment("app_tab1", 7); }
bool backfitting_comparison() { return run_experiment("app_fig_akrr_tkrr", 7); }

struct Criterion {
  const char* name;
  bool (*fn)();
};

const Criterion kCriteria[] = {
    {"closed_form_optimality", closed_form_optimality},
    {"limit_lattice", limit_lattice},
    {"risk_decomposition", risk_decomposition},
    {"spectrum_domination", spectrum_domination},
    {"hat_matrix_identities", hat_matrix_identities},
    {"critical_radius_rates", critical_radius_rates},
    {"slope_table", slope_table},
    {"lambda_selection_table", lambda_selection_table},
    {"risk_ordering_figures", risk_ordering_figures},
    {"highdim_table", highdim_table},
    {"backfitting_comparison", backfitting_comparison},
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: acceptance <criterion 1..11>\n");
    return 1;
  }
  const int k = std::atoi(argv[1]);
  if (k < 1 || k > 11) {
    std::fprintf(stderr, "criterion must be 1..11\n");
    return 1;
  }
  const Criterion& criterion = kCriteria[k - 1];
  const auto start = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = criterion.fn();
  } catch (const std::exception& e) {
    std::printf("  exception: %s\n", e.what());
    ok = false;
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::printf("ACCEPTANCE C%d %s: %s (%d checks, %.1fs)\n", k, criterion.name,
              ok ? "PASS" : "FAIL", checks_run, elapsed);
  return ok ? 0 : 1;
}
