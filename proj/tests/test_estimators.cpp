#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "akrrlab/design.hpp"
#include "akrrlab/estimators.hpp"
#include "akrrlab/kernels.hpp"
#include "akrrlab/rng.hpp"

using namespace akrrlab;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int n, int d, double lo = -1.0,
                              double hi = 1.0) {
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(lo, hi);
  return x;
}

Eigen::VectorXd random_vector(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

Dataset random_dataset(Rng& rng, int n, int d) {
  return Dataset{random_matrix(rng, n, d), random_vector(rng, n)};
}

// (1/n)||y - X a - Kb c||^2 + (lambda/n) c' Kb c + mu ||a||^2, the joint
// objective every partially linear fit minimizes (mu = 0 drops the ridge,
// alpha absent means a pure kernel fit).
double joint_objective(const Dataset& data, const Eigen::MatrixXd& kb,
                       const Eigen::VectorXd& alpha, const Eigen::VectorXd& c,
                       double lambda, double mu) {
  const double n = static_cast<double>(data.y.size());
  Eigen::VectorXd resid = data.y - kb * c;
  if (alpha.size() > 0) {
    resid -= data.x * alpha;
  }
  return resid.squaredNorm() / n + lambda * c.dot(kb * c) / n +
         mu * alpha.squaredNorm();
}

// Steepest descent with exact line search on the quadratic joint objective,
// started from zero. Returns the best objective value seen.
double descend_joint(const Dataset& data, const Eigen::MatrixXd& kb,
                     double lambda, double mu, bool with_alpha, int steps) {
  const int n = static_cast<int>(data.y.size());
  const int d = with_alpha ? static_cast<int>(data.x.cols()) : 0;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  const double nn = static_cast<double>(n);
  double best = joint_objective(data, kb, alpha, c, lambda, mu);
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXd resid = data.y - kb * c;
    if (d > 0) resid -= data.x * alpha;
    Eigen::VectorXd ga;
    if (d > 0) {
      ga = -2.0 / nn * (data.x.transpose() * resid) + 2.0 * mu * alpha;
    } else {
      ga = Eigen::VectorXd::Zero(0);
    }
    const Eigen::VectorXd gc =
        -2.0 / nn * (kb * resid) + 2.0 * lambda / nn * (kb * c);
    // One quadratic-form evaluation gives the exact minimizing step.
    Eigen::VectorXd dir_fit = kb * gc;
    if (d > 0) dir_fit += data.x * ga;
    const double curv = 2.0 / nn * dir_fit.squaredNorm() +
                        2.0 * lambda / nn * gc.dot(kb * gc) +
                        2.0 * mu * ga.squaredNorm();
    const double slope = ga.squaredNorm() + gc.squaredNorm();
    if (!(curv > 0.0) || slope == 0.0) break;
    const double t = slope / curv;
    if (d > 0) alpha -= t * ga;
    c -= t * gc;
    best = std::min(best, joint_objective(data, kb, alpha, c, lambda, mu));
  }
  return best;
}

Eigen::VectorXd in_sample(const FittedModel& m) { return predict(m, m.train_x); }

}  // namespace

TEST_CASE("ols recovers an exact linear relation") {
  Dataset data;
  data.x.resize(5, 1);
  data.x << 0.1, 0.5, 1.0, 2.0, 3.5;
  data.y = 2.0 * data.x.col(0);
  const FittedModel m = fit_ols(data);
  REQUIRE(m.alpha.size() == 1);
  CHECK(m.alpha[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK((in_sample(m) - data.y).norm() <= 1e-10 * data.y.norm());
  CHECK(m.dual.norm() == 0.0);
}

TEST_CASE("ols on a target orthogonal to the columns") {
  Rng rng(21);
  Dataset data = random_dataset(rng, 10, 3);
  const DesignFactor f = factor_design(data.x);
  data.y = data.y - f.u * (f.u.transpose() * data.y);
  const FittedModel m = fit_ols(data);
  CHECK(m.alpha.norm() <= 1e-10 * data.y.norm());
}

TEST_CASE("ols residuals are orthogonal to every column") {
  Rng rng(22);
  const Dataset data = random_dataset(rng, 20, 3);
  const FittedModel m = fit_ols(data);
  const Eigen::VectorXd resid = data.y - in_sample(m);
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(resid.dot(data.x.col(j))) <=
          1e-10 * data.y.norm() * data.x.col(j).norm());
  }
}

TEST_CASE("linear ridge limits and closed form") {
  Rng rng(23);
  const Dataset data = random_dataset(rng, 15, 4);

  const FittedModel heavy = fit_linear_ridge(data, 1e12);
  CHECK(heavy.alpha.norm() <= 1e-8);
  CHECK(in_sample(heavy).norm() <= 1e-8 * data.y.norm());

  const FittedModel light = fit_linear_ridge(data, 1e-12);
  const FittedModel ols = fit_ols(data);
  CHECK((light.alpha - ols.alpha).norm() <= 1e-6 * ols.alpha.norm());

  CHECK_THROWS_AS(fit_linear_ridge(data, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(fit_linear_ridge(data, -1.0), std::invalid_argument);
}

TEST_CASE("linear ridge matches a descent minimizer") {
  Rng rng(24);
  const Dataset data = random_dataset(rng, 15, 4);
  const double mu = 0.3;
  const FittedModel m = fit_linear_ridge(data, mu);

  // Descent on h(a) = (1/n)||y - X a||^2 + mu ||a||^2 from zero.
  Eigen::VectorXd a = Eigen::VectorXd::Zero(4);
  const double n = 15.0;
  for (int s = 0; s < 5000; ++s) {
    const Eigen::VectorXd g =
        -2.0 / n * (data.x.transpose() * (data.y - data.x * a)) + 2.0 * mu * a;
    const Eigen::VectorXd xg = data.x * g;
    const double curv = 2.0 / n * xg.squaredNorm() + 2.0 * mu * g.squaredNorm();
    if (!(curv > 0.0)) break;
    a -= g.squaredNorm() / curv * g;
  }
  CHECK((m.alpha - a).norm() <= 1e-6 * (a.norm() + 1.0));
}

TEST_CASE("krr scalar case and shrink-to-zero limit") {
  Dataset data;
  data.x.resize(1, 1);
  data.x << 0.3;
  data.y.resize(1);
  data.y << 1.7;
  const double lambda = 0.7;
  const FittedModel m = fit_krr(data, KernelSpec::gaussian(1.0), lambda);
  CHECK(in_sample(m)[0] == doctest::Approx(1.7 / (1.0 + lambda)).epsilon(1e-12));
  CHECK(m.alpha.size() == 1);
  CHECK(m.alpha.norm() == 0.0);

  Rng rng(25);
  const Dataset big = random_dataset(rng, 8, 2);
  const FittedModel heavy = fit_krr(big, KernelSpec::gaussian(1.0), 1e12);
  CHECK(in_sample(heavy).norm() <= 1e-9 * big.y.norm());
}

TEST_CASE("krr solution beats random dual perturbations") {
  Rng rng(26);
  const Dataset data = random_dataset(rng, 8, 2);
  const KernelSpec kernel = KernelSpec::gaussian(1.3);
  const double lambda = 0.05;
  const FittedModel m = fit_krr(data, kernel, lambda);
  const Eigen::MatrixXd kb = kernel_matrix(kernel, data.x).entries;
  const Eigen::VectorXd none(0);
  const double at_solution = joint_objective(data, kb, none, m.dual, lambda, 0.0);
  for (int t = 0; t < 200; ++t) {
    const double scale = t % 2 == 0 ? 1e-2 * m.dual.norm() : 1.0;
    const Eigen::VectorXd probe = m.dual + scale * random_vector(rng, 8);
    CHECK(at_solution <= joint_objective(data, kb, none, probe, lambda, 0.0) + 1e-12);
  }
}

TEST_CASE("akrr with a purely linear target") {
  Rng rng(27);
  Dataset data = random_dataset(rng, 12, 2);
  Eigen::VectorXd alpha_star(2);
  alpha_star << 1.5, -0.7;
  data.y = data.x * alpha_star;
  const FittedModel m = fit_akrr(data, KernelSpec::gaussian(1.0), 0.1);
  CHECK(m.dual.norm() <= 1e-10 * data.y.norm());
  CHECK((m.alpha - alpha_star).norm() <= 1e-8 * alpha_star.norm());
  CHECK((in_sample(m) - data.y).norm() <= 1e-9 * data.y.norm());
}

TEST_CASE("akrr heavy penalty reduces to the projection fit") {
  Rng rng(28);
  const Dataset data = random_dataset(rng, 10, 3);
  const DesignFactor f = factor_design(data.x);
  const FittedModel m = fit_akrr(data, KernelSpec::gaussian(1.0), 1e12);
  CHECK((in_sample(m) - apply_px(f, data.y)).norm() <= 1e-8 * data.y.norm());
}

TEST_CASE("akrr fit identity and residual-space dual") {
  Rng rng(29);
  const Dataset data = random_dataset(rng, 14, 3);
  const KernelSpec kernel = KernelSpec::gaussian(0.8);
  const double lambda = 0.2;
  const FittedModel m = fit_akrr(data, kernel, lambda);
  const DesignFactor f = factor_design(data.x);
  const Eigen::MatrixXd kb = kernel_matrix(kernel, data.x).entries;

  const Eigen::VectorXd want =
      apply_px(f, data.y) + apply_qx(f, Eigen::VectorXd(kb * m.dual));
  CHECK((in_sample(m) - want).norm() <= 1e-9 * data.y.norm());
  CHECK(apply_px(f, m.dual).norm() <= 1e-9 * m.dual.norm());
}

TEST_CASE("akrr joint objective is optimal against descent") {
  Rng rng(30);
  const Dataset data = random_dataset(rng, 6, 2);
  const KernelSpec kernel = KernelSpec::gaussian(1.1);
  const double lambda = 0.1;
  const FittedModel m = fit_akrr(data, kernel, lambda);
  const Eigen::MatrixXd kb = kernel_matrix(kernel, data.x).entries;
  const double at_solution = joint_objective(data, kb, m.alpha, m.dual, lambda, 0.0);
  const double by_descent = descend_joint(data, kb, lambda, 0.0, true, 10000);
  CHECK(at_solution <= by_descent + 1e-8);
}

TEST_CASE("akrr ridge joint objective is optimal against descent") {
  Rng rng(31);
  const Dataset data = random_dataset(rng, 6, 2);
  const KernelSpec kernel = KernelSpec::gaussian(0.9);
  const double lambda = 0.1;
  const double mu = 0.2;
  const FittedModel m = fit_akrr_ridge(data, kernel, lambda, mu);
  const Eigen::MatrixXd kb = kernel_matrix(kernel, data.x).entries;
  const double at_solution = joint_objective(data, kb, m.alpha, m.dual, lambda, mu);
  const double by_descent = descend_joint(data, kb, lambda, mu, true, 10000);
  CHECK(at_solution <= by_descent + 1e-8);
}

TEST_CASE("akrr ridge fit identity at positive mu") {
  Rng rng(32);
  const Dataset data = random_dataset(rng, 12, 3);
  const KernelSpec kernel = KernelSpec::gaussian(1.0);
  const double lambda = 0.15;
  const double mu = 0.4;
  const FittedModel m = fit_akrr_ridge(data, kernel, lambda, mu);
  const DesignFactor f = factor_design(data.x);
  const Eigen::MatrixXd kb = kernel_matrix(kernel, data.x).entries;
  const Eigen::VectorXd want =
      apply_pmu(f, data.y, mu) + apply_qmu(f, Eigen::VectorXd(kb * m.dual), mu);
  CHECK((in_sample(m) - want).norm() <= 1e-9 * data.y.norm());
}

TEST_CASE("akrr ridge at mu zero coincides with akrr") {
  Rng rng(33);
  const Dataset data = random_dataset(rng, 9, 2);
  const KernelSpec kernel = KernelSpec::gaussian(1.0);
  const FittedModel a = fit_akrr(data, kernel, 0.3);
  const FittedModel b = fit_akrr_ridge(data, kernel, 0.3, 0.0);
  CHECK((in_sample(a) - in_sample(b)).norm() <= 1e-12 * data.y.norm());
}

TEST_CASE("limit lattice connects every estimator") {
  Rng rng(34);
  for (int t = 0; t < 3; ++t) {
    const Dataset data = random_dataset(rng, 10, 2);
    const KernelSpec kernel = KernelSpec::gaussian(1.0 + t);
    const double lambda = 0.5;
    const double mu = 0.3;
    const double ynorm = data.y.norm();

    CHECK((in_sample(fit_akrr(data, kernel, 1e12)) -
           in_sample(fit_ols(data))).norm() <= 1e-6 * ynorm);
    CHECK((in_sample(fit_akrr_ridge(data, kernel, lambda, 1e12)) -
           in_sample(fit_krr(data, kernel, lambda))).norm() <= 1e-6 * ynorm);
    CHECK((in_sample(fit_akrr_ridge(data, kernel, 1e12, mu)) -
           in_sample(fit_linear_ridge(data, mu))).norm() <= 1e-6 * ynorm);
    CHECK((in_sample(fit_iterated(data, kernel, lambda, 1)) -
           in_sample(fit_two_step(data, kernel, lambda))).norm() <= 1e-10 * ynorm);
    CHECK((in_sample(fit_iterated(data, kernel, lambda, 200)) -
           in_sample(fit_akrr(data, kernel, lambda))).norm() <= 1e-6 * ynorm);
  }
}

TEST_CASE("two step dual and fit follow the stated construction") {
  Rng rng(35);
  const Dataset data = random_dataset(rng, 10, 2);
  const KernelSpec kernel = KernelSpec::gaussian(1.2);
  const double lambda = 0.2;
  const FittedModel m = fit_two_step(data, kernel, lambda);
  const DesignFactor f = factor_design(data.x);
  const Eigen::MatrixXd kb = kernel_matrix(kernel, data.x).entries;

  const Eigen::VectorXd want_dual =
      solve_spd(kb, apply_qx(f, data.y), lambda);
  CHECK((m.dual - want_dual).norm() <= 1e-12 * (want_dual.norm() + 1.0));

  const Eigen::VectorXd want_fit =
      apply_px(f, data.y) + kb * m.dual;
  CHECK((in_sample(m) - want_fit).norm() <= 1e-9 * data.y.norm());

  // The kernel has mass inside the column space, so the one-shot fit and the
  // jointly solved fit genuinely differ.
  const FittedModel joint = fit_akrr(data, kernel, lambda);
  CHECK((in_sample(m) - in_sample(joint)).norm() > 1e-10 * data.y.norm());
}

TEST_CASE("two step with a purely linear target") {
  Rng rng(36);
  Dataset data = random_dataset(rng, 8, 2);
  data.y = data.x * Eigen::Vector2d(0.4, -1.1);
  const FittedModel m = fit_two_step(data, KernelSpec::gaussian(1.0), 0.1);
  CHECK(m.dual.norm() <= 1e-10 * data.y.norm());
  CHECK((in_sample(m) - data.y).norm() <= 1e-9 * data.y.norm());

  const FittedModel heavy = fit_two_step(data, KernelSpec::gaussian(1.0), 1e12);
  const DesignFactor f = factor_design(data.x);
  CHECK((in_sample(heavy) - apply_px(f, data.y)).norm() <= 1e-8 * data.y.norm());
}

TEST_CASE("iterated backfitting converges and reports its passes") {
  Rng rng(37);
  Dataset data = random_dataset(rng, 10, 2);
  data.y = data.x * Eigen::Vector2d(2.0, 1.0);
  const FittedModel m = fit_iterated(data, KernelSpec::gaussian(1.0), 0.2, 50);
  CHECK(m.dual.norm() <= 1e-9 * data.y.norm());
  CHECK((in_sample(m) - data.y).norm() <= 1e-9 * data.y.norm());
  CHECK(m.iterations >= 1);
  CHECK(m.iterations <= 3);
}

TEST_CASE("prediction consistency and the naive evaluation loop") {
  Rng rng(38);
  const Dataset data = random_dataset(rng, 9, 2);
  const KernelSpec kernel = KernelSpec::gaussian(1.4);
  const FittedModel m = fit_akrr(data, kernel, 0.3);

  const Eigen::MatrixXd x_new = random_matrix(rng, 50, 2);
  const Eigen::VectorXd got = predict(m, x_new);
  const double n = static_cast<double>(data.y.size());
  for (int i = 0; i < 50; ++i) {
    double acc = m.alpha.dot(x_new.row(i));
    for (int j = 0; j < 9; ++j) {
      acc += m.dual[j] / n *
             kernel_eval(kernel, data.x.row(j).transpose(), x_new.row(i).transpose());
    }
    CHECK(got[i] == doctest::Approx(acc).epsilon(1e-12));
  }

  FittedModel linear;
  linear.kind = EstimatorKind::ols;
  linear.alpha = Eigen::Vector2d(1.0, -2.0);
  linear.dual = Eigen::VectorXd::Zero(0);
  linear.train_x = Eigen::MatrixXd::Zero(0, 2);
  const Eigen::VectorXd lin = predict(linear, x_new);
  CHECK((lin - x_new * linear.alpha).norm() <= 1e-14 * lin.norm());

  CHECK_THROWS_AS(predict(m, random_matrix(rng, 3, 5)), std::invalid_argument);
}

TEST_CASE("model text serialization round-trips exactly") {
  Rng rng(39);
  const Dataset data = random_dataset(rng, 7, 2);
  for (const EstimatorKind kind :
       {EstimatorKind::ols, EstimatorKind::linear_ridge, EstimatorKind::krr,
        EstimatorKind::akrr, EstimatorKind::akrr_ridge, EstimatorKind::two_step,
        EstimatorKind::iterated}) {
    const bool kernelized = estimator_uses_kernel(kind);
    std::optional<KernelSpec> kernel;
    if (kernelized) kernel = KernelSpec::gaussian(1.25);
    const FittedModel m = fit_any(data, kind, kernel, 0.3, 0.2, 20);

    std::ostringstream out;
    save_model(m, out);
    std::istringstream in(out.str());
    const FittedModel back = load_model(in);

    CHECK(back.kind == m.kind);
    CHECK(back.lambda == m.lambda);
    CHECK(back.mu == m.mu);
    CHECK(back.alpha.size() == m.alpha.size());
    CHECK((back.alpha - m.alpha).norm() == 0.0);
    CHECK((back.dual - m.dual).norm() == 0.0);
    CHECK((back.train_x - m.train_x).norm() == 0.0);
    CHECK(back.kernel.has_value() == m.kernel.has_value());
    if (back.kernel) {
      CHECK(back.kernel->format() == m.kernel->format());
    }
    const Eigen::MatrixXd probe = random_matrix(rng, 5, 2);
    CHECK((predict(back, probe) - predict(m, probe)).norm() == 0.0);
  }

  std::istringstream bad("akrrlab-model v2 kind=ols n=1 d=1 lambda=0 mu=0 kernel=none\n");
  CHECK_THROWS_AS(load_model(bad), std::invalid_argument);
}

TEST_CASE("dispatch rejects mismatched kernel arguments") {
  Rng rng(40);
  const Dataset data = random_dataset(rng, 6, 2);
  CHECK_THROWS_AS(fit_any(data, EstimatorKind::akrr, std::nullopt, 0.1, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      fit_any(data, EstimatorKind::ols, KernelSpec::gaussian(1.0), 0.1, 0.0),
      std::invalid_argument);

  const FittedModel direct = fit_akrr(data, KernelSpec::gaussian(1.0), 0.1);
  const FittedModel routed =
      fit_any(data, EstimatorKind::akrr, KernelSpec::gaussian(1.0), 0.1, 0.0);
  CHECK((direct.dual - routed.dual).norm() == 0.0);
  CHECK((direct.alpha - routed.alpha).norm() == 0.0);
}

TEST_CASE("estimator names round-trip") {
  for (const EstimatorKind kind :
       {EstimatorKind::ols, EstimatorKind::linear_ridge, EstimatorKind::krr,
        EstimatorKind::akrr, EstimatorKind::akrr_ridge, EstimatorKind::two_step,
        EstimatorKind::iterated}) {
    CHECK(parse_estimator_kind(estimator_kind_name(kind)) == kind);
  }
  CHECK_THROWS_AS(parse_estimator_kind("boosting"), std::invalid_argument);
}

TEST_CASE("dataset validation") {
  Dataset bad;
  bad.x = Eigen::MatrixXd::Zero(3, 2);
  bad.y = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
