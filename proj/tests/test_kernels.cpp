#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "akrrlab/kernels.hpp"
#include "akrrlab/rng.hpp"

using namespace akrrlab;

namespace {

// Reference spline evaluation: direct cosine summation, no recurrence.
double spline_direct(double q, int m, double x, double y) {
  const double u = (x - std::floor(x)) - (y - std::floor(y));
  double acc = 1.0;
  for (int k = 1; k <= m; ++k) {
    acc += 2.0 * std::cos(2.0 * M_PI * k * u) * std::pow(k, -2.0 * q);
  }
  return acc;
}

Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x[0] = v;
  return x;
}

}  // namespace

TEST_CASE("gaussian kernel closed-form values") {
  const KernelSpec g1 = KernelSpec::gaussian(1.0);
  Eigen::VectorXd x(3);
  x << 0.3, -1.2, 0.77;
  CHECK(kernel_eval(g1, x, x) == 1.0);

  const KernelSpec g2 = KernelSpec::gaussian(2.0);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
  CHECK(kernel_eval(g2, zero, ones) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("spline kernel truncated series at half period") {
  const KernelSpec s = KernelSpec::spline(1.0, 3);
  const double got = kernel_eval(s, vec1(0.5), vec1(0.0));
  const double expected = 1.0 + 2.0 * (-1.0 + 0.25 - 1.0 / 9.0);
  CHECK(got == doctest::Approx(expected).epsilon(1e-14));
  CHECK(got == doctest::Approx(-0.72222).epsilon(1e-4));
}

TEST_CASE("spline kernel matches direct summation on random inputs") {
  Rng rng(41);
  const KernelSpec s = KernelSpec::spline(1.3, 80);
  for (int t = 0; t < 20; ++t) {
    const double x = rng.uniform(-2.0, 2.0);
    const double y = rng.uniform(-2.0, 2.0);
    const double got = kernel_eval(s, vec1(x), vec1(y));
    CHECK(got == doctest::Approx(spline_direct(1.3, 80, x, y)).epsilon(1e-12));
  }
}

TEST_CASE("kernel matrix entries are K/n") {
  const KernelSpec g = KernelSpec::gaussian(1.0);
  Eigen::MatrixXd one_row(1, 2);
  one_row << 0.4, -3.0;
  const KernelMatrix km1 = kernel_matrix(g, one_row);
  REQUIRE(km1.entries.rows() == 1);
  CHECK(km1.entries(0, 0) == 1.0);
  CHECK(km1.scale == 1.0);

  Eigen::MatrixXd twin(2, 3);
  twin << 1.0, 2.0, 3.0, 1.0, 2.0, 3.0;
  const KernelMatrix km2 = kernel_matrix(g, twin);
  CHECK(km2.scale == 0.5);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(km2.entries(i, j) == 0.5);
    }
  }
}

TEST_CASE("spline kernel matrix against the series oracle") {
  Eigen::MatrixXd x(3, 1);
  x << 0.0, 0.25, 0.5;
  const KernelMatrix km = kernel_matrix(KernelSpec::spline(1.0, 50), x);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double want = spline_direct(1.0, 50, x(i, 0), x(j, 0)) / 3.0;
      CHECK(km.entries(i, j) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("gram and cross blocks agree with entrywise evaluation") {
  Rng rng(7);
  Eigen::MatrixXd a(6, 2), b(4, 2);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 2; ++j) a(i, j) = rng.uniform(-1.5, 1.5);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) b(i, j) = rng.uniform(-1.5, 1.5);
  const KernelSpec g = KernelSpec::gaussian(0.9);

  const Eigen::MatrixXd gram = kernel_gram(g, a);
  const KernelMatrix km = kernel_matrix(g, a);
  CHECK(km.scale == 1.0 / 6.0);
  // materialize the product so the comparison is not FMA-contracted
  const Eigen::MatrixXd scaled = gram * km.scale;
  CHECK((scaled - km.entries).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd cross = kernel_cross(g, a, b);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double want = kernel_eval(g, a.row(i).transpose(), b.row(j).transpose());
      CHECK(cross(i, j) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact symmetry over a thousand random pairs") {
  Rng rng(123);
  const KernelSpec g = KernelSpec::gaussian(1.7);
  const KernelSpec s = KernelSpec::spline(0.9, 40);
  for (int t = 0; t < 1000; ++t) {
    Eigen::VectorXd x(3), y(3);
    for (int j = 0; j < 3; ++j) {
      x[j] = rng.uniform(-4.0, 4.0);
      y[j] = rng.uniform(-4.0, 4.0);
    }
    CHECK(kernel_eval(g, x, y) == kernel_eval(g, y, x));
    CHECK(kernel_eval(s, vec1(x[0]), vec1(y[0])) ==
          kernel_eval(s, vec1(y[0]), vec1(x[0])));
  }
}

TEST_CASE("kernel matrices are positive semidefinite up to tolerance") {
  Rng rng(55);
  for (const int n : {5, 17, 50}) {
    Eigen::MatrixXd xg(n, 2), xs(n, 1);
    for (int i = 0; i < n; ++i) {
      xg(i, 0) = rng.uniform(-2.0, 2.0);
      xg(i, 1) = rng.uniform(-2.0, 2.0);
      xs(i, 0) = rng.uniform();
    }
    for (const KernelMatrix& km :
         {kernel_matrix(KernelSpec::gaussian(0.7), xg),
          kernel_matrix(KernelSpec::spline(1.5, 100), xs)}) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(km.entries);
      REQUIRE(es.info() == Eigen::Success);
      CHECK(es.eigenvalues().minCoeff() >= -1e-8 * km.entries.trace());
    }
  }
}

TEST_CASE("truncation bound closed forms") {
  CHECK(spline_truncation_error(1.0, 200) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(spline_truncation_error(3.0, 10) == doctest::Approx(4e-6).epsilon(1e-12));
  CHECK(spline_truncation_error(0.7, 1000) ==
        doctest::Approx(2.0 * std::pow(1000.0, -0.4) / 0.4).epsilon(1e-12));
  CHECK(spline_truncation_error(0.7, 1000) == doctest::Approx(0.3155).epsilon(1e-3));
  CHECK_THROWS_AS(spline_truncation_error(0.5, 10), std::invalid_argument);
}

TEST_CASE("doubling the truncation moves values by at most the tail bound") {
  Rng rng(99);
  const double q = 1.1;
  const int m = 30;
  const KernelSpec coarse = KernelSpec::spline(q, m);
  const KernelSpec fine = KernelSpec::spline(q, 2 * m);
  const double bound = spline_truncation_error(q, m);
  for (int t = 0; t < 50; ++t) {
    const double x = rng.uniform();
    const double y = rng.uniform();
    CHECK(std::abs(kernel_eval(coarse, vec1(x), vec1(y)) -
                   kernel_eval(fine, vec1(x), vec1(y))) <= bound);
  }
}

TEST_CASE("spec text form round-trips") {
  const KernelSpec g = KernelSpec::gaussian(2.5);
  CHECK(KernelSpec::parse(g.format()).gamma == 2.5);
  CHECK(KernelSpec::parse(g.format()).family == KernelFamily::gaussian);
  CHECK(KernelSpec::parse(g.format()).format() == g.format());

  const KernelSpec s = KernelSpec::spline(1.25, 64);
  const KernelSpec back = KernelSpec::parse(s.format());
  CHECK(back.q == 1.25);
  CHECK(back.truncation == 64);
  CHECK(back.format() == s.format());

  CHECK(KernelSpec::parse("gaussian:gamma=0.125").gamma == 0.125);
  CHECK(KernelSpec::parse("spline:q=1,M=200").truncation == 200);
}

TEST_CASE("invalid kernel parameters are rejected") {
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::gaussian(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::spline(0.5, 10), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::spline(1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::parse("triangle:a=1"), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::parse("gaussian:g=1"), std::invalid_argument);

  const KernelSpec s = KernelSpec::spline(1.0, 10);
  Eigen::VectorXd x2(2);
  x2 << 0.1, 0.2;
  CHECK_THROWS_AS(kernel_eval(s, x2, x2), std::invalid_argument);

  const KernelSpec g = KernelSpec::gaussian(1.0);
  Eigen::VectorXd x1(1);
  x1 << 0.1;
  CHECK_THROWS_AS(kernel_eval(g, x1, x2), std::invalid_argument);
}
