// Microbenchmarks for the hot paths: Gram assembly, the closed-form fits,
// a cross-validation sweep, and the spectral utilities.
#include <benchmark/benchmark.h>

#include <cmath>

#include <Eigen/Dense>

#include "akrrlab/estimators.hpp"
#include "akrrlab/kernels.hpp"
#include "akrrlab/model_selection.hpp"
#include "akrrlab/rng.hpp"
#include "akrrlab/theory.hpp"

namespace {

using namespace akrrlab;

Dataset make_data(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Dataset data;
  data.x.resize(n, d);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      data.x(i, j) = rng.uniform();
    }
    data.y[i] = 2.0 * data.x(i, 0) + std::sin(6.0 * data.x(i, 0)) + rng.normal();
  }
  return data;
}

void bm_kernel_matrix_spline(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Dataset data = make_data(n, 1, 1);
  const KernelSpec ks = KernelSpec::spline(2.0, 200);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel_matrix(ks, data.x).entries.data());
  }
}
BENCHMARK(bm_kernel_matrix_spline)->Arg(100)->Arg(200)->Arg(400);

void bm_kernel_matrix_gaussian(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Dataset data = make_data(n, 3, 2);
  const KernelSpec ks = KernelSpec::gaussian(0.8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel_matrix(ks, data.x).entries.data());
  }
}
BENCHMARK(bm_kernel_matrix_gaussian)->Arg(100)->Arg(400);

void bm_fit_krr(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Dataset data = make_data(n, 1, 3);
  const KernelSpec ks = KernelSpec::spline(2.0, 200);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_krr(data, ks, 0.1).dual.data());
  }
}
BENCHMARK(bm_fit_krr)->Arg(100)->Arg(200)->Arg(400);

void bm_fit_akrr(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Dataset data = make_data(n, 1, 4);
  const KernelSpec ks = KernelSpec::spline(2.0, 200);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_akrr(data, ks, 0.1).dual.data());
  }
}
BENCHMARK(bm_fit_akrr)->Arg(100)->Arg(200)->Arg(400);

void bm_fit_akrr_ridge(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Dataset data = make_data(n, 3, 5);
  const KernelSpec ks = KernelSpec::gaussian(0.8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_akrr_ridge(data, ks, 0.1, 0.01).dual.data());
  }
}
BENCHMARK(bm_fit_akrr_ridge)->Arg(100)->Arg(400);

void bm_cross_validate(benchmark::State& state) {
  const Dataset data = make_data(100, 1, 6);
  const KernelSpec ks = KernelSpec::spline(1.0, 100);
  TuningGrid grid;
  grid.lambdas = log_spaced(1e-4, 10.0, 10);
  CvOptions options;
  options.seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cross_validate(data, EstimatorKind::akrr, ks, grid, options).best.cv_mse);
  }
}
BENCHMARK(bm_cross_validate);

void bm_spectrum(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Dataset data = make_data(n, 1, 8);
  const Eigen::MatrixXd kb = kernel_matrix(KernelSpec::spline(2.0, 200), data.x).entries;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        spectrum(kb, SpectrumSource::empirical_k, n).values.data());
  }
}
BENCHMARK(bm_spectrum)->Arg(100)->Arg(200);

void bm_critical_radius(benchmark::State& state) {
  const EigenSpectrum spec = analytic_polynomial(1.0, 10000, 1000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(critical_radius(spec));
  }
}
BENCHMARK(bm_critical_radius);

}  // namespace

BENCHMARK_MAIN();
