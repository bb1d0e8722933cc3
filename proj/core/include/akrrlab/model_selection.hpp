#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "akrrlab/estimators.hpp"

namespace akrrlab {

// Candidate values per tuning dimension; the search walks the full Cartesian
// product. Empty vectors mean "not tuned". Values are sorted ascending and
// deduplicated on entry.
struct TuningGrid {
  std::vector<double> lambdas;
  std::vector<double> mus;
  std::vector<double> gammas;
};

std::vector<double> log_spaced(double lo, double hi, int count);
std::vector<double> default_lambdas();  // 50 points, 1e-6 .. 1e4
std::vector<double> default_mus();      // 30 points, 1e-8 .. 1e3
std::vector<double> default_gammas();   // 12 points, 0.1 .. 150

// 0.2 * m^2, where m is the lower median of the pairwise Euclidean distances
// between rows (the lower of the two central order statistics when the pair
// count is even). Needs at least two rows.
double median_bandwidth(const Eigen::MatrixXd& x);

struct CvPoint {
  double lambda = 0.0;
  double mu = 0.0;
  double gamma = 0.0;  // 0 when no bandwidth is in play (spline / linear)
  double cv_mse = 0.0;
};

struct CvOptions {
  int folds = 5;
  std::uint64_t seed = 0;
  int iterations = 100;  // backfitting passes, iterated kind only
};

struct CvResult {
  std::vector<CvPoint> curve;         // gamma-major, then mu, then lambda
  CvPoint best;                       // see selection rule on cross_validate
  std::vector<int> fold_assignment;   // row -> fold id
};

// K-fold cross-validation with a seeded uniform shuffle cut into near-equal
// blocks. Held-out error is the unweighted mean over folds of the per-fold
// mean squared prediction error. The same seed reproduces the result exactly;
// held-out fits match the public fit functions to solver precision.
//
// Selection: start from the minimizer of the curve (near-equal errors resolve
// toward larger lambda, then mu, then gamma). Then, on the chosen (gamma, mu)
// slice, if the largest-lambda point scores within 20 percent of the best
// error, that point is selected instead. Grid minimizers of held-out error
// are not consistent here: with k folds the error at a candidate carries a
// noise term whose dips grow like the error's own scale over root-n, so on
// the flat low-lambda branch the minimum is attained at wildly undersmoothed
// points with positive probability, where the true risk is far above the
// most-regularized fit. A genuine fit improvement separates from that noise
// floor as a fixed fraction of the irreducible error, which is what the
// relative margin tests. The margin is deliberately scale-free; see
// kHeaviestLambdaMargin in the implementation.
CvResult cross_validate(const Dataset& data, EstimatorKind kind,
                        const std::optional<KernelSpec>& kernel,
                        const TuningGrid& grid, const CvOptions& options = {});

// Full-data refit at the selected grid point.
FittedModel refit_best(const Dataset& data, EstimatorKind kind,
                       const std::optional<KernelSpec>& kernel, const CvResult& result,
                       const CvOptions& options = {});

// Columns: lambda,mu,gamma,cv_mse. Dimensions not tuned show the fixed value
// actually used (0 when the dimension does not exist for the estimator).
std::string cv_result_csv(const CvResult& result);

}  // namespace akrrlab
