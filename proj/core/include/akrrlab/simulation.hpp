#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "akrrlab/estimators.hpp"
#include "akrrlab/model_selection.hpp"
#include "akrrlab/rng.hpp"

namespace akrrlab {

// Synthetic regression designs used by the Monte Carlo experiments. Every
// generator mixes a linear trend with an interpolation-space component whose
// weight is the alpha knob; alpha = 0 leaves a purely linear signal.
enum class DgpKind { spline1d, gaussian3d, highdim };

struct DgpSpec {
  DgpKind kind = DgpKind::spline1d;
  double alpha = 0.0;
  // highdim only: equicorrelation profile rho^{|j-k|/s} and input dimension.
  double rho = 0.9;
  double s = 6.0;
  int dim = 20;
  // Negative means the kind default (1.5 for spline1d, 1 otherwise).
  double noise = -1.0;

  int input_dim() const;
  double noise_sd() const;
};

std::string dgp_kind_name(DgpKind kind);
DgpKind parse_dgp_kind(const std::string& name);

struct SimData {
  Eigen::MatrixXd x;
  Eigen::VectorXd signal;  // noiseless regression function at the rows of x
  Eigen::VectorXd y;       // signal plus gaussian noise
};

// Draws are split across the two generators so the design realization is
// unchanged when only the noise stream advances differently.
SimData generate(const DgpSpec& spec, int n, Rng& x_rng, Rng& noise_rng);

// Symmetric square root S of the highdim covariance Sigma_jk = rho^(|j-k|/s),
// so S S' = Sigma; the eigendecomposition route keeps S exactly symmetric.
Eigen::MatrixXd highdim_covariance_root(double rho, double s, int dim);

// How a kernel estimator obtains its gaussian bandwidth inside a replication.
enum class GammaRule { none, fixed, median, cv };

struct EstimatorConfig {
  std::string label;
  EstimatorKind kind = EstimatorKind::ols;
  std::optional<KernelSpec> kernel;
  GammaRule gamma_rule = GammaRule::none;
  std::vector<double> lambdas;  // empty: default grid (ignored for ols)
  std::vector<double> mus;      // empty: default grid where mu is tuned
  std::vector<double> gammas;   // cv rule only; empty: default grid
};

struct RiskOptions {
  int reps = 30;
  int n_test = 500;
  std::uint64_t seed = 1;
  int folds = 5;
  int iterations = 100;
  bool retune = true;       // false: tune on replication 0, reuse afterwards
  bool noisy_risk = false;  // true: score against noisy test responses
  int threads = 0;          // 0: AKRRLAB_THREADS, else hardware concurrency
};

struct RepRecord {
  int rep = 0;
  double test_risk = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  bool failed = false;
};

struct RiskSummary {
  std::string estimator;
  std::string kernel_label;  // none, spline, gaussian_fixed, gaussian_med, gaussian_cv
  double q_or_gamma = 0.0;   // spline q, or the gaussian gamma of replication 0
  std::vector<RepRecord> records;
  double mean_risk = 0.0;
  double se_risk = 0.0;
  double mean_log_lambda = 0.0;
  int failures = 0;
};

// Paired Monte Carlo prediction risk: every estimator sees the same
// replication data, and replication r is a pure function of (seed, r), so
// results are identical for any thread count.
std::vector<RiskSummary> mc_prediction_risk(const DgpSpec& dgp, int n,
                                            const std::vector<EstimatorConfig>& estimators,
                                            const RiskOptions& options);

// Absolute slope of the least squares line of log(risk) against log(n).
double convergence_slope(const std::vector<double>& ns,
                         const std::vector<double>& risks);

struct ExperimentCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentResult {
  std::string id;
  std::vector<std::string> csv_paths;
  std::vector<ExperimentCheck> checks;
  bool all_passed() const;
};

// Registered experiments: fig1_left, fig1_right, fig2, tab1, tab2, fig3,
// fig4, app_fig_akrr_tkrr, app_tab1, app_tab2. Scale is "desk" (reduced replication
// counts and grids that finish on a laptop) or "full".
std::vector<std::string> experiment_ids();
ExperimentResult reproduce(const std::string& id, const std::string& scale,
                           std::uint64_t seed, const std::string& out_dir);

}  // namespace akrrlab
