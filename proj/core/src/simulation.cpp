#include "akrrlab/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "akrrlab/common.hpp"

namespace akrrlab {

int DgpSpec::input_dim() const {
  switch (kind) {
    case DgpKind::spline1d:
      return 1;
    case DgpKind::gaussian3d:
      return 3;
    case DgpKind::highdim:
      return dim;
  }
  throw std::invalid_argument("unknown dgp kind");
}

double DgpSpec::noise_sd() const {
  if (noise >= 0) {
    return noise;
  }
  return kind == DgpKind::spline1d ? 1.5 : 1.0;
}


std::string dgp_kind_name(DgpKind kind) {
  switch (kind) {
    case DgpKind::spline1d:
      return "spline1d";
    case DgpKind::gaussian3d:
      return "gaussian3d";
    case DgpKind::highdim:
      return "highdim";
  }
  throw std::invalid_argument("unknown dgp kind");
}

DgpKind parse_dgp_kind(const std::string& name) {
  if (name == "spline1d") {
    return DgpKind::spline1d;
  }
  if (name == "gaussian3d") {
    return DgpKind::gaussian3d;
  }
  if (name == "highdim") {
    return DgpKind::highdim;
  }
  throw std::invalid_argument("unknown dgp kind: " + name);
}

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::MatrixXd covariance_sqrt(double rho, double s, int d) {
  if (!(rho > 0.0) || !(rho < 1.0) || !(s > 0.0)) {
    throw std::invalid_argument("highdim needs rho in (0,1) and s > 0");
  }
  Eigen::MatrixXd sigma(d, d);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      sigma(j, k) = std::pow(rho, std::abs(j - k) / s);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.info() != Eigen::Success) {
    throw NumericError("covariance eigendecomposition failed");
  }
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

double signal_at(const DgpSpec& spec, const Eigen::RowVectorXd& x) {
  switch (spec.kind) {
    case DgpKind::spline1d:
      return 2.0 * x[0] + spec.alpha * std::sin(2.0 * kPi * x[0]);
    case DgpKind::gaussian3d:
      return 2.0 * x[0] - 1.5 * x[1] + 0.5 * x[2] +
             spec.alpha * (std::sin(kPi * x[0]) + std::cos(kPi * x[1] * x[2]));
    case DgpKind::highdim: {
      const int d = static_cast<int>(x.size());
      double lin = 0.0, trig = 0.0, inter = 0.0;
      for (int j = 0; j < d; ++j) {
        lin += (j % 2 == 0 ? 1.0 : -1.0) * x[j];
        trig += std::sin(kPi * x[j]) + 0.5 * std::cos(2.0 * kPi * x[j]);
      }
      for (int j = 0; j + 1 < d; ++j) {
        inter += std::sin(x[j] * x[j + 1]);
      }
      const double rd = std::sqrt(static_cast<double>(d));
      return lin / rd +
             spec.alpha * (trig / rd + inter / (2.0 * std::sqrt(d - 1.0)));
    }
  }
  throw std::invalid_argument("unknown dgp kind");
}

}  // namespace

SimData generate(const DgpSpec& spec, int n, Rng& x_rng, Rng& noise_rng) {
  if (n < 1) {
    throw std::invalid_argument("generate: n must be positive");
  }
  if (spec.kind == DgpKind::highdim && spec.dim < 2) {
    throw std::invalid_argument("generate: highdim needs dim >= 2");
  }
  const int d = spec.input_dim();
  SimData out;
  out.x.resize(n, d);
  switch (spec.kind) {
    case DgpKind::spline1d:
      for (int i = 0; i < n; ++i) {
        out.x(i, 0) = x_rng.uniform();
      }
      break;
    case DgpKind::gaussian3d:
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
          out.x(i, j) = x_rng.uniform(-2.0, 2.0);
        }
      }
      break;
    case DgpKind::highdim: {
      const Eigen::MatrixXd root = covariance_sqrt(spec.rho, spec.s, d);
      Eigen::MatrixXd z(n, d);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
          z(i, j) = x_rng.normal();
        }
      }
      out.x = z * root;
      break;
    }
  }
  out.signal.resize(n);
  for (int i = 0; i < n; ++i) {
    out.signal[i] = signal_at(spec, out.x.row(i));
  }
  const double sd = spec.noise_sd();
  out.y = out.signal;
  for (int i = 0; i < n; ++i) {
    out.y[i] += sd * noise_rng.normal();
  }
  return out;
}
Eigen::MatrixXd highdim_covariance_root(double rho, double s, int dim) {
  return covariance_sqrt(rho, s, dim);
}


namespace {

bool tunes_mu_for(EstimatorKind kind) {
  return kind == EstimatorKind::akrr_ridge || kind == EstimatorKind::linear_ridge;
}

void validate_config(const EstimatorConfig& cfg) {
  const bool uses_kernel = estimator_uses_kernel(cfg.kind);
  if (uses_kernel != cfg.kernel.has_value()) {
    throw std::invalid_argument("estimator config: kernel presence does not match " +
                                estimator_kind_name(cfg.kind));
  }
  const bool gaussian =
      cfg.kernel && cfg.kernel->family == KernelFamily::gaussian;
  if (cfg.gamma_rule != GammaRule::none && !gaussian) {
    throw std::invalid_argument(
        "estimator config: bandwidth rule needs a gaussian kernel");
  }
  if (gaussian && cfg.gamma_rule == GammaRule::none) {
    throw std::invalid_argument(
        "estimator config: gaussian kernel needs a bandwidth rule");
  }
}

std::string kernel_label_for(const EstimatorConfig& cfg) {
  if (!cfg.kernel) {
    return "none";
  }
  if (cfg.kernel->family == KernelFamily::spline) {
    return "spline";
  }
  switch (cfg.gamma_rule) {
    case GammaRule::median:
      return "gaussian_med";
    case GammaRule::cv:
      return "gaussian_cv";
    default:
      return "gaussian_fixed";
  }
}

TuningGrid grid_for(const EstimatorConfig& cfg) {
  TuningGrid g;
  if (cfg.kind != EstimatorKind::linear_ridge) {
    g.lambdas = cfg.lambdas.empty() ? default_lambdas() : cfg.lambdas;
  }
  if (tunes_mu_for(cfg.kind)) {
    g.mus = cfg.mus.empty() ? default_mus() : cfg.mus;
  }
  if (cfg.gamma_rule == GammaRule::cv) {
    g.gammas = cfg.gammas.empty() ? default_gammas() : cfg.gammas;
  }
  return g;
}

struct TunedParams {
  std::optional<KernelSpec> spec;
  double lambda = 0.0;
  double mu = 0.0;
};

TunedParams tune_estimator(const Dataset& ds, const EstimatorConfig& cfg,
                           const RiskOptions& options, std::uint64_t cv_seed) {
  TunedParams out;
  out.spec = cfg.kernel;
  if (out.spec && out.spec->family == KernelFamily::gaussian &&
      cfg.gamma_rule == GammaRule::median) {
    out.spec->gamma = median_bandwidth(ds.x);
  }
  if (cfg.kind == EstimatorKind::ols) {
    return out;
  }
  CvOptions cv_options;
  cv_options.folds = options.folds;
  cv_options.seed = cv_seed;
  cv_options.iterations = options.iterations;
  const CvResult cv =
      cross_validate(ds, cfg.kind, out.spec, grid_for(cfg), cv_options);
  out.lambda = cv.best.lambda;
  out.mu = cv.best.mu;
  if (out.spec && out.spec->family == KernelFamily::gaussian &&
      cfg.gamma_rule == GammaRule::cv) {
    out.spec->gamma = cv.best.gamma;
  }
  return out;
}

int resolve_threads(int requested, int reps) {
  int t = requested > 0 ? requested
                        : static_cast<int>(std::thread::hardware_concurrency());
  if (t < 1) {
    t = 1;
  }
  if (const char* env = std::getenv("AKRRLAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0 && cap < t) {
      t = static_cast<int>(cap);
    }
  }
  return std::min(t, std::max(1, reps));
}

}  // namespace

std::vector<RiskSummary> mc_prediction_risk(const DgpSpec& dgp, int n,
                                            const std::vector<EstimatorConfig>& estimators,
                                            const RiskOptions& options) {
  if (n < 2) {
    throw std::invalid_argument("mc_prediction_risk: n must be at least 2");
  }
  if (options.reps < 1 || options.n_test < 1) {
    throw std::invalid_argument("mc_prediction_risk: reps and n_test must be positive");
  }
  if (estimators.empty()) {
    throw std::invalid_argument("mc_prediction_risk: no estimators given");
  }
  for (const EstimatorConfig& cfg : estimators) {
    validate_config(cfg);
  }

  const std::size_t ne = estimators.size();
  std::vector<std::vector<RepRecord>> records(ne);
  for (std::size_t j = 0; j < ne; ++j) {
    records[j].assign(static_cast<std::size_t>(options.reps), RepRecord{});
  }

  // Replication r is a pure function of (options.seed, r): the design, noise,
  // and test draws come from fixed sub-streams of the mixed per-rep seed.
  const auto rep_data = [&](int rep, SimData& train, SimData& test) {
    const std::uint64_t rep_seed =
        Rng::mix(options.seed, static_cast<std::uint64_t>(rep));
    Rng x_rng = Rng::stream(rep_seed, 1);
    Rng noise_rng = Rng::stream(rep_seed, 2);
    Rng test_x_rng = Rng::stream(rep_seed, 3);
    Rng test_noise_rng = Rng::stream(rep_seed, 4);
    train = generate(dgp, n, x_rng, noise_rng);
    test = generate(dgp, options.n_test, test_x_rng, test_noise_rng);
    return rep_seed;
  };

  std::vector<TunedParams> frozen(ne);
  if (!options.retune) {
    SimData train, test;
    const std::uint64_t rep_seed = rep_data(0, train, test);
    const Dataset ds{train.x, train.y};
    for (std::size_t j = 0; j < ne; ++j) {
      frozen[j] = tune_estimator(ds, estimators[j], options,
                                 Rng::mix(rep_seed, 0x5eed));
    }
  }

  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= options.reps) {
        return;
      }
      SimData train, test;
      std::uint64_t rep_seed = 0;
      bool data_ok = true;
      try {
        rep_seed = rep_data(rep, train, test);
      } catch (const std::exception&) {
        data_ok = false;
      }
      for (std::size_t j = 0; j < ne; ++j) {
        RepRecord rec;
        rec.rep = rep;
        if (!data_ok) {
          rec.failed = true;
          rec.test_risk = std::numeric_limits<double>::quiet_NaN();
          records[j][static_cast<std::size_t>(rep)] = rec;
          continue;
        }
        try {
          const Dataset ds{train.x, train.y};
          TunedParams params;
          if (options.retune) {
            params = tune_estimator(ds, estimators[j], options,
                                    Rng::mix(rep_seed, 0x5eed));
          } else {
            params = frozen[j];
          }
          const FittedModel model =
              fit_any(ds, estimators[j].kind, params.spec, params.lambda,
                      params.mu, options.iterations);
          rec.lambda = params.lambda;
          rec.mu = params.mu;
          if (model.kernel && model.kernel->family == KernelFamily::gaussian) {
            rec.gamma = model.kernel->gamma;
          }
          const Eigen::VectorXd pred = predict(model, test.x);
          const Eigen::VectorXd& target =
              options.noisy_risk ? test.y : test.signal;
          rec.test_risk =
              (pred - target).squaredNorm() / static_cast<double>(options.n_test);
          if (!std::isfinite(rec.test_risk)) {
            rec.failed = true;
          }
        } catch (const std::exception&) {
          rec.failed = true;
          rec.test_risk = std::numeric_limits<double>::quiet_NaN();
        }
        records[j][static_cast<std::size_t>(rep)] = rec;
      }
    }
  };

  const int threads = resolve_threads(options.threads, options.reps);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    for (int t = 1; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    worker();
    for (std::thread& th : pool) {
      th.join();
    }
  }

  std::vector<RiskSummary> out(ne);
  for (std::size_t j = 0; j < ne; ++j) {
    const EstimatorConfig& cfg = estimators[j];
    RiskSummary& s = out[j];
    s.estimator = cfg.label.empty() ? estimator_kind_name(cfg.kind) : cfg.label;
    s.kernel_label = kernel_label_for(cfg);
    s.records = std::move(records[j]);
    double sum = 0.0, log_lambda_sum = 0.0;
    int ok = 0, lam = 0;
    bool q_set = false;
    for (const RepRecord& rec : s.records) {
      if (rec.failed) {
        continue;
      }
      sum += rec.test_risk;
      ++ok;
      if (rec.lambda > 0.0) {
        log_lambda_sum += std::log(rec.lambda);
        ++lam;
      }
      if (!q_set && cfg.kernel) {
        s.q_or_gamma = cfg.kernel->family == KernelFamily::spline
                           ? cfg.kernel->q
                           : rec.gamma;
        q_set = true;
      }
    }
    s.failures = options.reps - ok;
    if (ok > 0) {
      s.mean_risk = sum / ok;
      double ssd = 0.0;
      for (const RepRecord& rec : s.records) {
        if (!rec.failed) {
          const double d = rec.test_risk - s.mean_risk;
          ssd += d * d;
        }
      }
      s.se_risk = ok > 1 ? std::sqrt(ssd / (ok - 1) / ok) : 0.0;
    } else {
      s.mean_risk = std::numeric_limits<double>::quiet_NaN();
      s.se_risk = std::numeric_limits<double>::quiet_NaN();
    }
    s.mean_log_lambda = lam > 0 ? log_lambda_sum / lam : 0.0;
  }
  return out;
}

double convergence_slope(const std::vector<double>& ns,
                         const std::vector<double>& risks) {
  if (ns.size() != risks.size() || ns.size() < 2) {
    throw std::invalid_argument("convergence_slope: need matching lists, length >= 2");
  }
  const std::size_t m = ns.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(ns[i] > 0.0) || !(risks[i] > 0.0) || !std::isfinite(risks[i])) {
      throw std::invalid_argument("convergence_slope: entries must be positive and finite");
    }
    lx[i] = std::log(ns[i]);
    ly[i] = std::log(risks[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) {
    throw std::invalid_argument("convergence_slope: sample sizes must differ");
  }
  return std::abs(sxy / sxx);
}

bool ExperimentResult::all_passed() const {
  for (const ExperimentCheck& c : checks) {
    if (!c.passed) {
      return false;
    }
  }
  return true;
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

struct Block {
  DgpSpec dgp;
  int n = 0;
  std::vector<RiskSummary> summaries;
};

struct Ctx {
  bool full = false;
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  std::uint64_t block_counter = 0;
};

Block run_block(Ctx& ctx, const DgpSpec& dgp, int n,
                const std::vector<EstimatorConfig>& cfgs, RiskOptions opt) {
  opt.seed = Rng::mix(ctx.seed, 0xb10c0000ULL + ctx.block_counter++);
  Block b;
  b.dgp = dgp;
  b.n = n;
  b.summaries = mc_prediction_risk(dgp, n, cfgs, opt);
  return b;
}

std::string sim_csv(const std::string& experiment, const Ctx& ctx,
                    const std::string& params, const std::vector<Block>& blocks) {
  std::ostringstream out;
  out << "# experiment=" << experiment << '\n'
      << "# scale=" << (ctx.full ? "full" : "desk") << '\n'
      << "# seed=" << ctx.seed << '\n'
      << "# rng=" << kRngName << '\n'
      << "# version=" << kVersion << '\n'
      << "# params=" << params << '\n'
      << "experiment,estimator,kernel,q_or_gamma,alpha,n,rep,lambda,mu,test_risk\n";
  for (const Block& b : blocks) {
    for (const RiskSummary& s : b.summaries) {
      for (const RepRecord& rec : s.records) {
        if (rec.failed) {
          continue;
        }
        const double q_or_gamma =
            s.kernel_label == "spline"
                ? s.q_or_gamma
                : (s.kernel_label == "none" ? 0.0 : rec.gamma);
        out << experiment << ',' << s.estimator << ',' << s.kernel_label << ','
            << format_g17(q_or_gamma) << ',' << format_g17(b.dgp.alpha) << ','
            << b.n << ',' << rec.rep << ',' << format_g17(rec.lambda) << ','
            << format_g17(rec.mu) << ',' << format_g17(rec.test_risk) << '\n';
      }
    }
  }
  return out.str();
}

std::string write_csv(const Ctx& ctx, const std::string& filename,
                      const std::string& text) {
  const std::filesystem::path path = ctx.dir / filename;
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << text;
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
  return path.string();
}

const RiskSummary& find_summary(const std::vector<Block>& blocks, double alpha,
                                int n, const std::string& estimator,
                                const std::string& kernel_label, double q = -1.0) {
  for (const Block& b : blocks) {
    if (b.n != n || b.dgp.alpha != alpha) {
      continue;
    }
    for (const RiskSummary& s : b.summaries) {
      if (s.estimator != estimator || s.kernel_label != kernel_label) {
        continue;
      }
      if (q >= 0.0 && std::abs(s.q_or_gamma - q) > 1e-9 * std::max(1.0, q)) {
        continue;
      }
      return s;
    }
  }
  throw std::runtime_error("experiment summary not found: " + estimator + "/" +
                           kernel_label + " at alpha=" + fmt6(alpha));
}

void add_check(ExperimentResult& r, const std::string& name, bool passed,
               const std::string& detail) {
  r.checks.push_back(ExperimentCheck{name, passed, detail});
}

void add_failure_count_check(ExperimentResult& r, const std::vector<Block>& blocks) {
  int failures = 0, total = 0;
  for (const Block& b : blocks) {
    for (const RiskSummary& s : b.summaries) {
      failures += s.failures;
      total += static_cast<int>(s.records.size());
    }
  }
  add_check(r, "all_replications_succeeded", failures == 0,
            std::to_string(failures) + " of " + std::to_string(total) +
                " estimator replications failed");
}

EstimatorConfig make_ols() {
  EstimatorConfig c;
  c.kind = EstimatorKind::ols;
  c.label = "ols";
  return c;
}

EstimatorConfig make_lrr(std::vector<double> mus) {
  EstimatorConfig c;
  c.kind = EstimatorKind::linear_ridge;
  c.label = "linear_ridge";
  c.mus = std::move(mus);
  return c;
}

EstimatorConfig make_spline(EstimatorKind kind, double q,
                            std::vector<double> lambdas = {}) {
  EstimatorConfig c;
  c.kind = kind;
  c.label = estimator_kind_name(kind);
  c.kernel = KernelSpec::spline(q);
  c.lambdas = std::move(lambdas);
  return c;
}

EstimatorConfig make_gauss(EstimatorKind kind, GammaRule rule, double gamma,
                           std::vector<double> lambdas = {},
                           std::vector<double> mus = {},
                           std::vector<double> gammas = {}) {
  EstimatorConfig c;
  c.kind = kind;
  c.label = estimator_kind_name(kind);
  c.kernel = KernelSpec::gaussian(gamma);
  c.gamma_rule = rule;
  c.lambdas = std::move(lambdas);
  c.mus = std::move(mus);
  c.gammas = std::move(gammas);
  return c;
}

const std::vector<double> kSplineQs = {0.7, 1.0, 3.0};
const std::vector<double> kFixedGammas = {0.5, 1.0, 100.0};

std::vector<double> alpha_steps(double lo, double hi, double step) {
  std::vector<double> out;
  for (double a = lo; a <= hi + 1e-12; a += step) {
    out.push_back(a);
  }
  out.back() = hi;
  return out;
}

RiskOptions base_options(const Ctx& ctx, int desk_reps) {
  RiskOptions opt;
  opt.reps = ctx.full ? 100 : desk_reps;
  opt.n_test = 500;
  return opt;
}

ExperimentResult run_fig1_left(Ctx& ctx) {
  ExperimentResult r;
  r.id = "fig1_left";
  const RiskOptions opt = base_options(ctx, 30);
  std::vector<EstimatorConfig> cfgs{make_ols()};
  for (double q : kSplineQs) {
    cfgs.push_back(make_spline(EstimatorKind::krr, q));
  }
  for (double q : kSplineQs) {
    cfgs.push_back(make_spline(EstimatorKind::akrr, q));
  }
  std::vector<Block> blocks;
  for (double alpha : {0.0, 0.5, 1.0, 1.5}) {
    DgpSpec dgp;
    dgp.kind = DgpKind::spline1d;
    dgp.alpha = alpha;
    blocks.push_back(run_block(ctx, dgp, 200, cfgs, opt));
  }
  r.csv_paths.push_back(write_csv(
      ctx, "fig1_left.csv",
      sim_csv("fig1_left", ctx,
              "dgp=spline1d;n=200;alphas=0|0.5|1|1.5;reps=" +
                  std::to_string(opt.reps) +
                  ";n_test=500;folds=5;estimators=ols,krr@q0.7|1|3,akrr@q0.7|1|3",
              blocks)));

  const double ols0 = find_summary(blocks, 0.0, 200, "ols", "none").mean_risk;
  double max_akrr = 0.0;
  double min_krr = std::numeric_limits<double>::infinity();
  for (double q : kSplineQs) {
    const double akrr_q =
        find_summary(blocks, 0.0, 200, "akrr", "spline", q).mean_risk;
    const double krr_q =
        find_summary(blocks, 0.0, 200, "krr", "spline", q).mean_risk;
    max_akrr = std::max(max_akrr, akrr_q);
    min_krr = std::min(min_krr, krr_q);
    add_check(r, "alpha0_akrr_q" + fmt6(q) + "_within_1.1_ols",
              akrr_q <= 1.1 * ols0,
              "akrr=" + fmt6(akrr_q) + " ols=" + fmt6(ols0));
  }
  add_check(r, "alpha0_every_akrr_below_every_krr", max_akrr < min_krr,
            "max akrr=" + fmt6(max_akrr) + " min krr=" + fmt6(min_krr));
  const double akrr3 =
      find_summary(blocks, 1.5, 200, "akrr", "spline", 3.0).mean_risk;
  const double krr3 =
      find_summary(blocks, 1.5, 200, "krr", "spline", 3.0).mean_risk;
  const double ols15 = find_summary(blocks, 1.5, 200, "ols", "none").mean_risk;
  add_check(r, "alpha1.5_akrr_q3_below_krr_q3", akrr3 < krr3,
            "akrr=" + fmt6(akrr3) + " krr=" + fmt6(krr3));
  add_check(r, "alpha1.5_akrr_q3_below_ols", akrr3 < ols15,
            "akrr=" + fmt6(akrr3) + " ols=" + fmt6(ols15));
  add_failure_count_check(r, blocks);
  return r;
}

ExperimentResult run_fig1_right(Ctx& ctx) {
  ExperimentResult r;
  r.id = "fig1_right";
  const RiskOptions opt = base_options(ctx, 30);
  std::vector<EstimatorConfig> cfgs{make_ols()};
  for (double g : kFixedGammas) {
    cfgs.push_back(make_gauss(EstimatorKind::krr, GammaRule::fixed, g));
  }
  cfgs.push_back(make_gauss(EstimatorKind::akrr, GammaRule::median, 1.0));
  std::vector<Block> blocks;
  for (double alpha : {0.0, 0.5, 1.0, 1.5}) {
    DgpSpec dgp;
    dgp.kind = DgpKind::gaussian3d;
    dgp.alpha = alpha;
    blocks.push_back(run_block(ctx, dgp, 400, cfgs, opt));
  }
  r.csv_paths.push_back(write_csv(
      ctx, "fig1_right.csv",
      sim_csv("fig1_right", ctx,
              "dgp=gaussian3d;n=400;alphas=0|0.5|1|1.5;reps=" +
                  std::to_string(opt.reps) +
                  ";n_test=500;folds=5;estimators=ols,krr@gamma0.5|1|100,akrr@med",
              blocks)));

  const double ols0 = find_summary(blocks, 0.0, 400, "ols", "none").mean_risk;
  const double akrr0 =
      find_summary(blocks, 0.0, 400, "akrr", "gaussian_med").mean_risk;
  add_check(r, "alpha0_akrr_within_1.1_ols", akrr0 <= 1.1 * ols0,
            "akrr=" + fmt6(akrr0) + " ols=" + fmt6(ols0));
  for (double g : kFixedGammas) {
    const double krr_g =
        find_summary(blocks, 0.0, 400, "krr", "gaussian_fixed", g).mean_risk;
    add_check(r, "alpha0_akrr_below_krr_gamma" + fmt6(g), akrr0 < krr_g,
              "akrr=" + fmt6(akrr0) + " krr=" + fmt6(krr_g));
  }
  add_failure_count_check(r, blocks);
  return r;
}

// Shared by fig2 (risk curves) and tab1 (slope table): prediction risk on a
// doubling n grid, pure-linear signal at desk scale.
ExperimentResult run_spline_rates(Ctx& ctx, const std::string& id, int desk_reps) {
  ExperimentResult r;
  r.id = id;
  const RiskOptions opt = base_options(ctx, desk_reps);
  std::vector<int> ns = {100, 200, 400, 800};
  if (ctx.full) {
    ns.push_back(1600);
  }
  const std::vector<double> alphas =
      ctx.full ? std::vector<double>{0.0, 0.5, 1.0, 1.5} : std::vector<double>{0.0};
  std::vector<EstimatorConfig> cfgs{make_ols()};
  for (double q : kSplineQs) {
    cfgs.push_back(make_spline(EstimatorKind::krr, q));
  }
  for (double q : kSplineQs) {
    cfgs.push_back(make_spline(EstimatorKind::akrr, q));
  }
  std::vector<Block> blocks;
  for (double alpha : alphas) {
    for (int n : ns) {
      DgpSpec dgp;
      dgp.kind = DgpKind::spline1d;
      dgp.alpha = alpha;
      blocks.push_back(run_block(ctx, dgp, n, cfgs, opt));
    }
  }
  std::string ns_text;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    ns_text += (i ? "|" : "") + std::to_string(ns[i]);
  }
  r.csv_paths.push_back(write_csv(
      ctx, id + ".csv",
      sim_csv(id, ctx,
              "dgp=spline1d;ns=" + ns_text + ";alphas=" +
                  (ctx.full ? "0|0.5|1|1.5" : "0") +
                  ";reps=" + std::to_string(opt.reps) +
                  ";n_test=500;folds=5;estimators=ols,krr@q0.7|1|3,akrr@q0.7|1|3",
              blocks)));

  const auto slope_of = [&](const std::string& est, const std::string& kl,
                            double q) {
    std::vector<double> xs, ys;
    for (int n : ns) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(find_summary(blocks, 0.0, n, est, kl, q).mean_risk);
    }
    return convergence_slope(xs, ys);
  };
  const double ols_slope = slope_of("ols", "none", -1.0);
  add_check(r, "alpha0_ols_slope_in_0.85_1.15",
            ols_slope >= 0.85 && ols_slope <= 1.15, "slope=" + fmt6(ols_slope));
  const double akrr3_slope = slope_of("akrr", "spline", 3.0);
  add_check(r, "alpha0_akrr_q3_slope_in_0.80_1.20",
            akrr3_slope >= 0.80 && akrr3_slope <= 1.20,
            "slope=" + fmt6(akrr3_slope));
  for (double q : kSplineQs) {
    const double s = slope_of("krr", "spline", q);
    add_check(r, "alpha0_krr_q" + fmt6(q) + "_slope_in_0.45_0.85",
              s >= 0.45 && s <= 0.85, "slope=" + fmt6(s));
  }
  add_failure_count_check(r, blocks);
  return r;
}

ExperimentResult run_tab2(Ctx& ctx) {
  ExperimentResult r;
  r.id = "tab2";
  const RiskOptions opt = base_options(ctx, 30);
  std::vector<EstimatorConfig> cfgs;
  for (double q : kSplineQs) {
    cfgs.push_back(make_spline(EstimatorKind::krr, q));
  }
  for (double q : kSplineQs) {
    cfgs.push_back(make_spline(EstimatorKind::akrr, q));
  }
  std::vector<Block> blocks;
  for (double alpha : {0.0, 0.5, 1.0, 1.5}) {
    DgpSpec dgp;
    dgp.kind = DgpKind::spline1d;
    dgp.alpha = alpha;
    blocks.push_back(run_block(ctx, dgp, 400, cfgs, opt));
  }
  r.csv_paths.push_back(write_csv(
      ctx, "tab2.csv",
      sim_csv("tab2", ctx,
              "dgp=spline1d;n=400;alphas=0|0.5|1|1.5;reps=" +
                  std::to_string(opt.reps) +
                  ";n_test=500;folds=5;estimators=krr@q0.7|1|3,akrr@q0.7|1|3",
              blocks)));

  for (double q : kSplineQs) {
    const double akrr0 =
        find_summary(blocks, 0.0, 400, "akrr", "spline", q).mean_log_lambda;
    const double krr0 =
        find_summary(blocks, 0.0, 400, "krr", "spline", q).mean_log_lambda;
    add_check(r, "alpha0_loglambda_gap_q" + fmt6(q) + "_at_least_2",
              akrr0 - krr0 >= 2.0,
              "akrr=" + fmt6(akrr0) + " krr=" + fmt6(krr0));
    const double akrr15 =
        find_summary(blocks, 1.5, 400, "akrr", "spline", q).mean_log_lambda;
    add_check(r, "akrr_loglambda_alpha0_above_alpha1.5_q" + fmt6(q),
              akrr0 > akrr15, "alpha0=" + fmt6(akrr0) + " alpha1.5=" + fmt6(akrr15));
  }
  add_failure_count_check(r, blocks);
  return r;
}

ExperimentResult run_fig3(Ctx& ctx) {
  ExperimentResult r;
  r.id = "fig3";
  const RiskOptions opt = base_options(ctx, 30);
  const std::vector<double> alphas =
      ctx.full ? alpha_steps(0.0, 1.5, 0.125) : alpha_steps(0.0, 1.5, 0.25);
  std::vector<EstimatorConfig> cfgs{make_ols()};
  for (double q : kSplineQs) {
    cfgs.push_back(make_spline(EstimatorKind::krr, q));
  }
  for (double q : kSplineQs) {
    cfgs.push_back(make_spline(EstimatorKind::akrr, q));
  }
  std::vector<Block> blocks;
  for (double alpha : alphas) {
    DgpSpec dgp;
    dgp.kind = DgpKind::spline1d;
    dgp.alpha = alpha;
    blocks.push_back(run_block(ctx, dgp, 200, cfgs, opt));
  }
  r.csv_paths.push_back(write_csv(
      ctx, "fig3.csv",
      sim_csv("fig3", ctx,
              "dgp=spline1d;n=200;alphas=0..1.5step" +
                  std::string(ctx.full ? "0.125" : "0.25") +
                  ";reps=" + std::to_string(opt.reps) +
                  ";n_test=500;folds=5;estimators=ols,krr@q0.7|1|3,akrr@q0.7|1|3",
              blocks)));
  add_failure_count_check(r, blocks);
  return r;
}

ExperimentResult run_fig4(Ctx& ctx) {
  ExperimentResult r;
  r.id = "fig4";
  const RiskOptions opt = base_options(ctx, 30);
  const std::vector<double> alphas =
      ctx.full ? alpha_steps(0.0, 1.5, 0.25) : std::vector<double>{0.0, 0.5, 1.0, 1.5};
  const std::vector<double> cv_gammas =
      ctx.full ? default_gammas() : log_spaced(0.1, 150.0, 6);

  std::vector<EstimatorConfig> fixed_cfgs{make_ols()};
  for (double g : kFixedGammas) {
    fixed_cfgs.push_back(make_gauss(EstimatorKind::krr, GammaRule::fixed, g));
  }
  for (double g : kFixedGammas) {
    fixed_cfgs.push_back(make_gauss(EstimatorKind::akrr, GammaRule::fixed, g));
  }
  std::vector<EstimatorConfig> adaptive_cfgs{make_ols()};
  adaptive_cfgs.push_back(make_gauss(EstimatorKind::krr, GammaRule::median, 1.0));
  adaptive_cfgs.push_back(make_gauss(EstimatorKind::akrr, GammaRule::median, 1.0));
  adaptive_cfgs.push_back(
      make_gauss(EstimatorKind::krr, GammaRule::cv, 1.0, {}, {}, cv_gammas));
  adaptive_cfgs.push_back(
      make_gauss(EstimatorKind::akrr, GammaRule::cv, 1.0, {}, {}, cv_gammas));

  std::vector<Block> fixed_blocks, adaptive_blocks;
  for (double alpha : alphas) {
    DgpSpec dgp;
    dgp.kind = DgpKind::gaussian3d;
    dgp.alpha = alpha;
    fixed_blocks.push_back(run_block(ctx, dgp, 400, fixed_cfgs, opt));
    adaptive_blocks.push_back(run_block(ctx, dgp, 400, adaptive_cfgs, opt));
  }
  const std::string alpha_text = ctx.full ? "0..1.5step0.25" : "0|0.5|1|1.5";
  r.csv_paths.push_back(write_csv(
      ctx, "fig4_fixed.csv",
      sim_csv("fig4_fixed", ctx,
              "dgp=gaussian3d;n=400;alphas=" + alpha_text +
                  ";reps=" + std::to_string(opt.reps) +
                  ";n_test=500;folds=5;estimators=ols,krr@gamma0.5|1|100,akrr@gamma0.5|1|100",
              fixed_blocks)));
  r.csv_paths.push_back(write_csv(
      ctx, "fig4_adaptive.csv",
      sim_csv("fig4_adaptive", ctx,
              "dgp=gaussian3d;n=400;alphas=" + alpha_text +
                  ";reps=" + std::to_string(opt.reps) +
                  ";n_test=500;folds=5;gamma_grid=" +
                  std::to_string(cv_gammas.size()) +
                  "pt;estimators=ols,krr@med,akrr@med,krr@cv,akrr@cv",
              adaptive_blocks)));
  add_failure_count_check(r, fixed_blocks);
  add_failure_count_check(r, adaptive_blocks);
  return r;
}

ExperimentResult run_app_fig(Ctx& ctx) {
  ExperimentResult r;
  r.id = "app_fig_akrr_tkrr";
  const RiskOptions opt = base_options(ctx, 30);
  const std::vector<double> alphas =
      ctx.full ? alpha_steps(0.0, 2.0, 0.4) : std::vector<double>{0.0, 1.0, 2.0};
  std::vector<EstimatorConfig> cfgs;
  cfgs.push_back(make_gauss(EstimatorKind::akrr, GammaRule::median, 1.0));
  cfgs.push_back(make_gauss(EstimatorKind::two_step, GammaRule::median, 1.0));
  if (ctx.full) {
    cfgs.push_back(make_gauss(EstimatorKind::akrr, GammaRule::cv, 1.0));
    cfgs.push_back(make_gauss(EstimatorKind::two_step, GammaRule::cv, 1.0));
  }
  std::vector<Block> blocks;
  for (double alpha : alphas) {
    DgpSpec dgp;
    dgp.kind = DgpKind::highdim;
    dgp.alpha = alpha;
    dgp.rho = 0.9;
    dgp.s = 6.0;
    dgp.dim = 20;
    blocks.push_back(run_block(ctx, dgp, 400, cfgs, opt));
  }
  r.csv_paths.push_back(write_csv(
      ctx, "app_fig_akrr_tkrr.csv",
      sim_csv("app_fig_akrr_tkrr", ctx,
              "dgp=highdim;rho=0.9;s=6;d=20;n=400;alphas=" +
                  std::string(ctx.full ? "0..2step0.4" : "0|1|2") +
                  ";reps=" + std::to_string(opt.reps) +
                  ";n_test=500;folds=5;estimators=akrr@med,two_step@med" +
                  std::string(ctx.full ? ",akrr@cv,two_step@cv" : ""),
              blocks)));

  const double akrr2 =
      find_summary(blocks, 2.0, 400, "akrr", "gaussian_med").mean_risk;
  const double tkrr2 =
      find_summary(blocks, 2.0, 400, "two_step", "gaussian_med").mean_risk;
  add_check(r, "alpha2_akrr_at_most_two_step", akrr2 <= tkrr2,
            "akrr=" + fmt6(akrr2) + " two_step=" + fmt6(tkrr2));
  add_failure_count_check(r, blocks);
  return r;
}

ExperimentResult run_app_tab(Ctx& ctx, const std::string& id, double rho, double s,
                             bool checked) {
  ExperimentResult r;
  r.id = id;
  RiskOptions opt = base_options(ctx, 30);
  opt.folds = ctx.full ? 5 : 3;
  const std::vector<double> alphas =
      ctx.full ? alpha_steps(0.0, 2.0, 0.4) : std::vector<double>{0.0, 2.0};
  const std::vector<double> lambdas =
      ctx.full ? default_lambdas() : log_spaced(1e-6, 1e4, 25);
  const std::vector<double> mus =
      ctx.full ? default_mus() : log_spaced(1e-8, 1e3, 8);
  const std::vector<double> gammas =
      ctx.full ? default_gammas() : log_spaced(0.1, 150.0, 6);

  std::vector<EstimatorConfig> cfgs{make_ols(), make_lrr(mus)};
  cfgs.push_back(make_gauss(EstimatorKind::krr, GammaRule::cv, 1.0, lambdas, {}, gammas));
  cfgs.push_back(make_gauss(EstimatorKind::akrr, GammaRule::cv, 1.0, lambdas, {}, gammas));
  cfgs.push_back(
      make_gauss(EstimatorKind::akrr_ridge, GammaRule::cv, 1.0, lambdas, mus, gammas));
  cfgs.push_back(make_gauss(EstimatorKind::krr, GammaRule::median, 1.0, lambdas));
  cfgs.push_back(make_gauss(EstimatorKind::akrr, GammaRule::median, 1.0, lambdas));
  cfgs.push_back(
      make_gauss(EstimatorKind::akrr_ridge, GammaRule::median, 1.0, lambdas, mus));

  std::vector<Block> blocks;
  for (double alpha : alphas) {
    DgpSpec dgp;
    dgp.kind = DgpKind::highdim;
    dgp.alpha = alpha;
    dgp.rho = rho;
    dgp.s = s;
    dgp.dim = 50;
    blocks.push_back(run_block(ctx, dgp, 600, cfgs, opt));
  }
  r.csv_paths.push_back(write_csv(
      ctx, id + ".csv",
      sim_csv(id, ctx,
              "dgp=highdim;rho=" + fmt6(rho) + ";s=" + fmt6(s) +
                  ";d=50;n=600;alphas=" +
                  std::string(ctx.full ? "0..2step0.4" : "0|2") +
                  ";reps=" + std::to_string(opt.reps) + ";n_test=500;folds=" +
                  std::to_string(opt.folds) + ";lambda_grid=" +
                  std::to_string(lambdas.size()) + "pt;mu_grid=" +
                  std::to_string(mus.size()) + "pt;gamma_grid=" +
                  std::to_string(gammas.size()) +
                  "pt;estimators=ols,linear_ridge,krr@cv,akrr@cv,akrr_ridge@cv,"
                  "krr@med,akrr@med,akrr_ridge@med",
              blocks)));

  if (checked) {
    const double ols0 = find_summary(blocks, 0.0, 600, "ols", "none").mean_risk;
    const double lrr0 =
        find_summary(blocks, 0.0, 600, "linear_ridge", "none").mean_risk;
    add_check(r, "alpha0_lrr_below_ols", lrr0 < ols0,
              "lrr=" + fmt6(lrr0) + " ols=" + fmt6(ols0));
    const double ridge2 =
        find_summary(blocks, 2.0, 600, "akrr_ridge", "gaussian_cv").mean_risk;
    const double krr2 =
        find_summary(blocks, 2.0, 600, "krr", "gaussian_cv").mean_risk;
    const double lrr2 =
        find_summary(blocks, 2.0, 600, "linear_ridge", "none").mean_risk;
    add_check(r, "alpha2_akrr_ridge_within_1.1_krr", ridge2 <= 1.1 * krr2,
              "akrr_ridge=" + fmt6(ridge2) + " krr=" + fmt6(krr2));
    add_check(r, "alpha2_akrr_ridge_below_half_lrr", ridge2 < 0.5 * lrr2,
              "akrr_ridge=" + fmt6(ridge2) + " lrr=" + fmt6(lrr2));
  }
  add_failure_count_check(r, blocks);
  return r;
}

}  // namespace

std::vector<std::string> experiment_ids() {
  return {"fig1_left", "fig1_right", "fig2",   "tab1",
          "tab2",      "fig3",       "fig4",   "app_fig_akrr_tkrr",
          "app_tab1",  "app_tab2"};
}

ExperimentResult reproduce(const std::string& id, const std::string& scale,
                           std::uint64_t seed, const std::string& out_dir) {
  if (scale != "desk" && scale != "full") {
    throw std::invalid_argument("scale must be desk or full");
  }
  Ctx ctx;
  ctx.full = scale == "full";
  ctx.seed = seed;
  ctx.dir = out_dir;
  std::filesystem::create_directories(ctx.dir);
  if (id == "fig1_left") {
    return run_fig1_left(ctx);
  }
  if (id == "fig1_right") {
    return run_fig1_right(ctx);
  }
  if (id == "fig2") {
    return run_spline_rates(ctx, "fig2", 30);
  }
  if (id == "tab1") {
    return run_spline_rates(ctx, "tab1", 50);
  }
  if (id == "tab2") {
    return run_tab2(ctx);
  }
  if (id == "fig3") {
    return run_fig3(ctx);
  }
  if (id == "fig4") {
    return run_fig4(ctx);
  }
  if (id == "app_fig_akrr_tkrr") {
    return run_app_fig(ctx);
  }
  if (id == "app_tab1") {
    return run_app_tab(ctx, "app_tab1", 0.9, 6.0, true);
  }
  if (id == "app_tab2") {
    return run_app_tab(ctx, "app_tab2", 0.6, 1.0, false);
  }
  throw std::invalid_argument("unknown experiment id: " + id);
}

}  // namespace akrrlab
