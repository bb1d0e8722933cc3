#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "akrrlab/common.hpp"
#include "akrrlab/estimators.hpp"
#include "akrrlab/kernels.hpp"
#include "akrrlab/model_selection.hpp"
#include "akrrlab/run_config.hpp"
#include "akrrlab/simulation.hpp"
#include "akrrlab/theory.hpp"

namespace {

using namespace akrrlab;

double parse_num(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw std::invalid_argument("bad number in " + what + ": \"" + text + "\"");
  }
  return v;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') {
    s.pop_back();
  }
  return s;
}

struct CsvData {
  bool has_y = false;
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
};

// Header `y,x1..xd` (training data) or `x1..xd` (features only); every row
// numeric with the same field count as the header.
CsvData read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open " + path);
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw std::invalid_argument("empty file: " + path);
  }
  const std::vector<std::string> names = split_fields(strip_cr(header));
  CsvData out;
  out.has_y = !names.empty() && names[0] == "y";
  const std::size_t d = names.size() - (out.has_y ? 1 : 0);
  if (d == 0) {
    throw std::invalid_argument(path + ": no feature columns in header");
  }
  std::vector<double> ys;
  std::vector<double> xs;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != names.size()) {
      throw std::invalid_argument(path + " line " + std::to_string(line_no) +
                                  ": expected " + std::to_string(names.size()) +
                                  " fields, got " + std::to_string(fields.size()));
    }
    std::size_t j = 0;
    if (out.has_y) {
      ys.push_back(parse_num(fields[0], path));
      j = 1;
    }
    for (; j < fields.size(); ++j) {
      xs.push_back(parse_num(fields[j], path));
    }
  }
  const std::size_t n = xs.size() / d;
  out.x.resize(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      out.x(i, k) = xs[i * d + k];
    }
  }
  out.y.resize(out.has_y ? n : 0);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    out.y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  return out;
}

Dataset require_training_data(const std::string& path) {
  const CsvData csv = read_csv(path);
  if (!csv.has_y) {
    throw std::invalid_argument(path + ": training data needs a leading y column");
  }
  if (csv.x.rows() < 1) {
    throw std::invalid_argument(path + ": no data rows");
  }
  return Dataset{csv.x, csv.y};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << text;
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

std::optional<KernelSpec> kernel_from_text(const std::string& text) {
  if (text.empty()) {
    return std::nullopt;
  }
  return KernelSpec::parse(text);
}

// --spectrum polynomial:beta=<f> | exponential:gamma=<f> | values:<v1,v2,...>
EigenSpectrum analytic_from_text(const std::string& text, int n) {
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("spectrum must look like polynomial:beta=1");
  }
  const std::string family = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (family == "values") {
    std::vector<double> vals;
    std::size_t start = 0;
    while (start <= rest.size()) {
      std::size_t comma = rest.find(',', start);
      if (comma == std::string::npos) {
        comma = rest.size();
      }
      vals.push_back(parse_num(rest.substr(start, comma - start), "spectrum value"));
      start = comma + 1;
    }
    EigenSpectrum s;
    s.values = Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                                 static_cast<Eigen::Index>(vals.size()));
    std::sort(s.values.begin(), s.values.end(), std::greater<double>());
    s.source = SpectrumSource::analytic;
    s.n_context = n;
    return s;
  }
  const std::size_t eq = rest.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("spectrum parameter missing: " + text);
  }
  const std::string key = rest.substr(0, eq);
  const double value = parse_num(rest.substr(eq + 1), "spectrum parameter");
  if (family == "polynomial" && key == "beta") {
    return analytic_polynomial(value, n, n);
  }
  if (family == "exponential" && key == "gamma") {
    return analytic_exponential(value, n, n);
  }
  throw std::invalid_argument("unknown spectrum form: " + text);
}

struct TheoryArgs {
  std::string op;
  std::string spectrum_text;
  std::string linear_spectrum_text;
  std::string input;
  std::string kernel_text;
  std::string source = "k";
  int n = 100;
  int d = 0;
  int theorem = 0;
  double lambda = 1.0;
  double mu = 0.0;
  double delta = 0.0;
  double sigma2 = 1.0;
  double alpha_norm = -1.0;
  double f_norm = -1.0;
  std::string output;
};

int cmd_theory(const TheoryArgs& a) {
  std::optional<Dataset> data;
  std::optional<KernelMatrix> km;
  std::optional<DesignFactor> factor;
  if (!a.input.empty()) {
    data = require_training_data(a.input);
  }

  const auto empirical = [&](const std::string& source) -> EigenSpectrum {
    if (!data) {
      throw std::invalid_argument("empirical spectrum needs --input");
    }
    const int n = static_cast<int>(data->x.rows());
    if (source == "sigma") {
      if (!factor) {
        factor = factor_design(data->x);
      }
      return sigma_spectrum(*factor);
    }
    const std::optional<KernelSpec> spec = kernel_from_text(a.kernel_text);
    if (!spec) {
      throw std::invalid_argument("spectrum source " + source + " needs --kernel");
    }
    if (!km) {
      km = kernel_matrix(*spec, data->x);
    }
    if (source == "k") {
      return spectrum(km->entries, SpectrumSource::empirical_k, n);
    }
    if (!factor) {
      factor = factor_design(data->x);
    }
    if (source == "qkq") {
      const Eigen::MatrixXd qk = apply_qx(*factor, km->entries);
      const Eigen::MatrixXd v =
          apply_qx(*factor, Eigen::MatrixXd(qk.transpose()));
      return spectrum((v + v.transpose()) / 2.0, SpectrumSource::empirical_qkq, n);
    }
    if (source == "qmukqmu") {
      const Eigen::MatrixXd qk = apply_qmu(*factor, km->entries, a.mu, false);
      const Eigen::MatrixXd v =
          apply_qmu(*factor, Eigen::MatrixXd(qk.transpose()), a.mu, false);
      return spectrum((v + v.transpose()) / 2.0,
                      SpectrumSource::empirical_qmukqmu, n);
    }
    throw std::invalid_argument("unknown spectrum source: " + source);
  };

  const auto main_spectrum = [&]() -> EigenSpectrum {
    if (!a.spectrum_text.empty()) {
      return analytic_from_text(a.spectrum_text, a.n);
    }
    return empirical(a.source);
  };

  if (a.op == "critical-radius") {
    const EigenSpectrum s = main_spectrum();
    const double delta = critical_radius(s);
    const double residual = std::abs(kernel_complexity(s, delta) - delta);
    std::cout << "delta=" << format_g17(delta) << '\n'
              << "residual=" << format_g17(residual) << '\n';
    return 0;
  }
  if (a.op == "stat-dim") {
    if (!(a.delta > 0.0)) {
      throw std::invalid_argument("--op stat-dim needs --delta > 0");
    }
    std::cout << "stat_dim=" << statistical_dimension(main_spectrum(), a.delta)
              << '\n';
    return 0;
  }
  if (a.op == "variance-trace") {
    const EigenSpectrum s = main_spectrum();
    std::cout << "variance_trace=" << format_g17(variance_trace(s, a.lambda))
              << '\n'
              << "ratio_trace=" << format_g17(ratio_trace(s, a.lambda)) << '\n';
    return 0;
  }
  if (a.op == "complexity") {
    std::cout << "complexity="
              << format_g17(kernel_complexity(main_spectrum(), a.lambda)) << '\n';
    return 0;
  }
  if (a.op == "report") {
    if (a.theorem < 1 || a.theorem > 5) {
      throw std::invalid_argument("--op report needs --theorem 1..5");
    }
    // An explicit --spectrum is handed to the bound as-is; bound_report
    // rejects a source the theorem cannot use.
    EigenSpectrum kspec =
        !a.spectrum_text.empty() ? analytic_from_text(a.spectrum_text, a.n)
        : a.theorem == 1         ? empirical("k")
        : a.theorem == 2         ? empirical("qkq")
        : a.theorem == 4         ? empirical("qmukqmu")
                                 : analytic_from_text(a.spectrum_text, a.n);
    std::optional<EigenSpectrum> lspec;
    if (a.theorem == 4) {
      lspec = empirical("sigma");
    } else if (a.theorem == 5) {
      if (a.linear_spectrum_text.empty()) {
        throw std::invalid_argument("theorem 5 needs --linear-spectrum");
      }
      lspec = analytic_from_text(a.linear_spectrum_text, a.d > 0 ? a.d : a.n);
    }
    BoundOracle oracle;
    if (a.alpha_norm >= 0.0) {
      Eigen::VectorXd alpha(1);
      alpha[0] = a.alpha_norm;
      oracle.alpha = alpha;
    }
    if (a.f_norm >= 0.0) {
      oracle.f_norm = a.f_norm;
    }
    int n = a.n, d = a.d;
    BoundContext ctx;
    if (data) {
      n = static_cast<int>(data->x.rows());
      if (!factor) {
        factor = factor_design(data->x);
      }
      d = factor->rank;
      ctx.kernel = km ? &*km : nullptr;
      ctx.design = &*factor;
    }
    const BoundReport report = bound_report(
        "T" + std::to_string(a.theorem), kspec, lspec, a.lambda, a.mu, a.sigma2,
        d, n, oracle, ctx);
    const std::string csv = bound_report_csv({report});
    if (a.output.empty()) {
      std::cout << csv;
    } else {
      write_text(a.output, csv);
    }
    return 0;
  }
  throw std::invalid_argument("unknown --op: " + a.op);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel regression toolkit: adaptive kernel ridge fits, tuning, "
               "risk-bound reports, and experiment reproduction"};
  app.require_subcommand(1);
  int exit_code = 0;

  // fit ----------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "fit an estimator and write a model file");
  struct {
    std::string config, input, estimator = "akrr", kernel, output = "model.akrr";
    double lambda = 1.0, mu = 0.0;
    int iterations = 100;
    bool median_gamma = false;
  } fa;
  fit->add_option("--config", fa.config, "run config file");
  fit->add_option("--input", fa.input, "training CSV (header y,x1..xd)");
  fit->add_option("--estimator", fa.estimator,
                  "ols|linear_ridge|krr|akrr|akrr_ridge|two_step|iterated");
  fit->add_option("--kernel", fa.kernel,
                  "kernel spec, e.g. spline:q=1,M=200 or gaussian:gamma=2");
  fit->add_option("--lambda", fa.lambda, "kernel penalty weight");
  fit->add_option("--mu", fa.mu, "linear ridge penalty weight");
  fit->add_option("--iterations", fa.iterations, "backfitting passes (iterated)");
  fit->add_flag("--median-gamma", fa.median_gamma,
                "replace a gaussian kernel's gamma by the median heuristic");
  fit->add_option("--output", fa.output, "model file to write");
  fit->callback([&]() {
    if (!fa.config.empty()) {
      const RunConfig cfg = load_run_config(fa.config);
      if (fit->count("--input") == 0) fa.input = cfg.input;
      if (fit->count("--estimator") == 0) fa.estimator = cfg.kind;
      if (fit->count("--kernel") == 0) fa.kernel = cfg.kernel;
      if (fit->count("--lambda") == 0) fa.lambda = cfg.lambda;
      if (fit->count("--mu") == 0) fa.mu = cfg.mu;
      if (fit->count("--iterations") == 0) fa.iterations = cfg.iterations;
      if (fit->count("--output") == 0 && !cfg.path.empty()) fa.output = cfg.path;
    }
    if (fa.input.empty()) {
      throw std::invalid_argument("fit needs --input");
    }
    const Dataset data = require_training_data(fa.input);
    const EstimatorKind kind = parse_estimator_kind(fa.estimator);
    std::optional<KernelSpec> spec = kernel_from_text(fa.kernel);
    if (fa.median_gamma && spec && spec->family == KernelFamily::gaussian) {
      spec->gamma = median_bandwidth(data.x);
    }
    const FittedModel model =
        fit_any(data, kind, spec, fa.lambda, fa.mu, fa.iterations);
    save_model_file(model, fa.output);
    const Eigen::VectorXd fitted = predict(model, data.x);
    const double mse =
        (data.y - fitted).squaredNorm() / static_cast<double>(data.y.size());
    std::cout << "estimator=" << estimator_kind_name(kind) << '\n';
    if (model.kernel) {
      std::cout << "kernel=" << model.kernel->format() << '\n';
    }
    std::cout << "lambda=" << format_g17(model.lambda) << '\n'
              << "mu=" << format_g17(model.mu) << '\n'
              << "training_mse=" << format_g17(mse) << '\n'
              << "model=" << fa.output << '\n';
  });

  // predict ------------------------------------------------------------
  auto* predict_cmd = app.add_subcommand("predict", "predict with a model file");
  struct {
    std::string model, input, output;
  } pa;
  predict_cmd->add_option("--model", pa.model, "model file")->required();
  predict_cmd->add_option("--input", pa.input, "feature CSV (x1..xd, y column allowed)")
      ->required();
  predict_cmd->add_option("--output", pa.output, "predictions CSV (default stdout)");
  predict_cmd->callback([&]() {
    const FittedModel model = load_model_file(pa.model);
    const CsvData csv = read_csv(pa.input);
    if (csv.x.cols() != model.train_x.cols()) {
      throw std::invalid_argument(
          "feature dimension mismatch: model has " +
          std::to_string(model.train_x.cols()) + ", input has " +
          std::to_string(csv.x.cols()));
    }
    const Eigen::VectorXd yhat = predict(model, csv.x);
    std::ostringstream out;
    out << "yhat\n";
    for (Eigen::Index i = 0; i < yhat.size(); ++i) {
      out << format_g17(yhat[i]) << '\n';
    }
    if (pa.output.empty()) {
      std::cout << out.str();
    } else {
      write_text(pa.output, out.str());
    }
  });

  // tune ---------------------------------------------------------------
  auto* tune = app.add_subcommand("tune", "cross-validate over parameter grids");
  struct {
    std::string config, input, estimator = "akrr", kernel;
    std::string lambda_grid, mu_grid, gamma_grid;
    int folds = 5, iterations = 100;
    std::uint64_t seed = 0;
    bool median_gamma = false;
    std::string output, model_out;
  } ta;
  tune->add_option("--config", ta.config, "run config file");
  tune->add_option("--input", ta.input, "training CSV (header y,x1..xd)");
  tune->add_option("--estimator", ta.estimator, "estimator kind");
  tune->add_option("--kernel", ta.kernel, "kernel spec");
  tune->add_option("--lambda-grid", ta.lambda_grid,
                   "lo:hi:count-log, lo:hi:count-lin, or comma list");
  tune->add_option("--mu-grid", ta.mu_grid, "grid for the linear penalty");
  tune->add_option("--gamma-grid", ta.gamma_grid, "grid for gaussian bandwidth");
  tune->add_option("--folds", ta.folds, "cross-validation folds");
  tune->add_option("--seed", ta.seed, "fold-assignment seed");
  tune->add_option("--iterations", ta.iterations, "backfitting passes (iterated)");
  tune->add_flag("--median-gamma", ta.median_gamma,
                 "replace a gaussian kernel's gamma by the median heuristic");
  tune->add_option("--output", ta.output, "cv curve CSV (default stdout)");
  tune->add_option("--model-out", ta.model_out, "refit at the best point and save");
  tune->callback([&]() {
    if (!ta.config.empty()) {
      const RunConfig cfg = load_run_config(ta.config);
      if (tune->count("--input") == 0) ta.input = cfg.input;
      if (tune->count("--estimator") == 0) ta.estimator = cfg.kind;
      if (tune->count("--kernel") == 0) ta.kernel = cfg.kernel;
      if (tune->count("--lambda-grid") == 0) ta.lambda_grid = cfg.lambda_grid;
      if (tune->count("--mu-grid") == 0) ta.mu_grid = cfg.mu_grid;
      if (tune->count("--gamma-grid") == 0) ta.gamma_grid = cfg.gamma_grid;
      if (tune->count("--folds") == 0) ta.folds = cfg.folds;
      if (tune->count("--seed") == 0) ta.seed = cfg.cv_seed;
      if (tune->count("--iterations") == 0) ta.iterations = cfg.iterations;
      if (tune->count("--output") == 0) ta.output = cfg.path;
    }
    if (ta.input.empty()) {
      throw std::invalid_argument("tune needs --input");
    }
    const Dataset data = require_training_data(ta.input);
    const EstimatorKind kind = parse_estimator_kind(ta.estimator);
    std::optional<KernelSpec> spec = kernel_from_text(ta.kernel);
    if (ta.median_gamma && spec && spec->family == KernelFamily::gaussian) {
      spec->gamma = median_bandwidth(data.x);
    }
    TuningGrid grid;
    grid.lambdas = parse_grid(ta.lambda_grid);
    grid.mus = parse_grid(ta.mu_grid);
    grid.gammas = parse_grid(ta.gamma_grid);
    CvOptions options;
    options.folds = ta.folds;
    options.seed = ta.seed;
    options.iterations = ta.iterations;
    const CvResult result = cross_validate(data, kind, spec, grid, options);
    const std::string csv = cv_result_csv(result);
    if (ta.output.empty()) {
      std::cout << csv;
    } else {
      write_text(ta.output, csv);
    }
    std::cout << "best_lambda=" << format_g17(result.best.lambda) << '\n'
              << "best_mu=" << format_g17(result.best.mu) << '\n'
              << "best_gamma=" << format_g17(result.best.gamma) << '\n'
              << "best_cv_mse=" << format_g17(result.best.cv_mse) << '\n';
    if (!ta.model_out.empty()) {
      const FittedModel model = refit_best(data, kind, spec, result, options);
      save_model_file(model, ta.model_out);
      std::cout << "model=" << ta.model_out << '\n';
    }
  });

  // theory -------------------------------------------------------------
  auto* theory = app.add_subcommand("theory", "spectra, complexity, and risk bounds");
  TheoryArgs th;
  theory->add_option("--op", th.op,
                     "critical-radius|stat-dim|variance-trace|complexity|report")
      ->required();
  theory->add_option("--spectrum", th.spectrum_text,
                     "polynomial:beta=<f>, exponential:gamma=<f>, or values:<v1,v2,...>");
  theory->add_option("--linear-spectrum", th.linear_spectrum_text,
                     "analytic spectrum for the linear part (theorem 5)");
  theory->add_option("--input", th.input, "training CSV for empirical spectra");
  theory->add_option("--kernel", th.kernel_text, "kernel spec for empirical spectra");
  theory->add_option("--source", th.source, "k|qkq|qmukqmu|sigma");
  theory->add_option("--n", th.n, "length / sample size for analytic spectra");
  theory->add_option("--d", th.d, "linear dimension for analytic bounds");
  theory->add_option("--theorem", th.theorem, "1..5 (report op)");
  theory->add_option("--lambda", th.lambda, "kernel penalty weight");
  theory->add_option("--mu", th.mu, "linear ridge penalty weight");
  theory->add_option("--delta", th.delta, "threshold for stat-dim");
  theory->add_option("--sigma2", th.sigma2, "noise variance");
  theory->add_option("--alpha-norm", th.alpha_norm, "candidate linear coefficient norm");
  theory->add_option("--f-norm", th.f_norm, "candidate kernel-part norm");
  theory->add_option("--output", th.output, "report CSV (default stdout)");
  theory->callback([&]() { exit_code = cmd_theory(th); });

  // reproduce ----------------------------------------------------------
  auto* rep = app.add_subcommand("reproduce", "run a registered experiment");
  struct {
    std::string config, id, scale = "desk", out = "experiments";
    std::uint64_t seed = 1;
  } ra;
  rep->add_option("--config", ra.config, "run config file");
  rep->add_option("id", ra.id,
                  "fig1_left|fig1_right|fig2|tab1|tab2|fig3|fig4|"
                  "app_fig_akrr_tkrr|app_tab1|app_tab2");
  rep->add_option("--scale", ra.scale, "desk|full");
  rep->add_option("--seed", ra.seed, "master seed");
  rep->add_option("--out", ra.out, "output directory");
  rep->callback([&]() {
    if (!ra.config.empty()) {
      const RunConfig cfg = load_run_config(ra.config);
      if (rep->count("id") == 0) ra.id = cfg.id;
      if (rep->count("--scale") == 0) ra.scale = cfg.scale;
      if (rep->count("--seed") == 0) ra.seed = cfg.seed;
      if (rep->count("--out") == 0 && !cfg.path.empty()) ra.out = cfg.path;
    }
    if (ra.id.empty()) {
      throw std::invalid_argument("reproduce needs an experiment id");
    }
    const ExperimentResult result = reproduce(ra.id, ra.scale, ra.seed, ra.out);
    for (const std::string& path : result.csv_paths) {
      std::cout << "wrote " << path << '\n';
    }
    for (const ExperimentCheck& check : result.checks) {
      std::cout << (check.passed ? "PASS " : "FAIL ") << check.name << ": "
                << check.detail << '\n';
    }
    if (!result.all_passed()) {
      exit_code = 4;
    }
  });

  // config -------------------------------------------------------------
  auto* config = app.add_subcommand("config", "config file utilities");
  config->require_subcommand(1);
  auto* dump = config->add_subcommand("dump", "print the normalized config");
  std::string dump_path;
  dump->add_option("--config", dump_path, "config file (omit for defaults)");
  dump->callback([&]() {
    const RunConfig cfg =
        dump_path.empty() ? RunConfig{} : load_run_config(dump_path);
    std::cout << dump_run_config(cfg);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return exit_code;
}
