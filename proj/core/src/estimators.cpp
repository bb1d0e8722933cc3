#include "akrrlab/estimators.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "akrrlab/common.hpp"

namespace akrrlab {
namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and nonnegative");
  }
}

void check_mu(double mu) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("mu must be finite and nonnegative");
  }
}

FittedModel base_model(EstimatorKind kind, const Dataset& data) {
  FittedModel m;
  m.kind = kind;
  m.alpha = Eigen::VectorXd::Zero(data.x.cols());
  m.dual = Eigen::VectorXd::Zero(data.x.rows());
  m.train_x = data.x;
  return m;
}

Eigen::MatrixXd symmetrized(Eigen::MatrixXd m) {
  m = (m + m.transpose()) / 2.0;
  return m;
}

}  // namespace

void Dataset::validate() const {
  if (x.rows() < 1 || x.cols() < 1) {
    throw std::invalid_argument("dataset: design matrix is empty");
  }
  if (y.size() != x.rows()) {
    throw std::invalid_argument("dataset: response length does not match row count");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("dataset: non-finite values");
  }
}

std::string estimator_kind_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::ols: return "ols";
    case EstimatorKind::linear_ridge: return "linear_ridge";
    case EstimatorKind::krr: return "krr";
    case EstimatorKind::akrr: return "akrr";
    case EstimatorKind::akrr_ridge: return "akrr_ridge";
    case EstimatorKind::two_step: return "two_step";
    case EstimatorKind::iterated: return "iterated";
  }
  throw std::invalid_argument("unknown estimator kind");
}

EstimatorKind parse_estimator_kind(const std::string& name) {
  for (EstimatorKind k :
       {EstimatorKind::ols, EstimatorKind::linear_ridge, EstimatorKind::krr,
        EstimatorKind::akrr, EstimatorKind::akrr_ridge, EstimatorKind::two_step,
        EstimatorKind::iterated}) {
    if (estimator_kind_name(k) == name) {
      return k;
    }
  }
  throw std::invalid_argument("unknown estimator kind: " + name);
}

bool estimator_uses_kernel(EstimatorKind kind) {
  return kind != EstimatorKind::ols && kind != EstimatorKind::linear_ridge;
}

FittedModel fit_ols(const Dataset& data) {
  data.validate();
  FittedModel m = base_model(EstimatorKind::ols, data);
  m.alpha = lsq_coef(factor_design(data.x), data.y);
  return m;
}

FittedModel fit_linear_ridge(const Dataset& data, double mu) {
  data.validate();
  // Unlike the doubly penalized variant, mu = 0 is not a valid ridge here:
  // the estimator is only defined with a strictly positive linear penalty.
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("fit_linear_ridge: mu must be positive");
  }
  FittedModel m = base_model(EstimatorKind::linear_ridge, data);
  m.mu = mu;
  m.alpha = ridge_coef(factor_design(data.x), data.y, mu);
  return m;
}

FittedModel fit_krr(const Dataset& data, const KernelSpec& kernel, double lambda) {
  data.validate();
  check_lambda(lambda);
  FittedModel m = base_model(EstimatorKind::krr, data);
  m.lambda = lambda;
  m.kernel = kernel;
  const KernelMatrix km = kernel_matrix(kernel, data.x);
  m.dual = solve_spd(km.entries, data.y, lambda);
  return m;
}

FittedModel fit_akrr(const Dataset& data, const KernelSpec& kernel, double lambda) {
  data.validate();
  check_lambda(lambda);
  FittedModel m = base_model(EstimatorKind::akrr, data);
  m.lambda = lambda;
  m.kernel = kernel;
  const KernelMatrix km = kernel_matrix(kernel, data.x);
  const DesignFactor f = factor_design(data.x);
  const Eigen::MatrixXd v = symmetrized(apply_qx(f, Eigen::MatrixXd(
                                                        apply_qx(f, km.entries)
                                                            .transpose())));
  m.dual = solve_spd(v, apply_qx(f, data.y), lambda);
  m.alpha = lsq_coef(f, data.y - km.entries * m.dual);
  return m;
}

FittedModel fit_akrr_ridge(const Dataset& data, const KernelSpec& kernel,
                           double lambda, double mu) {
  data.validate();
  check_lambda(lambda);
  check_mu(mu);
  FittedModel m = base_model(EstimatorKind::akrr_ridge, data);
  m.lambda = lambda;
  m.mu = mu;
  m.kernel = kernel;
  const KernelMatrix km = kernel_matrix(kernel, data.x);
  const DesignFactor f = factor_design(data.x);
  const Eigen::MatrixXd w = symmetrized(
      apply_qmu(f, Eigen::MatrixXd(apply_qmu(f, km.entries, mu, true).transpose()), mu,
                true));
  const Eigen::VectorXd b = solve_spd(w, apply_qmu(f, data.y, mu, true), lambda);
  m.dual = apply_qmu(f, b, mu, true);
  m.alpha = ridge_coef(f, data.y - km.entries * m.dual, mu);
  return m;
}

FittedModel fit_two_step(const Dataset& data, const KernelSpec& kernel, double lambda) {
  data.validate();
  check_lambda(lambda);
  FittedModel m = base_model(EstimatorKind::two_step, data);
  m.lambda = lambda;
  m.kernel = kernel;
  const KernelMatrix km = kernel_matrix(kernel, data.x);
  const DesignFactor f = factor_design(data.x);
  m.alpha = lsq_coef(f, data.y);
  m.dual = solve_spd(km.entries, data.y - data.x * m.alpha, lambda);
  return m;
}

FittedModel fit_iterated(const Dataset& data, const KernelSpec& kernel, double lambda,
                         int max_iterations) {
  data.validate();
  check_lambda(lambda);
  if (max_iterations < 1) {
    throw std::invalid_argument("fit_iterated: need at least one pass");
  }
  FittedModel m = base_model(EstimatorKind::iterated, data);
  m.lambda = lambda;
  m.kernel = kernel;
  const KernelMatrix km = kernel_matrix(kernel, data.x);
  const DesignFactor f = factor_design(data.x);

  // The kernel system matrix is fixed across passes; factor it once.
  Eigen::MatrixXd sys = km.entries;
  sys.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(sys);
  if (llt.info() != Eigen::Success) {
    throw NumericError("fit_iterated: kernel system is not positive definite");
  }

  const double ytol = 1e-10 * data.y.norm();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(data.y.size());
  Eigen::VectorXd fit_prev = Eigen::VectorXd::Zero(data.y.size());
  for (int t = 1; t <= max_iterations; ++t) {
    m.alpha = lsq_coef(f, data.y - g);
    const Eigen::VectorXd linear = data.x * m.alpha;
    m.dual = llt.solve(data.y - linear);
    g = km.entries * m.dual;
    m.iterations = t;
    const Eigen::VectorXd fit = linear + g;
    if (t > 1 && (fit - fit_prev).norm() <= ytol) {
      break;
    }
    fit_prev = fit;
  }
  return m;
}

FittedModel fit_any(const Dataset& data, EstimatorKind kind,
                    const std::optional<KernelSpec>& kernel, double lambda, double mu,
                    int iterations) {
  if (estimator_uses_kernel(kind) && !kernel) {
    throw std::invalid_argument(estimator_kind_name(kind) + " needs a kernel spec");
  }
  if (!estimator_uses_kernel(kind) && kernel) {
    throw std::invalid_argument(estimator_kind_name(kind) +
                                " does not take a kernel spec");
  }
  switch (kind) {
    case EstimatorKind::ols: return fit_ols(data);
    case EstimatorKind::linear_ridge: return fit_linear_ridge(data, mu);
    case EstimatorKind::krr: return fit_krr(data, *kernel, lambda);
    case EstimatorKind::akrr: return fit_akrr(data, *kernel, lambda);
    case EstimatorKind::akrr_ridge: return fit_akrr_ridge(data, *kernel, lambda, mu);
    case EstimatorKind::two_step: return fit_two_step(data, *kernel, lambda);
    case EstimatorKind::iterated:
      return fit_iterated(data, *kernel, lambda, iterations);
  }
  throw std::invalid_argument("unknown estimator kind");
}

Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& x_new) {
  if (x_new.cols() != model.train_x.cols()) {
    throw std::invalid_argument("predict: feature dimension does not match the model");
  }
  Eigen::VectorXd out = x_new * model.alpha;
  if (model.kernel.has_value() && model.dual.size() > 0) {
    const Eigen::MatrixXd cross = kernel_cross(*model.kernel, x_new, model.train_x);
    out += cross * model.dual / static_cast<double>(model.train_x.rows());
  }
  return out;
}

void save_model(const FittedModel& model, std::ostream& out) {
  out << "akrrlab-model v1 kind=" << estimator_kind_name(model.kind)
      << " n=" << model.train_x.rows() << " d=" << model.train_x.cols()
      << " lambda=" << format_g17(model.lambda) << " mu=" << format_g17(model.mu)
      << " kernel=" << (model.kernel ? model.kernel->format() : std::string("none"))
      << "\n";
  out << "alpha:";
  for (Eigen::Index i = 0; i < model.alpha.size(); ++i) {
    out << " " << format_g17(model.alpha[i]);
  }
  out << "\ndual:";
  for (Eigen::Index i = 0; i < model.dual.size(); ++i) {
    out << " " << format_g17(model.dual[i]);
  }
  out << "\n";
  for (Eigen::Index i = 0; i < model.train_x.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.train_x.cols(); ++j) {
      out << (j ? " " : "") << format_g17(model.train_x(i, j));
    }
    out << "\n";
  }
  if (!out) {
    throw NumericError("save_model: write failed");
  }
}

namespace {

std::string expect_token(std::istringstream& line, const std::string& key,
                         const std::string& context) {
  std::string tok;
  if (!(line >> tok) || tok.rfind(key + "=", 0) != 0) {
    throw std::invalid_argument("malformed model " + context + " (expected " + key +
                                "=...)");
  }
  return tok.substr(key.size() + 1);
}

double parse_double(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) {
      throw std::invalid_argument(text);
    }
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed model " + context + ": " + text);
  }
}

}  // namespace

FittedModel load_model(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) {
    throw std::invalid_argument("malformed model file: missing header");
  }
  std::istringstream hs(header);
  std::string magic, version;
  if (!(hs >> magic >> version) || magic != "akrrlab-model" || version != "v1") {
    throw std::invalid_argument("malformed model file: bad magic/version line");
  }
  FittedModel m;
  m.kind = parse_estimator_kind(expect_token(hs, "kind", "header"));
  long n = 0;
  long d = 0;
  try {
    n = std::stol(expect_token(hs, "n", "header"));
    d = std::stol(expect_token(hs, "d", "header"));
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed model file: bad dimensions");
  }
  if (n < 1 || d < 1) {
    throw std::invalid_argument("malformed model file: bad dimensions");
  }
  m.lambda = parse_double(expect_token(hs, "lambda", "header"), "lambda");
  m.mu = parse_double(expect_token(hs, "mu", "header"), "mu");
  const std::string kspec = expect_token(hs, "kernel", "header");
  if (kspec != "none") {
    m.kernel = KernelSpec::parse(kspec);
  }

  auto read_vector = [&in](const std::string& tag, Eigen::Index len) {
    std::string line;
    if (!std::getline(in, line) || line.rfind(tag + ":", 0) != 0) {
      throw std::invalid_argument("malformed model file: missing " + tag + " line");
    }
    std::istringstream ls(line.substr(tag.size() + 1));
    Eigen::VectorXd v(len);
    for (Eigen::Index i = 0; i < len; ++i) {
      if (!(ls >> v[i])) {
        throw std::invalid_argument("malformed model file: short " + tag + " line");
      }
    }
    double extra;
    if (ls >> extra) {
      throw std::invalid_argument("malformed model file: trailing values on " + tag);
    }
    return v;
  };
  m.alpha = read_vector("alpha", d);
  m.dual = read_vector("dual", n);

  m.train_x.resize(n, d);
  for (long i = 0; i < n; ++i) {
    std::string line;
    if (!std::getline(in, line)) {
      throw std::invalid_argument("malformed model file: missing training rows");
    }
    std::istringstream ls(line);
    for (long j = 0; j < d; ++j) {
      if (!(ls >> m.train_x(i, j))) {
        throw std::invalid_argument("malformed model file: short training row");
      }
    }
  }
  return m;
}

void save_model_file(const FittedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::invalid_argument("cannot open model file for writing: " + path);
  }
  save_model(model, out);
}

FittedModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open model file: " + path);
  }
  return load_model(in);
}

}  // namespace akrrlab
