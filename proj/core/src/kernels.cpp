#include "akrrlab/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "akrrlab/common.hpp"

namespace akrrlab {
namespace {

void validate(const KernelSpec& spec) {
  if (spec.family == KernelFamily::gaussian) {
    if (!(spec.gamma > 0.0)) {
      throw std::invalid_argument("gaussian kernel needs gamma > 0");
    }
  } else {
    if (!(spec.q > 0.5)) {
      throw std::invalid_argument("spline kernel needs q > 1/2");
    }
    if (spec.truncation < 1) {
      throw std::invalid_argument("spline kernel needs at least one series term");
    }
  }
}

std::vector<double> spline_weights(double q, int m) {
  std::vector<double> w(static_cast<std::size_t>(m));
  for (int k = 1; k <= m; ++k) {
    w[static_cast<std::size_t>(k - 1)] = std::pow(k, -2.0 * q);
  }
  return w;
}

double frac(double v) { return v - std::floor(v); }

// cos(2*pi*k*u) by the Chebyshev recurrence; error grows only linearly in k.
// u is |frac(x)-frac(y)|, the same double for both argument orders, so the
// result is symmetric bit for bit.
double spline_series(double x, double y, const std::vector<double>& w) {
  const double u = std::abs(frac(x) - frac(y));
  const double c1 = std::cos(2.0 * M_PI * u);
  double prev = 1.0;  // cos(0)
  double cur = c1;
  double acc = 1.0;
  for (const double wk : w) {
    acc += 2.0 * cur * wk;
    const double next = 2.0 * c1 * cur - prev;
    prev = cur;
    cur = next;
  }
  return acc;
}

// Shared by kernel_eval, kernel_matrix and kernel_cross so every caller sees
// identical values for identical inputs.
class Evaluator {
 public:
  Evaluator(const KernelSpec& spec, Eigen::Index dim) : spec_(spec) {
    validate(spec);
    if (spec.family == KernelFamily::spline) {
      if (dim != 1) {
        throw std::invalid_argument("spline kernel is defined for scalar inputs only");
      }
      weights_ = spline_weights(spec.q, spec.truncation);
    }
  }

  double operator()(const Eigen::MatrixXd& a, Eigen::Index i,
                    const Eigen::MatrixXd& b, Eigen::Index j) const {
    if (spec_.family == KernelFamily::gaussian) {
      return std::exp(-(a.row(i) - b.row(j)).squaredNorm() / spec_.gamma);
    }
    return spline_series(a(i, 0), b(j, 0), weights_);
  }

 private:
  KernelSpec spec_;
  std::vector<double> weights_;
};

double parse_double_field(const std::string& text, const std::string& key) {
  const auto pos = text.find(key + "=");
  if (pos == std::string::npos) {
    throw std::invalid_argument("kernel spec is missing " + key + ": " + text);
  }
  const char* begin = text.c_str() + pos + key.size() + 1;
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) {
    throw std::invalid_argument("kernel spec has a malformed " + key + ": " + text);
  }
  return v;
}

}  // namespace

KernelSpec KernelSpec::gaussian(double gamma) {
  KernelSpec s;
  s.family = KernelFamily::gaussian;
  s.gamma = gamma;
  validate(s);
  return s;
}

KernelSpec KernelSpec::spline(double q, int truncation) {
  KernelSpec s;
  s.family = KernelFamily::spline;
  s.q = q;
  s.truncation = truncation;
  validate(s);
  return s;
}

KernelSpec KernelSpec::parse(const std::string& text) {
  if (text.rfind("gaussian:", 0) == 0) {
    return gaussian(parse_double_field(text, "gamma"));
  }
  if (text.rfind("spline:", 0) == 0) {
    const double q = parse_double_field(text, "q");
    const double m = parse_double_field(text, "M");
    if (m != std::floor(m) || m < 1 || m > 1e9) {
      throw std::invalid_argument("spline truncation M must be a positive integer: " +
                                  text);
    }
    return spline(q, static_cast<int>(m));
  }
  throw std::invalid_argument("unknown kernel family in spec: " + text);
}

std::string KernelSpec::format() const {
  if (family == KernelFamily::gaussian) {
    return "gaussian:gamma=" + format_g17(gamma);
  }
  return "spline:q=" + format_g17(q) + ",M=" + std::to_string(truncation);
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("kernel_eval: input dimensions differ");
  }
  if (x.size() == 0) {
    throw std::invalid_argument("kernel_eval: empty inputs");
  }
  const Evaluator ev(spec, x.size());
  const Eigen::MatrixXd a = x.transpose();
  const Eigen::MatrixXd b = y.transpose();
  return ev(a, 0, b, 0);
}

Eigen::MatrixXd kernel_gram(const KernelSpec& spec, const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  if (n < 1 || x.cols() < 1) {
    throw std::invalid_argument("kernel_gram: need a nonempty row set");
  }
  const Evaluator ev(spec, x.cols());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = ev(x, i, x, j);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

KernelMatrix kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x) {
  KernelMatrix km;
  km.scale = 1.0 / static_cast<double>(x.rows());
  km.entries = kernel_gram(spec, x) * km.scale;
  return km;
}

Eigen::MatrixXd kernel_cross(const KernelSpec& spec, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("kernel_cross: input dimensions differ");
  }
  const Evaluator ev(spec, a.cols());
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      out(i, j) = ev(a, i, b, j);
    }
  }
  return out;
}

double spline_truncation_error(double q, int truncation) {
  if (!(q > 0.5) || truncation < 1) {
    throw std::invalid_argument("spline_truncation_error: need q > 1/2 and M >= 1");
  }
  return 2.0 * std::pow(truncation, 1.0 - 2.0 * q) / (2.0 * q - 1.0);
}

}  // namespace akrrlab
