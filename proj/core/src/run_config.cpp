#include "akrrlab/run_config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "akrrlab/common.hpp"
#include "akrrlab/estimators.hpp"
#include "akrrlab/kernels.hpp"
#include "akrrlab/model_selection.hpp"

namespace akrrlab {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
    ++b;
  }
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
    --e;
  }
  return s.substr(b, e - b);
}

double parse_double_value(const std::string& value, const std::string& key) {
  const std::string v = trim(value);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x)) {
    throw std::invalid_argument("config: bad number for " + key + ": " + value);
  }
  return x;
}

long long parse_int_value(const std::string& value, const std::string& key) {
  const std::string v = trim(value);
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw std::invalid_argument("config: bad integer for " + key + ": " + value);
  }
  return x;
}

std::uint64_t parse_u64_value(const std::string& value, const std::string& key) {
  const std::string v = trim(value);
  if (v.empty() || v[0] == '-') {
    throw std::invalid_argument("config: bad seed for " + key + ": " + value);
  }
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) {
    throw std::invalid_argument("config: bad seed for " + key + ": " + value);
  }
  return static_cast<std::uint64_t>(x);
}

std::string resolve_path(const std::string& value, const std::string& base_dir) {
  if (value.empty() || base_dir.empty()) {
    return value;
  }
  const std::filesystem::path p(value);
  if (p.is_absolute()) {
    return value;
  }
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& base_dir) {
  RunConfig out;
  std::istringstream in(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section != "data" && section != "estimator" && section != "tuning" &&
          section != "experiment" && section != "output") {
        throw std::invalid_argument("config: unknown section [" + section + "]");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qual = section + "." + key;
    if (qual == "data.input") {
      out.input = resolve_path(value, base_dir);
    } else if (qual == "estimator.kind") {
      out.kind = value;
    } else if (qual == "estimator.kernel") {
      out.kernel = value;
    } else if (qual == "estimator.lambda") {
      out.lambda = parse_double_value(value, qual);
    } else if (qual == "estimator.mu") {
      out.mu = parse_double_value(value, qual);
    } else if (qual == "estimator.iterations") {
      out.iterations = static_cast<int>(parse_int_value(value, qual));
    } else if (qual == "tuning.lambda_grid") {
      out.lambda_grid = value;
    } else if (qual == "tuning.mu_grid") {
      out.mu_grid = value;
    } else if (qual == "tuning.gamma_grid") {
      out.gamma_grid = value;
    } else if (qual == "tuning.folds") {
      out.folds = static_cast<int>(parse_int_value(value, qual));
    } else if (qual == "tuning.cv_seed") {
      out.cv_seed = parse_u64_value(value, qual);
    } else if (qual == "experiment.id") {
      out.id = value;
    } else if (qual == "experiment.scale") {
      out.scale = value;
    } else if (qual == "experiment.seed") {
      out.seed = parse_u64_value(value, qual);
    } else if (qual == "output.path") {
      out.path = resolve_path(value, base_dir);
    } else {
      throw std::invalid_argument("config: unknown key " + qual);
    }
  }

  parse_estimator_kind(out.kind);  // rejects unknown estimator names
  if (!out.kernel.empty()) {
    out.kernel = KernelSpec::parse(out.kernel).format();
  }
  parse_grid(out.lambda_grid);
  parse_grid(out.mu_grid);
  parse_grid(out.gamma_grid);
  if (out.scale != "desk" && out.scale != "full") {
    throw std::invalid_argument("config: experiment.scale must be desk or full");
  }
  return out;
}

RunConfig load_run_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) {
    throw std::invalid_argument("config: cannot open " + file);
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(),
                          std::filesystem::path(file).parent_path().string());
}

std::string dump_run_config(const RunConfig& config) {
  std::ostringstream out;
  out << "[data]\n"
      << "input = " << config.input << "\n\n"
      << "[estimator]\n"
      << "kind = " << config.kind << '\n'
      << "kernel = " << config.kernel << '\n'
      << "lambda = " << format_g17(config.lambda) << '\n'
      << "mu = " << format_g17(config.mu) << '\n'
      << "iterations = " << config.iterations << "\n\n"
      << "[tuning]\n"
      << "lambda_grid = " << config.lambda_grid << '\n'
      << "mu_grid = " << config.mu_grid << '\n'
      << "gamma_grid = " << config.gamma_grid << '\n'
      << "folds = " << config.folds << '\n'
      << "cv_seed = " << config.cv_seed << "\n\n"
      << "[experiment]\n"
      << "id = " << config.id << '\n'
      << "scale = " << config.scale << '\n'
      << "seed = " << config.seed << "\n\n"
      << "[output]\n"
      << "path = " << config.path << '\n';
  return out.str();
}

std::vector<double> parse_grid(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) {
    return {};
  }
  const auto bad = [&](const std::string& why) {
    return std::invalid_argument("grid \"" + text + "\": " + why);
  };
  if (t.find(':') != std::string::npos) {
    // lo:hi:count-log or lo:hi:count-lin
    const std::size_t c1 = t.find(':');
    const std::size_t c2 = t.find(':', c1 + 1);
    if (c2 == std::string::npos || t.find(':', c2 + 1) != std::string::npos) {
      throw bad("expected lo:hi:count-log or lo:hi:count-lin");
    }
    const double lo = parse_double_value(t.substr(0, c1), "grid lo");
    const double hi = parse_double_value(t.substr(c1 + 1, c2 - c1 - 1), "grid hi");
    std::string tail = trim(t.substr(c2 + 1));
    bool log_scale = true;
    if (tail.size() > 4 && tail.substr(tail.size() - 4) == "-log") {
      tail = tail.substr(0, tail.size() - 4);
    } else if (tail.size() > 4 && tail.substr(tail.size() - 4) == "-lin") {
      log_scale = false;
      tail = tail.substr(0, tail.size() - 4);
    } else {
      throw bad("count must end in -log or -lin");
    }
    const long long count = parse_int_value(tail, "grid count");
    if (count < 1 || count > 1000000) {
      throw bad("count out of range");
    }
    if (log_scale) {
      return log_spaced(lo, hi, static_cast<int>(count));
    }
    if (!(hi >= lo)) {
      throw bad("need hi >= lo");
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    if (count == 1) {
      out[0] = lo;
      return out;
    }
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (long long i = 0; i < count; ++i) {
      out[static_cast<std::size_t>(i)] = lo + step * static_cast<double>(i);
    }
    out.back() = hi;
    return out;
  }
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= t.size()) {
    const std::size_t comma = t.find(',', pos);
    const std::string piece =
        comma == std::string::npos ? t.substr(pos) : t.substr(pos, comma - pos);
    out.push_back(parse_double_value(piece, "grid value"));
    if (comma == std::string::npos) {
      break;
    }
    pos = comma + 1;
  }
  return out;
}

}  // namespace akrrlab
