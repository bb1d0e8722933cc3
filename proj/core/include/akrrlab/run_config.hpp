#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace akrrlab {

// Text config mirroring the command-line parameters, so a run can be pinned to
// a file and replayed. Format: `[section]` headers and `key = value` lines,
// with `#` comment lines. Unknown sections or keys are rejected. Relative
// paths are resolved against the config file's directory at load time, so a
// dumped config replays identically from anywhere.
struct RunConfig {
  // [data]
  std::string input;
  // [estimator]
  std::string kind = "akrr";
  std::string kernel;  // kernel spec text, e.g. "spline:q=1,M=200"; empty = none
  double lambda = 1.0;
  double mu = 0.0;
  int iterations = 100;
  // [tuning]
  std::string lambda_grid;
  std::string mu_grid;
  std::string gamma_grid;
  int folds = 5;
  std::uint64_t cv_seed = 0;
  // [experiment]
  std::string id;
  std::string scale = "desk";
  std::uint64_t seed = 1;
  // [output]
  std::string path;

  bool operator==(const RunConfig&) const = default;
};

// parse(dump(c)) == c for every valid config.
RunConfig parse_run_config(const std::string& text, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& file);
std::string dump_run_config(const RunConfig& config);

// Grid text: "lo:hi:count-log" (log-spaced), "lo:hi:count-lin" (equally
// spaced), or an explicit comma list "0.1,1,10". Empty text means no grid.
std::vector<double> parse_grid(const std::string& text);

}  // namespace akrrlab
