#pragma once

// Experiment runner: configuration parsing (key=value files plus flag
// overrides), the six canned experiments, and deterministic CSV/JSON emission.

#include <map>
#include <string>

#include "sparselab/normest.hpp"

namespace sparselab {

// Configuration problem: carries every violation found, not just the first.
struct ConfigError : std::runtime_error {
  std::vector<std::string> issues;
  explicit ConfigError(std::vector<std::string> v)
      : std::runtime_error(join(v)), issues(std::move(v)) {}

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid configuration:";
    for (const auto& m : v) s += "\n  - " + m;
    return s;
  }
};

// A numeric experiment assertion failed; renders as a JSON error object.
struct AssertionFailure : std::runtime_error {
  std::string experiment;
  std::string check;
  double observed = 0.0;
  double bound = 0.0;
  AssertionFailure(std::string exp, std::string chk, double obs, double bnd)
      : std::runtime_error(exp + ": " + chk),
        experiment(std::move(exp)),
        check(std::move(chk)),
        observed(obs),
        bound(bnd) {}
  std::string json() const;
};

struct ExperimentConfig {
  std::string experiment;
  int grid_l = 14;
  double shift = 0.0;
  uint64_t seed = 0;
  std::string out_dir = ".";
  std::string format = "csv";
  std::vector<double> lambdas{1.0, 2.0, 4.0};
  std::vector<double> deltas{1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8};
  int big_j = -1;  // nested-chain truncation; -1 means grid_l - 4
  int trials = 1000;
  double eta = 0.0;
  std::vector<double> p{4.0};
  std::vector<double> r{2.0};
  double q = 0.0;  // 0 means derived from p and eta
  double s = 8.0;
  double sprime = 8.0 / 7.0;
  double wdelta = 1.0 / 16.0;

  int J() const { return big_j < 0 ? grid_l - 4 : big_j; }
};

// Parses the optional key=value file (with `#` comments), applies the flag
// overrides on top, validates everything, and throws ConfigError listing all
// violations. An empty path means flags only.
ExperimentConfig parse_config(
    const std::string& path,
    const std::map<std::string, std::string>& overrides);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// 12 significant digits ("%.12g").
std::string format_sig12(double x);
std::string to_csv(const Table& t);
std::string to_json(const Table& t);

// Runs the experiment, writes <out_dir>/<experiment>.<format>, and returns
// the emitted table. Throws AssertionFailure when a built-in numeric
// assertion fails (the output file is written first for inspection).
Table run_experiment(const ExperimentConfig& ec);

}  // namespace sparselab
