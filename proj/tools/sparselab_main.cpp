// Command-line entry point. Exit codes: 0 = all assertions passed,
// 1 = usage or configuration error, 2 = numeric assertion failure.

#include <iostream>

#include "CLI11.hpp"
#include "sparselab/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"sparselab: dyadic sparse-form numerical laboratory"};
  std::string experiment, config_path, out_dir, format, lambda, delta;
  int grid_l = 0;
  long long seed = 0;
  app.add_option("experiment", experiment,
                 "sharpness-k | sharpness-theta | reduce-fuzz | dominate-demo "
                 "| maximal-equiv | weights-report")
      ->required();
  app.add_option("--config", config_path, "key=value configuration file");
  auto* o_grid = app.add_option("--grid-L", grid_l, "lattice depth L in [4,24]");
  auto* o_seed = app.add_option("--seed", seed, "random seed");
  auto* o_out = app.add_option("--out", out_dir, "output directory");
  auto* o_fmt = app.add_option("--format", format, "csv | json");
  auto* o_lam = app.add_option("--lambda", lambda, "comma-separated lambdas");
  auto* o_del = app.add_option("--delta", delta, "comma-separated deltas");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::map<std::string, std::string> overrides;
  overrides["experiment"] = experiment;
  if (o_grid->count()) overrides["grid_l"] = std::to_string(grid_l);
  if (o_seed->count()) overrides["seed"] = std::to_string(seed);
  if (o_out->count()) overrides["out"] = out_dir;
  if (o_fmt->count()) overrides["format"] = format;
  if (o_lam->count()) overrides["lambda"] = lambda;
  if (o_del->count()) overrides["delta"] = delta;

  try {
    sparselab::ExperimentConfig ec =
        sparselab::parse_config(config_path, overrides);
    sparselab::run_experiment(ec);
  } catch (const sparselab::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const sparselab::AssertionFailure& e) {
    std::cout << e.json() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration:\n  - " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cout << "{\"error\":\"assertion\",\"detail\":\"" << e.what()
              << "\"}\n";
    return 2;
  }
  return 0;
}
