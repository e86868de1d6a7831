// SPDX-License-Identifier: Apache-2.0
//
// Benchmark CLI: `run` executes a configured Monte-Carlo experiment and
// writes CSV/JSON results; `selftest` runs the built-in verification suite.

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>

#include "quickiva/experiment.hpp"
#include "quickiva/selftest.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw quickiva::ConfigError("cannot read config file: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind extraction/separation of independent vector components "
               "via exact Newton-Raphson updates"};
  app.require_subcommand(1);

  // --- run ---------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Run a Monte-Carlo experiment");
  std::string config_path, experiment = "extraction";
  std::string algorithm, score, init, hessian, out_dir;
  int trials = -1, workers = -1, max_iter = -1;
  std::uint64_t seed = 0;
  bool seed_set = false, ice = false, ice_set = false;
  double tol = -1.0, mu = -1.0, perturb = -1.0;

  run->add_option("--config", config_path, "JSON config file (flags override it)");
  run->add_option("--experiment", experiment,
                  "extraction | csv_extraction | separation");
  run->add_option("--algorithm", algorithm,
                  "quickive1 | quickive2 | gradient | quickiva1 | quickiva2");
  run->add_option("--score", score, "rational | norm");
  run->add_option("--trials", trials, "number of Monte-Carlo trials");
  run->add_option("--seed", seed, "base seed")->each([&](const std::string&) { seed_set = true; });
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--workers", workers, "worker threads (0 = hardware)");
  run->add_option("--tol", tol, "stopping tolerance");
  run->add_option("--max-iter", max_iter, "iteration budget");
  run->add_option("--mu", mu, "gradient baseline step size");
  run->add_option("--hessian", hessian, "exact | approx");
  run->add_option("--init", init, "near_ideal | random");
  run->add_option("--perturb-norm", perturb, "near-ideal perturbation norm");
  run->add_flag("--ice", ice, "run the K = 1 variant per mixture")
      ->each([&](const std::string&) { ice_set = true; });

  // --- selftest ----------------------------------------------------------
  auto* selftest = app.add_subcommand("selftest", "Run the built-in verification suite");
  std::uint64_t st_seed = 7;
  std::string mutate = "none";
  selftest->add_option("--seed", st_seed, "seed for the randomized checks");
  selftest->add_option("--mutate", mutate,
                       "none | hessian_sign (test hook: corrupt a value under test)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (selftest->parsed()) {
      quickiva::Mutation mutation;
      if (mutate == "none")
        mutation = quickiva::Mutation::kNone;
      else if (mutate == "hessian_sign")
        mutation = quickiva::Mutation::kHessianSign;
      else
        throw quickiva::ConfigError("unknown mutation: " + mutate);
      std::cout << "selftest seed=" << st_seed << "\n";
      const auto results = quickiva::run_selftest(st_seed, mutation);
      quickiva::print_report(std::cout, results);
      return quickiva::all_passed(results) ? 0 : 1;
    }

    quickiva::ExperimentConfig config = quickiva::default_config(experiment);
    if (!config_path.empty())
      config = quickiva::config_from_json_text(read_file(config_path), config);
    if (run->count("--experiment") && config.experiment != experiment)
      config = quickiva::default_config(experiment);
    if (!algorithm.empty()) config.algorithm = algorithm;
    if (!score.empty()) config.score = score;
    if (trials >= 0) config.trials = trials;
    if (seed_set) config.seed = seed;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (workers >= 0) config.workers = workers;
    if (tol >= 0.0) config.tol = tol;
    if (max_iter >= 0) config.max_iter = max_iter;
    if (mu >= 0.0) config.mu = mu;
    if (!hessian.empty()) config.hessian = hessian;
    if (!init.empty()) config.init = init;
    if (perturb >= 0.0) config.perturb_norm = perturb;
    if (ice_set) config.ice = ice;

    const quickiva::ExperimentSummary summary = quickiva::run_experiment(config);
    std::cout << "experiment=" << config.experiment << " algorithm=" << config.algorithm
              << " records=" << summary.records << " failed_trials=" << summary.failed_trials;
    if (config.experiment == "separation")
      std::cout << " final_isr_db_mean=" << summary.final_isr_db_mean;
    else
      std::cout << " success_fraction=" << summary.success_fraction
                << " median_iterations=" << summary.median_iterations;
    std::cout << "\nresults written to " << config.out_dir << "\n";
    return 0;
  } catch (const quickiva::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
