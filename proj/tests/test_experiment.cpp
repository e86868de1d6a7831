// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "quickiva/experiment.hpp"
#include "quickiva/selftest.hpp"

using namespace quickiva;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// summary.json with the timing line removed, for determinism comparisons
std::string summary_without_timing(const std::filesystem::path& p) {
  std::istringstream is(slurp(p));
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line))
    if (line.find("wall_ms") == std::string::npos) os << line << '\n';
  return os.str();
}

std::string out_path(const std::string& leaf) {
  return (std::filesystem::temp_directory_path() / "quickiva_tests" / leaf).string();
}

}  // namespace

TEST_CASE("experiment defaults follow the benchmark protocol") {
  const ExperimentConfig ex = default_config("extraction");
  CHECK(ex.K == 3);
  CHECK(ex.d == 6);
  CHECK(ex.Nb == 1000);
  CHECK(ex.T == 1);
  CHECK(ex.trials == 1000);

  const ExperimentConfig csv = default_config("csv_extraction");
  CHECK(csv.T == 3);
  CHECK(csv.Nb == 1000);

  const ExperimentConfig sep = default_config("separation");
  CHECK(sep.K == 3);
  CHECK(sep.d == 5);
  CHECK(sep.Nb == 5000);
  CHECK(sep.alpha == 0.4);
  CHECK(sep.max_iter == 50);
  CHECK(sep.trials == 100);

  CHECK_THROWS_AS(default_config("frequency_domain"), ConfigError);
}

TEST_CASE("config validation rejects inconsistent settings") {
  ExperimentConfig c = default_config("extraction");
  c.trials = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config("extraction");
  c.algorithm = "quickiva2";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config("csv_extraction");
  c.algorithm = "quickive1";  // T > 1 unsupported by quickive1
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config("csv_extraction");
  c.n_csv_sources = 9;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config("separation");
  c.algorithm = "gradient";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config("extraction");
  c.score = "tanh";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config("extraction");
  c.algorithm = "quickive2";
  c.hessian = "approx";
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("config json round trip with overrides") {
  ExperimentConfig c = default_config("csv_extraction");
  c.trials = 17;
  c.seed = 99;
  c.score = "norm";
  const std::string text = config_to_json_text(c);
  const ExperimentConfig back = config_from_json_text(text);
  CHECK(back.experiment == "csv_extraction");
  CHECK(back.trials == 17);
  CHECK(back.seed == 99);
  CHECK(back.score == "norm");
  CHECK(back.T == 3);

  CHECK_THROWS_AS(config_from_json_text("{\"stepsize\": 2}"), ConfigError);
  // partial config keeps experiment defaults
  const ExperimentConfig partial =
      config_from_json_text("{\"experiment\": \"separation\", \"trials\": 3}");
  CHECK(partial.trials == 3);
  CHECK(partial.d == 5);
}

TEST_CASE("extraction experiment writes schema-complete outputs") {
  ExperimentConfig c = default_config("extraction");
  c.trials = 8;
  c.seed = 11;
  c.workers = 2;
  c.out_dir = out_path("extraction");
  const ExperimentSummary summary = run_experiment(c);
  CHECK(summary.records == 24);  // trials x K

  const std::string hist = slurp(out_path("extraction") + "/histogram.csv");
  CHECK(hist.rfind("bin_lo,bin_hi,count,algorithm,experiment\n", 0) == 0);
  CHECK(hist.find("quickive2,extraction") != std::string::npos);

  // histogram mass above 15 dB equals the summary success fraction
  std::istringstream rows(hist);
  std::string line;
  std::getline(rows, line);
  long above = 0, total = 0;
  while (std::getline(rows, line)) {
    std::istringstream ls(line);
    std::string lo, hi, count;
    std::getline(ls, lo, ',');
    std::getline(ls, hi, ',');
    std::getline(ls, count, ',');
    total += std::stol(count);
    if (std::stod(lo) >= 15.0) above += std::stol(count);
  }
  CHECK(total == summary.records);
  CHECK(static_cast<double>(above) / total == doctest::Approx(summary.success_fraction));

  const std::string js = slurp(out_path("extraction") + "/summary.json");
  CHECK(js.find("\"success_fraction\"") != std::string::npos);
  CHECK(js.find("\"median_iterations\"") != std::string::npos);
}

TEST_CASE("experiments are deterministic across runs and worker counts") {
  ExperimentConfig c = default_config("extraction");
  c.trials = 6;
  c.seed = 12;
  c.workers = 1;
  c.out_dir = out_path("det1");
  run_experiment(c);
  c.workers = 4;
  c.out_dir = out_path("det2");
  run_experiment(c);
  CHECK(slurp(out_path("det1") + "/histogram.csv") == slurp(out_path("det2") + "/histogram.csv"));
  CHECK(summary_without_timing(out_path("det1") + "/summary.json") ==
        summary_without_timing(out_path("det2") + "/summary.json"));
}

TEST_CASE("separation experiment writes a trajectory") {
  ExperimentConfig c = default_config("separation");
  c.trials = 2;
  c.max_iter = 5;
  c.Nb = 1200;
  c.seed = 13;
  c.workers = 2;
  c.out_dir = out_path("sep");
  const ExperimentSummary summary = run_experiment(c);
  CHECK(summary.records == 30);  // trials x K x d
  const std::string traj = slurp(out_path("sep") + "/trajectory.csv");
  CHECK(traj.rfind("iteration,wall_ms_mean,isr_db_mean,algorithm\n", 0) == 0);
  // iteration budget rows plus the initial state
  CHECK(std::count(traj.begin(), traj.end(), '\n') == 7);
}

TEST_CASE("ice mode evaluates mixtures independently") {
  ExperimentConfig c = default_config("csv_extraction");
  c.trials = 3;
  c.seed = 14;
  c.workers = 2;
  c.ice = true;
  c.out_dir = out_path("ice");
  const ExperimentSummary summary = run_experiment(c);
  CHECK(summary.records == 9);
}

TEST_CASE("selftest passes clean and fails under the mutation hook") {
  const auto clean = run_selftest(7);
  CHECK(all_passed(clean));
  const auto mutated = run_selftest(7, Mutation::kHessianSign);
  CHECK_FALSE(all_passed(mutated));
  std::ostringstream os;
  print_report(os, mutated);
  CHECK(os.str().find("[FAIL]") != std::string::npos);
}
