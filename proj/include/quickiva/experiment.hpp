// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo experiment runner: seeded trial batches for the extraction,
// CSV-extraction and separation benchmarks, dispatched over a worker pool
// and merged deterministically by trial index. Emits the histogram and
// trajectory CSV files plus a JSON summary.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quickiva/extract.hpp"
#include "quickiva/separate.hpp"
#include "quickiva/simgen.hpp"

namespace quickiva {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string experiment = "extraction";  // extraction | csv_extraction | separation
  std::string algorithm = "quickive2";
  std::string score = "rational";
  int K = 3;
  int d = 6;
  int T = 1;
  long Nb = 1000;
  int trials = 1000;
  std::uint64_t seed = 1;
  std::string init = "near_ideal";  // near_ideal | random
  double perturb_norm = 0.1;
  double tol = 1e-6;
  int max_iter = 1000;
  std::string hessian = "exact";
  double mu = 0.3;
  bool ice = false;  // run the K = 1 variant mixture by mixture
  int n_csv_sources = 3;
  double alpha = 0.4;  // separation source shape
  int workers = 0;     // 0 = hardware concurrency
  std::string out_dir = "out";
};

// Paper-matched defaults per experiment identifier.
ExperimentConfig default_config(std::string_view experiment);

// JSON round-trip (unknown keys rejected; missing keys keep defaults).
ExperimentConfig config_from_json_text(const std::string& text,
                                       const ExperimentConfig& base = {});
std::string config_to_json_text(const ExperimentConfig& config);

// Throws ConfigError for inconsistent settings.
void validate(const ExperimentConfig& config);

struct ExperimentSummary {
  long records = 0;           // evaluated outputs (trials x K for extraction)
  long failed_trials = 0;
  double success_fraction = 0.0;
  double other_source_fraction = 0.0;
  double median_iterations = 0.0;
  double mean_wall_ms_per_iteration = 0.0;
  double final_isr_db_mean = 0.0;  // separation only
};

// Runs the configured batch, writes <out_dir>/histogram.csv,
// <out_dir>/summary.json and (for separation) <out_dir>/trajectory.csv.
ExperimentSummary run_experiment(const ExperimentConfig& config);

// Library entry points used by both run_experiment and the acceptance suite.
struct ExtractionBatch {
  std::vector<double> sir_db;       // flattened over (trial, k)
  std::vector<int> iterations;      // one per algorithm run
  std::vector<double> wall_ms;      // one per algorithm run
  long failed_trials = 0;
};
ExtractionBatch run_extraction_batch(const ExperimentConfig& config);

struct SeparationBatch {
  std::vector<std::vector<std::pair<double, double>>> trajectories;  // per trial
  std::vector<double> final_isr_db;                                  // flattened
  long failed_trials = 0;
};
SeparationBatch run_separation_batch(const ExperimentConfig& config);

}  // namespace quickiva
