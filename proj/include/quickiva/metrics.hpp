// SPDX-License-Identifier: Apache-2.0
//
// Evaluation metrics for the benchmark harness: projection-based SIR for
// extracted signals, permutation-aligned ISR for full separation, outcome
// classification, and histogram/trajectory aggregation with CSV emission.

#pragma once

#include <string>
#include <vector>

#include "quickiva/types.hpp"

namespace quickiva {

// dB cap keeping aggregates finite on exact recoveries.
inline constexpr double kDbCap = 150.0;

enum class Classification { kSuccess, kOtherSource, kFailure };

std::string_view to_string(Classification c);

// Per-trial result bundle: one SIR (and classification) per mixture for
// extraction, or one ISR per source for separation.
struct TrialOutcome {
  std::vector<double> sir_db;
  std::vector<double> isr_db;
  std::vector<Classification> classification;
  int iterations = 0;
  double wall_ms = 0.0;
  bool failed = false;       // a step raised a numerical error
  std::string error;
};

// Project `extracted` onto `true_soi` and report signal-vs-residual power in
// dB, capped at +-150. Scale and phase invariant in both arguments.
double sir(const Vector& extracted, const Vector& true_soi);

// Gain-matrix ISR per separated source: G = W A_true, rows rescaled to unit
// dominant entry, sources aligned by the assignment maximizing
// sum_i |G_{i,pi(i)}|^2 (Hungarian method), then
// ISR_i = 10 log10(sum_{j != pi(i)} |G_ij|^2 / |G_{i,pi(i)}|^2).
std::vector<double> isr(const Matrix& w, const Matrix& a_true);

// Minimum-cost assignment on a square cost matrix; returns column index per
// row. Exposed for testing against brute-force enumeration.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

// > 15 dB: success; < -15 dB: extracted a different source; the closed
// interval [-15, 15] (saddle points, model mismatch): failure.
Classification classify_outcome(double sir_db);

struct HistogramRow {
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  long count = 0;
};

// Fixed-width histogram: width-2 dB bins centered on even dB values covering
// [-50, 50] (edges at odd dB, so the +-15 dB classification boundaries are
// bin edges). Values outside the range are clamped into the end bins, so the
// counts always sum to the record count.
std::vector<HistogramRow> aggregate_histogram(const std::vector<double>& values_db,
                                              double bin_width = 2.0, double lo = -51.0,
                                              double hi = 51.0);

struct TrajectoryRow {
  int iteration = 0;
  double wall_ms_mean = 0.0;
  double isr_db_mean = 0.0;
};

// Mean wall-clock and mean ISR per iteration index across trials. Each trial
// contributes one (wall_ms, isr_db) pair per iteration.
std::vector<TrajectoryRow> aggregate_trajectory(
    const std::vector<std::vector<std::pair<double, double>>>& per_trial_series);

std::string histogram_csv(const std::vector<HistogramRow>& rows, std::string_view algorithm,
                          std::string_view experiment);
std::string trajectory_csv(const std::vector<TrajectoryRow>& rows, std::string_view algorithm);

}  // namespace quickiva
