// SPDX-License-Identifier: Apache-2.0

#include "quickiva/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace quickiva {

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::kSuccess: return "success";
    case Classification::kOtherSource: return "other_source";
    case Classification::kFailure: return "failure";
  }
  return "failure";
}

namespace {

double ratio_db(double num, double den) {
  if (num <= 0.0) return -kDbCap;
  if (den <= 0.0) return kDbCap;
  return std::clamp(10.0 * std::log10(num / den), -kDbCap, kDbCap);
}

}  // namespace

double sir(const Vector& extracted, const Vector& true_soi) {
  const double s_energy = true_soi.squaredNorm();
  if (s_energy <= 0.0) throw std::invalid_argument("sir: reference signal is zero");
  if (!extracted.allFinite() || extracted.squaredNorm() <= 0.0) return -kDbCap;
  const Complex coeff = true_soi.dot(extracted) / s_energy;
  const Vector aligned = coeff * true_soi;
  return ratio_db(aligned.squaredNorm(), (extracted - aligned).squaredNorm());
}

// O(n^3) Hungarian method with potentials (minimization).
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("solve_assignment: square matrix required");
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // match[col] = row (1-based)
  std::vector<int> way(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j)
    if (match[j] != 0) assignment[match[j] - 1] = j - 1;
  return assignment;
}

std::vector<double> isr(const Matrix& w, const Matrix& a_true) {
  const int d = static_cast<int>(w.rows());
  Matrix gain = w * a_true;

  for (int i = 0; i < d; ++i) {
    Eigen::Index jmax;
    gain.row(i).cwiseAbs().maxCoeff(&jmax);
    const Complex dominant = gain(i, jmax);
    if (std::abs(dominant) > 0.0) gain.row(i) /= dominant;
  }

  // Maximize sum |G_{i,pi(i)}|^2 == minimize the negated squared moduli.
  const Eigen::MatrixXd cost = -gain.cwiseAbs2();
  const std::vector<int> assignment = solve_assignment(cost);

  std::vector<double> out(d);
  for (int i = 0; i < d; ++i) {
    const int j = assignment[i];
    const double signal = std::norm(gain(i, j));
    const double interference = gain.row(i).squaredNorm() - signal;
    out[i] = (signal <= 0.0) ? kDbCap : ratio_db(interference, signal);
  }
  return out;
}

Classification classify_outcome(double sir_db) {
  if (sir_db > 15.0) return Classification::kSuccess;
  if (sir_db < -15.0) return Classification::kOtherSource;
  return Classification::kFailure;
}

std::vector<HistogramRow> aggregate_histogram(const std::vector<double>& values_db,
                                              double bin_width, double lo, double hi) {
  const int nbins = static_cast<int>(std::lround((hi - lo) / bin_width));
  std::vector<HistogramRow> rows(nbins);
  for (int b = 0; b < nbins; ++b) {
    rows[b].bin_lo = lo + b * bin_width;
    rows[b].bin_hi = lo + (b + 1) * bin_width;
  }
  for (double v : values_db) {
    int b = static_cast<int>(std::floor((v - lo) / bin_width));
    b = std::clamp(b, 0, nbins - 1);
    ++rows[b].count;
  }
  return rows;
}

std::vector<TrajectoryRow> aggregate_trajectory(
    const std::vector<std::vector<std::pair<double, double>>>& per_trial_series) {
  std::size_t len = 0;
  for (const auto& series : per_trial_series) len = std::max(len, series.size());
  std::vector<TrajectoryRow> rows(len);
  for (std::size_t it = 0; it < len; ++it) {
    double wall = 0.0, isr_sum = 0.0;
    long n = 0;
    for (const auto& series : per_trial_series) {
      if (it >= series.size()) continue;
      wall += series[it].first;
      isr_sum += series[it].second;
      ++n;
    }
    rows[it].iteration = static_cast<int>(it);
    rows[it].wall_ms_mean = n ? wall / n : 0.0;
    rows[it].isr_db_mean = n ? isr_sum / n : 0.0;
  }
  return rows;
}

std::string histogram_csv(const std::vector<HistogramRow>& rows, std::string_view algorithm,
                          std::string_view experiment) {
  std::ostringstream os;
  os << "bin_lo,bin_hi,count,algorithm,experiment\n";
  for (const auto& r : rows)
    os << r.bin_lo << ',' << r.bin_hi << ',' << r.count << ',' << algorithm << ','
       << experiment << '\n';
  return os.str();
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows, std::string_view algorithm) {
  std::ostringstream os;
  os << "iteration,wall_ms_mean,isr_db_mean,algorithm\n";
  for (const auto& r : rows)
    os << r.iteration << ',' << r.wall_ms_mean << ',' << r.isr_db_mean << ',' << algorithm
       << '\n';
  return os.str();
}

}  // namespace quickiva
