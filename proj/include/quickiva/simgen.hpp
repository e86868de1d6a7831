// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic data generation for the benchmark harness: the
// spherically-symmetric exponential-power sampler, Haar unitary and
// conditioned random mixing draws, and the dataset builders for the
// extraction, CSV-extraction and separation experiments.

#pragma once

#include <cstdint>
#include <random>

#include "quickiva/model.hpp"

namespace quickiva {

// Deterministic generator: mt19937_64 (bit-exact across platforms) with all
// variate transforms implemented explicitly, so identical seeds yield
// identical streams everywhere. Parallel trials derive per-trial seeds via
// split().
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) from the top 53 bits.
  double uniform();
  // Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  // Standard normal via Box-Muller (second variate cached).
  double gaussian();

  // Circular complex Gaussian with E|z|^2 = 1.
  Complex complex_gaussian();

  // Gamma(shape, 1) via Marsaglia-Tsang squeeze, with the power boost for
  // shape < 1.
  double gamma(double shape);

  Vector complex_gaussian_vector(int n);
  Matrix complex_gaussian_matrix(int rows, int cols);

  // splitmix64 mix of (seed, stream) for independent per-trial substreams.
  static std::uint64_t split(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// n samples of the K-variate circular density p(s) ~ exp(-(lambda^2 ||s||^2)^alpha)
// with lambda chosen in closed form so every component has unit variance:
// direction uniform on the unit sphere of C^K, radius r with
// (lambda^2 r^2)^alpha ~ Gamma(K/alpha, 1). Returns K x n.
Matrix sample_exp_power(Rng& rng, int K, double alpha, Eigen::Index n);

// The closed-form lambda^2 = Gamma((K+1)/alpha) / (K Gamma(K/alpha)).
double exp_power_lambda_sq(int K, double alpha);

// n samples of the circular complex Laplacean (Gaussian scale mixture
// s = g sqrt(E) with E ~ Exp(1)): rotation invariant, unit variance,
// E|s|^4 = 4. The component law of the extraction benchmarks.
Matrix complex_laplacean(Rng& rng, Eigen::Index n);

// Haar-distributed unitary via QR of a complex Gaussian matrix with
// phase-corrected R diagonal.
Matrix random_unitary(Rng& rng, int n);

// Complex Gaussian entries, redrawn until cond <= cond_cap (at most 100
// attempts, then NumericalError).
Matrix random_mixing(Rng& rng, int d, double cond_cap = 1e4);

// Extraction benchmark data (T = 1): per mixture, d independent circular
// Laplacean signals; the first signals across the K mixtures are replaced by
// a Haar-unitary mix of iid Laplacean components, making them uncorrelated
// but dependent; each mixture is then mixed by a conditioned random matrix.
Dataset generate_iva_dataset(Rng& rng, int K, int d, Eigen::Index N);

// CSV benchmark data: per (k,t) the true demixing matrix keeps its first
// n_csv_sources rows fixed across blocks; remaining rows are drawn fresh per
// block. The SOI is the first CSV source.
Dataset generate_csv_dataset(Rng& rng, int K, int d, int T, Eigen::Index Nb,
                             int n_csv_sources, double cond_cap = 1e4);

// Separation benchmark data: d independent vector components, each drawn
// jointly across the K mixtures from the exponential-power law.
Dataset generate_separation_dataset(Rng& rng, int K, int d, Eigen::Index N, double alpha);

}  // namespace quickiva
