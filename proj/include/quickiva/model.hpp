// SPDX-License-Identifier: Apache-2.0
//
// Mixing-model parameterization for one-unit extraction: the rank-one
// (gamma, g, beta, h) coordinates of the mixing/demixing pair, the blocking
// matrix, the distortionless constraint, and the covariance machinery shared
// by all update rules.

#pragma once

#include <optional>
#include <vector>

#include "quickiva/types.hpp"

namespace quickiva {

// Per-(k,t) parameter table. The mixing vector is a = [gamma; g] and the
// separating vector is w = [beta; h]; both have length d. Under the
// constant-separating-vector model, beta and h are backed by a single value
// per dataset k and shared across blocks, which the accessors hide so the
// standard and CSV models run through one code path.
class IveParams {
 public:
  IveParams(int K, int T, int d, bool csv = false);

  int K() const { return K_; }
  int T() const { return T_; }
  int d() const { return d_; }
  bool csv() const { return csv_; }

  Complex gamma(int k, int t) const { return gamma_[idx(k, t)]; }
  Complex beta(int k, int t) const { return beta_[sidx(k, t)]; }
  const Vector& g(int k, int t) const { return g_[idx(k, t)]; }
  const Vector& h(int k, int t) const { return h_[sidx(k, t)]; }

  Complex& gamma(int k, int t) { return gamma_[idx(k, t)]; }
  Complex& beta(int k, int t) { return beta_[sidx(k, t)]; }
  Vector& g(int k, int t) { return g_[idx(k, t)]; }
  Vector& h(int k, int t) { return h_[sidx(k, t)]; }

  // a = [gamma; g], w = [beta; h].
  Vector mixing_vector(int k, int t) const;
  Vector separating_vector(int k, int t) const;
  void set_mixing_vector(int k, int t, const Vector& a);
  void set_separating_vector(int k, int t, const Vector& w);

  // max over (k,t) of |gamma conj(beta) - (1 - h^H g)|.
  double constraint_residual() const;

 private:
  int idx(int k, int t) const { return k * T_ + t; }
  int sidx(int k, int t) const { return csv_ ? k : k * T_ + t; }

  int K_, T_, d_;
  bool csv_;
  std::vector<Complex> gamma_, beta_;
  std::vector<Vector> g_, h_;
};

// Complex observations organized as K datasets x T blocks of d x N_b samples.
struct Dataset {
  int K = 0;
  int T = 0;
  int d = 0;
  Eigen::Index Nb = 0;

  // Block (k,t) lives at index k*T + t; each matrix is d x N_b.
  std::vector<Matrix> x;

  struct GroundTruth {
    std::vector<Matrix> sources;   // d x N_b per (k,t)
    std::vector<Matrix> mixing;    // A^{k,t}, d x d
    std::vector<Matrix> demixing;  // (A^{k,t})^{-1}
  };
  std::optional<GroundTruth> truth;

  const Matrix& block(int k, int t) const { return x[k * T + t]; }
  Matrix& block(int k, int t) { return x[k * T + t]; }
  Eigen::Index total_samples() const { return Nb * T; }

  // Extract mixture k as a standalone single-dataset view (used to run the
  // K=1 variants of the algorithms mixture by mixture).
  Dataset single_mixture(int k) const;
};

// Sample covariances per (k,t), Hermitian-symmetrized, with optional cached
// inverses. Algorithms take this object rather than recomputing second-order
// statistics from raw data every iteration.
class CovarianceSet {
 public:
  CovarianceSet() = default;
  static CovarianceSet from_dataset(const Dataset& data, bool cache_inverses = false);

  int K() const { return K_; }
  int T() const { return T_; }
  const Matrix& cx(int k, int t) const { return cx_[k * T_ + t]; }
  const Matrix* cx_inverse(int k, int t) const;

  // <C^{k,t}>_t, the block-averaged covariance used by the CSV normalization.
  Matrix block_mean(int k) const;

  // Set when some block had fewer samples than channels.
  bool rank_warning() const { return rank_warning_; }

 private:
  int K_ = 0, T_ = 0;
  std::vector<Matrix> cx_;
  std::vector<Matrix> cx_inv_;
  bool rank_warning_ = false;
};

// A_IVE: first column [gamma; g], first row [gamma, h^H], lower-right block
// (g h^H - I)/gamma. Throws SingularParameterizationError if |gamma| is
// below floor.
Matrix assemble_mixing(const IveParams& params, int k, int t);

// W_IVE = [w^H; B] with B = [g, -gamma I]; equals the inverse of
// assemble_mixing whenever the distortionless constraint holds.
Matrix assemble_demixing(const IveParams& params, int k, int t);

// B = [g, -gamma I], the (d-1) x d matrix with B a = 0.
Matrix blocking_matrix(const IveParams& params, int k, int t);
Matrix blocking_matrix(const Vector& mixing_vector);

// beta = (1 - g^H h)/conj(gamma); restores the distortionless constraint.
Complex complete_beta(const IveParams& params, int k, int t);
// gamma = (1 - h^H g)/conj(beta).
Complex complete_gamma(const IveParams& params, int k, int t);

// a = C w / (w^H C w). Throws DegenerateDirectionError when the quadratic
// form is below floor.
Vector orthogonal_coupling(const Vector& w, const Matrix& cx);

// (1/N) X X^H, Hermitian-symmetrized. A sample count below d is allowed
// (callers may inspect CovarianceSet::rank_warning).
Matrix sample_covariance(const Matrix& block);

// C_z = B C_x B^H.
Matrix background_cov(const Matrix& cx, const IveParams& params, int k, int t);

// Direct dense inverse of C_z.
Matrix background_cov_inverse_direct(const Matrix& cx, const IveParams& params, int k, int t);

// Fast path given C_x^{-1}: with A = [a, Q] and W = A^{-1},
//   C_z^{-1} = Q^H C^{-1} Q - (Q^H C^{-1} a)(a^H C^{-1} a)^{-1}(a^H C^{-1} Q),
// an O(d^2) update once the full inverse is known. Requires the
// distortionless constraint (the params must assemble to a valid inverse pair).
Matrix background_cov_inverse_lemma(const Matrix& cx_inverse, const IveParams& params, int k, int t);

}  // namespace quickiva
