// SPDX-License-Identifier: Apache-2.0
//
// One-unit blind extraction of an independent vector component. Two exact
// Newton-Raphson algorithms over the rank-one mixing parameterization
// (QuickIVE-1 for T = 1, QuickIVE-2 for T >= 1 including the
// constant-separating-vector model) plus a fixed-step gradient-ascent
// baseline. All three share the trailing normalize-and-recouple step.

#pragma once

#include <string_view>
#include <vector>

#include "quickiva/metrics.hpp"
#include "quickiva/model.hpp"
#include "quickiva/score.hpp"

namespace quickiva {

enum class Algorithm { kQuickIve1, kQuickIve2, kGradient };
enum class HessianMode { kExact, kApprox };

Algorithm algorithm_by_name(std::string_view name);
HessianMode hessian_mode_by_name(std::string_view name);

struct StoppingRule {
  double tol = 1e-6;
  int max_iter = 1000;
};

struct IterationDiagnostics {
  double grad_norm = 0.0;   // max over k
  double step_norm = 0.0;   // max over k of the NR/gradient step length
  double convergence = 0.0; // max over k of 1 - |<w_new, w_old>| / (|w_new||w_old|)
  bool fallback = false;    // some k used the gradient fallback
};

// Current separating vectors (one per dataset) and coupled mixing vectors
// (one per dataset and block), plus per-iteration diagnostics.
struct ExtractionState {
  int K = 0, T = 0, d = 0;
  std::vector<Vector> w;  // per k
  std::vector<Vector> a;  // per (k,t), index k*T + t
  int iteration = 0;
  double last_step_norm = 0.0;
  std::vector<IterationDiagnostics> diagnostics;

  const Vector& mixing(int k, int t) const { return a[k * T + t]; }
  Vector& mixing(int k, int t) { return a[k * T + t]; }

  // Parameter-table view: gamma/g from the mixing vectors, beta/h from w.
  IveParams params() const;

  // Couple every mixing vector to the given separating vectors.
  static ExtractionState initialize(const std::vector<Vector>& init_w, const Dataset& data,
                                    const CovarianceSet& cov);
};

// Joint outputs for block t: K x N_b with row j = (w^j)^H x^{j,t}.
Matrix block_outputs(const ExtractionState& state, const Dataset& data, int t);

// --- QuickIVE-1 ingredients (T = 1, mixing vectors treated as independent).
// Gradient of the contrast w.r.t. h^k with the mixing vector fixed:
//   (1/gamma^k) E_hat[phi^k z^k],  z^k = B^k x^k.
Vector quickive1_gradient(const ExtractionState& state, const Dataset& data,
                          const ScoreFunction& score, int k);

// Exact Hessian block:
//   -(1/|gamma^k|^2) E_hat[(d phi^k / d s_k^*) z^k (z^k)^H]^T.
Matrix quickive1_hessian(const ExtractionState& state, const Dataset& data,
                         const ScoreFunction& score, int k);

// Decoupled approximation -|gamma|^{-2} rho^k C_z^k, valid near convergence
// where the extracted signal and the background become independent.
Matrix quickive1_hessian_approx(const ExtractionState& state, const CovarianceSet& cov,
                                Complex rho, int k);

// --- QuickIVE-2 ingredients (separating vectors as free parameters).
// Modified gradient < a^{k,t} - nu_{k,t}^{-1} E_hat[phi^{k,t} x^{k,t}] >_t,
// whose expectation vanishes at the true solution. nu is recomputed from the
// current outputs unless frozen values are supplied.
Vector quickive2_gradient(const ExtractionState& state, const Dataset& data,
                          const ScoreFunction& score, int k,
                          const std::vector<Complex>* frozen_nu = nullptr);

// Partial derivative of the modified gradient by w^k under frozen nu:
//   -< nu_{k,t}^{-1} E_hat[(d phi^k / d s_k^*) x^{k,t} (x^{k,t})^H]^T >_t.
Matrix quickive2_hessian(const ExtractionState& state, const Dataset& data,
                         const ScoreFunction& score, int k,
                         const std::vector<Complex>* frozen_nu = nullptr);

struct StepReport {
  std::vector<double> step_norm;  // per k
  std::vector<double> grad_norm;  // per k
  bool fallback = false;
};

// One QuickIVE-1 iteration: Newton step on h^k, beta from the distortionless
// constraint, normalization to unit output variance and orthogonal
// recoupling of the mixing vectors. Ill-conditioned Hessians fall back to a
// gradient step of size 0.1.
StepReport quickive1_step(ExtractionState& state, const Dataset& data, const CovarianceSet& cov,
                          const ScoreFunction& score, HessianMode hessian = HessianMode::kExact);

// One QuickIVE-2 iteration: Newton step on w^k followed by the same
// normalize-and-recouple step (block-averaged covariance when T > 1).
StepReport quickive2_step(ExtractionState& state, const Dataset& data, const CovarianceSet& cov,
                          const ScoreFunction& score);

// Gradient-ascent baseline: w <- w + mu * modified gradient, then
// normalize-and-recouple.
StepReport gradient_baseline_step(ExtractionState& state, const Dataset& data,
                                  const CovarianceSet& cov, const ScoreFunction& score,
                                  double mu);

struct RunOptions {
  HessianMode hessian = HessianMode::kExact;
  double mu = 0.3;
};

struct RunResult {
  ExtractionState state;
  TrialOutcome outcome;
  bool converged = false;
};

// Iterate the chosen algorithm until the vector-angle stopping criterion
// 1 - |<w_new, w_old>|/(|w_new||w_old|) < tol holds for every k, or max_iter.
// Numerical errors mark the trial failed and preserve the last valid state.
// When the dataset carries ground truth, per-mixture SIR and classification
// are filled in.
RunResult run_extraction(Algorithm algorithm, const Dataset& data, const CovarianceSet& cov,
                         const ScoreFunction& score, const std::vector<Vector>& init_w,
                         const StoppingRule& stopping, const RunOptions& options = {});

}  // namespace quickiva
