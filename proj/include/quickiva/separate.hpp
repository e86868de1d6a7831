// SPDX-License-Identifier: Apache-2.0
//
// Parallel full separation: d orthogonally-constrained one-unit Newton
// updates per mixture followed by symmetric orthogonalization of the
// demixing matrix. T = 1 only. Data are whitened per mixture before
// iterating; reported demixing matrices are composed back into the original
// coordinates.

#pragma once

#include <utility>
#include <vector>

#include "quickiva/extract.hpp"

namespace quickiva {

enum class IvaVariant { kQuickIva1, kQuickIva2 };

IvaVariant iva_variant_by_name(std::string_view name);

// Demixing matrix per mixture; rows are the separating vectors. The coupled
// mixing vector of row i sits in column i of the companion matrix.
struct SeparationState {
  int K = 0, d = 0;
  std::vector<Matrix> W;  // d x d per k
  std::vector<Matrix> A;  // column i = mixing vector coupled to row i of W
  int iteration = 0;
};

// W (W^H W)^{-1/2} via eigendecomposition of W^H W. Throws
// RankDeficiencyError when the smallest singular value of W is below 1e-12.
Matrix symmetric_orthogonalize(const Matrix& w);

struct SeparationOptions {
  HessianMode hessian = HessianMode::kExact;
};

// One parallel iteration: every row of every W^k takes one QuickIVE step
// (without the per-row covariance normalization, which the orthogonalization
// supersedes), then the rows are symmetrically orthogonalized and the mixing
// vectors recoupled.
void quickiva_iteration(SeparationState& state, const Dataset& data, const CovarianceSet& cov,
                        const ScoreFunction& score, IvaVariant variant,
                        const SeparationOptions& options = {});

struct SeparationRun {
  SeparationState state;           // whitened coordinates
  std::vector<Matrix> demixing;    // original coordinates, per k
  // One (cumulative wall ms, mean ISR dB) pair per iteration, starting from
  // the initial state at index 0; filled only when ground truth is present.
  std::vector<std::pair<double, double>> trajectory;
  TrialOutcome outcome;            // isr_db flattened over (k, source)
  int iterations = 0;
  bool converged = false;
};

// Whiten per mixture, orthogonalize the initial demixing matrices once, and
// run quickiva_iteration for stopping.max_iter iterations (or until the
// row-wise vector-angle criterion fires, when stopping.tol > 0).
// init_w is given in the original data coordinates.
SeparationRun run_separation(IvaVariant variant, const Dataset& data, const ScoreFunction& score,
                             const std::vector<Matrix>& init_w, const StoppingRule& stopping,
                             const SeparationOptions& options = {});

}  // namespace quickiva
