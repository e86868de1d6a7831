// SPDX-License-Identifier: Apache-2.0
//
// Internal helpers shared by the extraction and separation update rules.

#pragma once

#include <Eigen/SVD>

#include "quickiva/score.hpp"
#include "quickiva/types.hpp"

namespace quickiva::detail {

inline void require_gamma(Complex gamma) {
  if (std::abs(gamma) <= kParamFloor)
    throw SingularParameterizationError("gamma magnitude below floor");
}

// phi^k and (optionally) d phi^k / d s_k^* per sample of the joint outputs.
inline void score_block(const ScoreFunction& score, const Matrix& outputs, int k, Vector* phi,
                        Vector* dphi) {
  const Eigen::Index n = outputs.cols();
  if (phi) phi->resize(n);
  if (dphi) dphi->resize(n);
  Vector s(outputs.rows());
  for (Eigen::Index i = 0; i < n; ++i) {
    s = outputs.col(i);
    if (phi) (*phi)(i) = score.eval(s, k);
    if (dphi) (*dphi)(i) = score.conj_deriv(s, k);
  }
}

// z = B x for the blocking matrix induced by the mixing vector a, without
// forming B.
inline Matrix background_signals(const Vector& a, const Matrix& x) {
  const int d = static_cast<int>(a.size());
  return a.tail(d - 1) * x.row(0) - a(0) * x.bottomRows(d - 1);
}

// (1/N) sum_n phi(n) s_k(n) with the statistic floor applied.
inline Complex nu_from_phi(const Vector& phi, const Matrix& outputs, int k) {
  const Complex nu =
      (phi.transpose() * outputs.row(k).transpose()).value() / static_cast<double>(phi.size());
  if (std::abs(nu) <= kStatFloor)
    throw DegenerateStatisticError("nu statistic below floor");
  return nu;
}

struct SolveOutcome {
  Vector delta;
  bool fallback = false;
};

// Newton direction -(H^*)^{-1} grad, or the 0.1-step gradient direction when
// the (conjugated) Hessian is ill-conditioned.
inline SolveOutcome newton_or_fallback(const Matrix& hessian, const Vector& grad) {
  if (!grad.allFinite()) throw NumericalError("non-finite gradient");
  if (grad.size() == 0) return {Vector(0), false};
  if (!hessian.allFinite()) return {kFallbackStep * grad, true};
  const Matrix hc = hessian.conjugate();
  Eigen::JacobiSVD<Matrix> svd(hc, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin <= 0.0 || sv(0) / smin > kCondLimit) return {kFallbackStep * grad, true};
  return {-svd.solve(grad), false};
}

inline double convergence_criterion(const Vector& w_new, const Vector& w_old) {
  const double denom = w_new.norm() * w_old.norm();
  if (denom <= 0.0) return 1.0;
  return 1.0 - std::abs(w_new.dot(w_old)) / denom;
}

}  // namespace quickiva::detail
