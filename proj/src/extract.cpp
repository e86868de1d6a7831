// SPDX-License-Identifier: Apache-2.0

#include "quickiva/extract.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "detail.hpp"

namespace quickiva {

using detail::background_signals;
using detail::newton_or_fallback;
using detail::require_gamma;
using detail::score_block;
using detail::SolveOutcome;

Algorithm algorithm_by_name(std::string_view name) {
  if (name == "quickive1") return Algorithm::kQuickIve1;
  if (name == "quickive2") return Algorithm::kQuickIve2;
  if (name == "gradient") return Algorithm::kGradient;
  throw std::invalid_argument("unknown extraction algorithm: " + std::string(name));
}

HessianMode hessian_mode_by_name(std::string_view name) {
  if (name == "exact") return HessianMode::kExact;
  if (name == "approx") return HessianMode::kApprox;
  throw std::invalid_argument("unknown hessian mode: " + std::string(name));
}

IveParams ExtractionState::params() const {
  IveParams p(K, T, d, /*csv=*/T > 1);
  for (int k = 0; k < K; ++k) {
    p.beta(k, 0) = w[k](0);
    p.h(k, 0) = w[k].tail(d - 1);
    for (int t = 0; t < T; ++t) p.set_mixing_vector(k, t, mixing(k, t));
  }
  return p;
}

ExtractionState ExtractionState::initialize(const std::vector<Vector>& init_w,
                                            const Dataset& data, const CovarianceSet& cov) {
  ExtractionState state;
  state.K = data.K;
  state.T = data.T;
  state.d = data.d;
  state.w = init_w;
  state.a.resize(data.K * data.T);
  for (int k = 0; k < data.K; ++k)
    for (int t = 0; t < data.T; ++t)
      state.mixing(k, t) = orthogonal_coupling(init_w[k], cov.cx(k, t));
  return state;
}

Matrix block_outputs(const ExtractionState& state, const Dataset& data, int t) {
  Matrix s(state.K, data.Nb);
  for (int k = 0; k < state.K; ++k)
    s.row(k) = state.w[k].adjoint() * data.block(k, t);
  return s;
}

namespace {

// Step 3 shared by every algorithm: normalize the separating vectors to unit
// output variance (block-averaged covariance when T > 1) and recouple the
// mixing vectors per block. Computes every update before touching the state
// so a failed step leaves it intact.
void normalize_and_couple(ExtractionState& state, const CovarianceSet& cov,
                          const std::vector<Vector>& candidate) {
  std::vector<Vector> new_w(state.K);
  std::vector<Vector> new_a(state.K * state.T);
  for (int k = 0; k < state.K; ++k) {
    const Matrix cmean = cov.block_mean(k);
    const double scale = std::real(candidate[k].dot(cmean * candidate[k]));
    if (!(scale > kParamFloor))
      throw DegenerateDirectionError("zero output variance in normalization");
    new_w[k] = candidate[k] / std::sqrt(scale);
    for (int t = 0; t < state.T; ++t)
      new_a[k * state.T + t] = orthogonal_coupling(new_w[k], cov.cx(k, t));
  }
  state.w = std::move(new_w);
  state.a = std::move(new_a);
}

}  // namespace

Vector quickive1_gradient(const ExtractionState& state, const Dataset& data,
                          const ScoreFunction& score, int k) {
  if (state.T != 1) throw std::logic_error("quickive1 requires T = 1");
  const Complex gamma = state.mixing(k, 0)(0);
  require_gamma(gamma);
  const Matrix outputs = block_outputs(state, data, 0);
  Vector phi;
  score_block(score, outputs, k, &phi, nullptr);
  const Matrix z = background_signals(state.mixing(k, 0), data.block(k, 0));
  return (z * phi) / (gamma * static_cast<double>(data.Nb));
}

Matrix quickive1_hessian(const ExtractionState& state, const Dataset& data,
                         const ScoreFunction& score, int k) {
  if (state.T != 1) throw std::logic_error("quickive1 requires T = 1");
  const Complex gamma = state.mixing(k, 0)(0);
  require_gamma(gamma);
  const Matrix outputs = block_outputs(state, data, 0);
  Vector dphi;
  score_block(score, outputs, k, nullptr, &dphi);
  const Matrix z = background_signals(state.mixing(k, 0), data.block(k, 0));
  const Matrix weighted = z * dphi.asDiagonal() * z.adjoint() / static_cast<double>(data.Nb);
  return -weighted.transpose() / std::norm(gamma);
}

Matrix quickive1_hessian_approx(const ExtractionState& state, const CovarianceSet& cov,
                                Complex rho, int k) {
  const Complex gamma = state.mixing(k, 0)(0);
  require_gamma(gamma);
  const IveParams p = state.params();
  // The transpose keeps the approximation consistent with the exact Hessian
  // (whose bracketed expectation tends to rho * C_z near convergence).
  return -(rho / std::norm(gamma)) * background_cov(cov.cx(k, 0), p, k, 0).transpose();
}

Vector quickive2_gradient(const ExtractionState& state, const Dataset& data,
                          const ScoreFunction& score, int k,
                          const std::vector<Complex>* frozen_nu) {
  Vector grad = Vector::Zero(state.d);
  Vector phi;
  for (int t = 0; t < state.T; ++t) {
    const Matrix outputs = block_outputs(state, data, t);
    score_block(score, outputs, k, &phi, nullptr);
    const Complex nu = frozen_nu ? (*frozen_nu)[t] : detail::nu_from_phi(phi, outputs, k);
    if (std::abs(nu) <= kStatFloor)
      throw DegenerateStatisticError("nu statistic below floor");
    const Vector expectation = data.block(k, t) * phi / static_cast<double>(data.Nb);
    grad += state.mixing(k, t) - expectation / nu;
  }
  return grad / static_cast<double>(state.T);
}

Matrix quickive2_hessian(const ExtractionState& state, const Dataset& data,
                         const ScoreFunction& score, int k,
                         const std::vector<Complex>* frozen_nu) {
  Matrix hess = Matrix::Zero(state.d, state.d);
  Vector phi, dphi;
  for (int t = 0; t < state.T; ++t) {
    const Matrix outputs = block_outputs(state, data, t);
    score_block(score, outputs, k, &phi, &dphi);
    const Complex nu = frozen_nu ? (*frozen_nu)[t] : detail::nu_from_phi(phi, outputs, k);
    if (std::abs(nu) <= kStatFloor)
      throw DegenerateStatisticError("nu statistic below floor");
    const Matrix& x = data.block(k, t);
    const Matrix weighted = x * dphi.asDiagonal() * x.adjoint() / static_cast<double>(data.Nb);
    hess -= weighted.transpose() / nu;
  }
  return hess / static_cast<double>(state.T);
}

StepReport quickive1_step(ExtractionState& state, const Dataset& data, const CovarianceSet& cov,
                          const ScoreFunction& score, HessianMode hessian) {
  if (state.T != 1) throw std::logic_error("quickive1 requires T = 1");
  const int K = state.K;
  const int d = state.d;
  const Eigen::Index n = data.Nb;
  const Matrix outputs = block_outputs(state, data, 0);

  StepReport report;
  report.step_norm.resize(K);
  report.grad_norm.resize(K);
  std::vector<Vector> candidate(K);
  Vector phi, dphi;

  for (int k = 0; k < K; ++k) {
    const Vector& a = state.mixing(k, 0);
    const Complex gamma = a(0);
    require_gamma(gamma);
    const Vector g = a.tail(d - 1);
    const Matrix z = background_signals(a, data.block(k, 0));
    score_block(score, outputs, k, &phi, &dphi);

    const Vector grad = (z * phi) / (gamma * static_cast<double>(n));

    Matrix hess;
    if (hessian == HessianMode::kExact) {
      const Matrix weighted = z * dphi.asDiagonal() * z.adjoint() / static_cast<double>(n);
      hess = -weighted.transpose() / std::norm(gamma);
    } else {
      // rho ~ 0 yields a zero matrix and the solve below falls back.
      const Complex rho = dphi.mean();
      hess = quickive1_hessian_approx(state, cov, rho, k);
    }

    const SolveOutcome solved = newton_or_fallback(hess, grad);
    report.fallback |= solved.fallback;
    report.grad_norm[k] = grad.norm();
    report.step_norm[k] = solved.delta.norm();

    const Vector h_new = state.w[k].tail(d - 1) + solved.delta;
    const Complex beta_new = (Complex(1.0, 0.0) - g.dot(h_new)) / std::conj(gamma);
    Vector w_new(d);
    w_new(0) = beta_new;
    w_new.tail(d - 1) = h_new;
    candidate[k] = std::move(w_new);
  }

  normalize_and_couple(state, cov, candidate);
  return report;
}

StepReport quickive2_step(ExtractionState& state, const Dataset& data, const CovarianceSet& cov,
                          const ScoreFunction& score) {
  const int K = state.K;
  const int T = state.T;
  const Eigen::Index n = data.Nb;

  // nu and the per-block statistics are computed from the current outputs
  // and frozen for the remainder of the iteration.
  std::vector<Matrix> outputs(T);
  for (int t = 0; t < T; ++t) outputs[t] = block_outputs(state, data, t);

  StepReport report;
  report.step_norm.resize(K);
  report.grad_norm.resize(K);
  std::vector<Vector> candidate(K);
  Vector phi, dphi;

  for (int k = 0; k < K; ++k) {
    Vector grad = Vector::Zero(state.d);
    Matrix hess = Matrix::Zero(state.d, state.d);
    for (int t = 0; t < T; ++t) {
      score_block(score, outputs[t], k, &phi, &dphi);
      const Complex nu = detail::nu_from_phi(phi, outputs[t], k);
      const Matrix& x = data.block(k, t);
      grad += state.mixing(k, t) - (x * phi) / (nu * static_cast<double>(n));
      const Matrix weighted = x * dphi.asDiagonal() * x.adjoint() / static_cast<double>(n);
      hess -= weighted.transpose() / nu;
    }
    grad /= static_cast<double>(T);
    hess /= static_cast<double>(T);

    const SolveOutcome solved = newton_or_fallback(hess, grad);
    report.fallback |= solved.fallback;
    report.grad_norm[k] = grad.norm();
    report.step_norm[k] = solved.delta.norm();
    candidate[k] = state.w[k] + solved.delta;
  }

  normalize_and_couple(state, cov, candidate);
  return report;
}

StepReport gradient_baseline_step(ExtractionState& state, const Dataset& data,
                                  const CovarianceSet& cov, const ScoreFunction& score,
                                  double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("gradient step size must be non-negative");
  const int K = state.K;

  StepReport report;
  report.step_norm.resize(K);
  report.grad_norm.resize(K);
  std::vector<Vector> candidate(K);
  for (int k = 0; k < K; ++k) {
    const Vector grad = quickive2_gradient(state, data, score, k);
    if (!grad.allFinite()) throw NumericalError("non-finite gradient");
    report.grad_norm[k] = grad.norm();
    report.step_norm[k] = mu * grad.norm();
    candidate[k] = state.w[k] + mu * grad;
  }
  normalize_and_couple(state, cov, candidate);
  return report;
}

namespace {

void fill_sir(const Dataset& data, const ExtractionState& state, TrialOutcome& outcome) {
  if (!data.truth) return;
  const Eigen::Index total = data.total_samples();
  outcome.sir_db.resize(state.K);
  outcome.classification.resize(state.K);
  for (int k = 0; k < state.K; ++k) {
    Vector extracted(total), soi(total);
    for (int t = 0; t < state.T; ++t) {
      extracted.segment(t * data.Nb, data.Nb) =
          (state.w[k].adjoint() * data.block(k, t)).transpose();
      soi.segment(t * data.Nb, data.Nb) =
          data.truth->sources[k * data.T + t].row(0).transpose();
    }
    outcome.sir_db[k] = sir(extracted, soi);
    outcome.classification[k] = classify_outcome(outcome.sir_db[k]);
  }
}

}  // namespace

RunResult run_extraction(Algorithm algorithm, const Dataset& data, const CovarianceSet& cov,
                         const ScoreFunction& score, const std::vector<Vector>& init_w,
                         const StoppingRule& stopping, const RunOptions& options) {
  if (stopping.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (!(stopping.tol > 0.0)) throw std::invalid_argument("stopping tol must be positive");

  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.state = ExtractionState::initialize(init_w, data, cov);
  ExtractionState& state = result.state;

  for (int iter = 1; iter <= stopping.max_iter; ++iter) {
    const std::vector<Vector> w_old = state.w;
    StepReport report;
    try {
      switch (algorithm) {
        case Algorithm::kQuickIve1:
          report = quickive1_step(state, data, cov, score, options.hessian);
          break;
        case Algorithm::kQuickIve2:
          report = quickive2_step(state, data, cov, score);
          break;
        case Algorithm::kGradient:
          report = gradient_baseline_step(state, data, cov, score, options.mu);
          break;
      }
    } catch (const NumericalError& e) {
      result.outcome.failed = true;
      result.outcome.error = e.what();
      break;
    }

    state.iteration = iter;
    IterationDiagnostics diag;
    for (int k = 0; k < state.K; ++k) {
      diag.grad_norm = std::max(diag.grad_norm, report.grad_norm[k]);
      diag.step_norm = std::max(diag.step_norm, report.step_norm[k]);
      diag.convergence =
          std::max(diag.convergence, detail::convergence_criterion(state.w[k], w_old[k]));
    }
    diag.fallback = report.fallback;
    state.diagnostics.push_back(diag);
    state.last_step_norm = diag.step_norm;

    if (diag.convergence < stopping.tol) {
      result.converged = true;
      break;
    }
  }

  result.outcome.iterations = state.iteration;
  result.outcome.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  fill_sir(data, state, result.outcome);
  return result;
}

}  // namespace quickiva
