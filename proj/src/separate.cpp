// SPDX-License-Identifier: Apache-2.0

#include "quickiva/separate.hpp"

#include <Eigen/Eigenvalues>
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

IvaVariant iva_variant_by_name(std::string_view name) {
  if (name == "quickiva1") return IvaVariant::kQuickIva1;
  if (name == "quickiva2") return IvaVariant::kQuickIva2;
  throw std::invalid_argument("unknown separation variant: " + std::string(name));
}

Matrix symmetric_orthogonalize(const Matrix& w) {
  const Matrix gram = (w.adjoint() * w + (w.adjoint() * w).adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Eigen::VectorXd values = eig.eigenvalues();
  if (values(0) <= 1e-24)  // singular values of W are sqrt(eigenvalues)
    throw RankDeficiencyError("symmetric_orthogonalize: rank-deficient matrix");
  const Matrix inv_sqrt = eig.eigenvectors() *
                          values.cwiseSqrt().cwiseInverse().asDiagonal().toDenseMatrix() *
                          eig.eigenvectors().adjoint();
  return w * inv_sqrt;
}

namespace {

// Separating vector of row i in column form (row i of W is w^H).
Vector row_vector(const Matrix& w, int i) { return w.row(i).adjoint(); }

}  // namespace

void quickiva_iteration(SeparationState& state, const Dataset& data, const CovarianceSet& cov,
                        const ScoreFunction& score, IvaVariant variant,
                        const SeparationOptions& options) {
  const int K = state.K;
  const int d = state.d;
  const Eigen::Index n = data.Nb;

  // Outputs per mixture; row i across mixtures is the joint argument of the
  // score function for vector component i.
  std::vector<Matrix> outputs(K);
  for (int k = 0; k < K; ++k) outputs[k] = state.W[k] * data.block(k, 0);

  std::vector<Matrix> candidate(K, Matrix(d, d));
  Matrix joint(K, n);
  Vector phi, dphi;

  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < K; ++k) joint.row(k) = outputs[k].row(i);
    for (int k = 0; k < K; ++k) {
      const Vector w = row_vector(state.W[k], i);
      const Vector a = state.A[k].col(i);
      const Matrix& x = data.block(k, 0);
      score_block(score, joint, k, &phi, &dphi);

      Vector w_new;
      if (variant == IvaVariant::kQuickIva2) {
        const Complex nu = detail::nu_from_phi(phi, joint, k);
        const Vector grad = a - (x * phi) / (nu * static_cast<double>(n));
        const Matrix weighted = x * dphi.asDiagonal() * x.adjoint() / static_cast<double>(n);
        const Matrix hess = -weighted.transpose() / nu;
        const SolveOutcome solved = newton_or_fallback(hess, grad);
        w_new = w + solved.delta;
      } else {
        const Complex gamma = a(0);
        require_gamma(gamma);
        const Vector g = a.tail(d - 1);
        const Matrix z = background_signals(a, x);
        const Vector grad = (z * phi) / (gamma * static_cast<double>(n));
        Matrix hess;
        if (options.hessian == HessianMode::kExact) {
          const Matrix weighted = z * dphi.asDiagonal() * z.adjoint() / static_cast<double>(n);
          hess = -weighted.transpose() / std::norm(gamma);
        } else {
          const Complex rho = dphi.size() ? Complex(dphi.mean()) : Complex(0.0, 0.0);
          const Matrix b = blocking_matrix(a);
          hess = -(rho / std::norm(gamma)) * (b * cov.cx(k, 0) * b.adjoint()).transpose();
        }
        const SolveOutcome solved = newton_or_fallback(hess, grad);
        const Vector h_new = w.tail(d - 1) + solved.delta;
        const Complex beta_new = (Complex(1.0, 0.0) - g.dot(h_new)) / std::conj(gamma);
        w_new.resize(d);
        w_new(0) = beta_new;
        w_new.tail(d - 1) = h_new;
      }
      candidate[k].row(i) = w_new.adjoint();
    }
  }

  // Per-row covariance normalization is superseded by the orthogonalization.
  for (int k = 0; k < K; ++k) {
    Matrix w_orth = symmetric_orthogonalize(candidate[k]);
    Matrix a_new(d, d);
    for (int i = 0; i < d; ++i)
      a_new.col(i) = orthogonal_coupling(row_vector(w_orth, i), cov.cx(k, 0));
    state.W[k] = std::move(w_orth);
    state.A[k] = std::move(a_new);
  }
  ++state.iteration;
}

namespace {

struct Whitening {
  Matrix forward;   // C^{-1/2}
  Matrix backward;  // C^{1/2}
};

Whitening whitening_transform(const Matrix& cx) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cx);
  const Eigen::VectorXd values = eig.eigenvalues();
  if (values(0) <= kParamFloor)
    throw RankDeficiencyError("whitening: covariance not positive definite");
  const Matrix u = eig.eigenvectors();
  return {u * values.cwiseSqrt().cwiseInverse().asDiagonal().toDenseMatrix() * u.adjoint(),
          u * values.cwiseSqrt().asDiagonal().toDenseMatrix() * u.adjoint()};
}

double mean_isr_db(const SeparationState& state, const std::vector<Whitening>& wh,
                   const Dataset& data) {
  double acc = 0.0;
  long count = 0;
  for (int k = 0; k < state.K; ++k) {
    const Matrix w_orig = state.W[k] * wh[k].forward;
    for (double v : isr(w_orig, data.truth->mixing[k])) {
      acc += v;
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

}  // namespace

SeparationRun run_separation(IvaVariant variant, const Dataset& data, const ScoreFunction& score,
                             const std::vector<Matrix>& init_w, const StoppingRule& stopping,
                             const SeparationOptions& options) {
  if (data.T != 1) throw std::invalid_argument("run_separation requires T = 1");
  if (stopping.max_iter < 0) throw std::invalid_argument("iteration budget must be >= 0");
  const auto start = std::chrono::steady_clock::now();
  const int K = data.K;
  const int d = data.d;

  SeparationRun run;

  // Whiten each mixture once; iterate in whitened coordinates.
  std::vector<Whitening> wh(K);
  Dataset whitened;
  whitened.K = K;
  whitened.T = 1;
  whitened.d = d;
  whitened.Nb = data.Nb;
  for (int k = 0; k < K; ++k) {
    wh[k] = whitening_transform(sample_covariance(data.block(k, 0)));
    whitened.x.push_back(wh[k].forward * data.block(k, 0));
  }
  const CovarianceSet cov = CovarianceSet::from_dataset(whitened);

  SeparationState& state = run.state;
  state.K = K;
  state.d = d;
  state.W.resize(K);
  state.A.assign(K, Matrix(d, d));
  for (int k = 0; k < K; ++k) {
    state.W[k] = symmetric_orthogonalize(init_w[k] * wh[k].backward);
    for (int i = 0; i < d; ++i)
      state.A[k].col(i) = orthogonal_coupling(row_vector(state.W[k], i), cov.cx(k, 0));
  }

  const auto elapsed_ms = [&start] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };
  if (data.truth) run.trajectory.emplace_back(elapsed_ms(), mean_isr_db(state, wh, data));

  for (int iter = 1; iter <= stopping.max_iter; ++iter) {
    const std::vector<Matrix> w_old = state.W;
    try {
      quickiva_iteration(state, whitened, cov, score, variant, options);
    } catch (const NumericalError& e) {
      run.outcome.failed = true;
      run.outcome.error = e.what();
      break;
    }
    if (data.truth) run.trajectory.emplace_back(elapsed_ms(), mean_isr_db(state, wh, data));

    double conv = 0.0;
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < d; ++i)
        conv = std::max(conv, detail::convergence_criterion(row_vector(state.W[k], i),
                                                            row_vector(w_old[k], i)));
    if (stopping.tol > 0.0 && conv < stopping.tol) {
      run.converged = true;
      break;
    }
  }

  run.iterations = state.iteration;
  run.demixing.resize(K);
  for (int k = 0; k < K; ++k) run.demixing[k] = state.W[k] * wh[k].forward;

  if (data.truth) {
    for (int k = 0; k < K; ++k)
      for (double v : isr(run.demixing[k], data.truth->mixing[k]))
        run.outcome.isr_db.push_back(v);
  }
  run.outcome.iterations = run.iterations;
  run.outcome.wall_ms = elapsed_ms();
  return run;
}

}  // namespace quickiva
