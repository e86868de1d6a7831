// SPDX-License-Identifier: Apache-2.0

#include "quickiva/model.hpp"

#include <cmath>

namespace quickiva {

IveParams::IveParams(int K, int T, int d, bool csv)
    : K_(K), T_(T), d_(d), csv_(csv) {
  const int n = K * T;
  const int ns = csv ? K : n;
  gamma_.assign(n, Complex(1.0, 0.0));
  beta_.assign(ns, Complex(1.0, 0.0));
  g_.assign(n, Vector::Zero(d - 1));
  h_.assign(ns, Vector::Zero(d - 1));
}

Vector IveParams::mixing_vector(int k, int t) const {
  Vector a(d_);
  a(0) = gamma(k, t);
  a.tail(d_ - 1) = g(k, t);
  return a;
}

Vector IveParams::separating_vector(int k, int t) const {
  Vector w(d_);
  w(0) = beta(k, t);
  w.tail(d_ - 1) = h(k, t);
  return w;
}

void IveParams::set_mixing_vector(int k, int t, const Vector& a) {
  gamma(k, t) = a(0);
  g(k, t) = a.tail(d_ - 1);
}

void IveParams::set_separating_vector(int k, int t, const Vector& w) {
  beta(k, t) = w(0);
  h(k, t) = w.tail(d_ - 1);
}

double IveParams::constraint_residual() const {
  double worst = 0.0;
  for (int k = 0; k < K_; ++k)
    for (int t = 0; t < T_; ++t) {
      const Complex lhs = gamma(k, t) * std::conj(beta(k, t));
      const Complex rhs = Complex(1.0, 0.0) - h(k, t).dot(g(k, t));
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

Dataset Dataset::single_mixture(int k) const {
  Dataset out;
  out.K = 1;
  out.T = T;
  out.d = d;
  out.Nb = Nb;
  for (int t = 0; t < T; ++t) out.x.push_back(block(k, t));
  if (truth) {
    GroundTruth gt;
    for (int t = 0; t < T; ++t) {
      gt.sources.push_back(truth->sources[k * T + t]);
      gt.mixing.push_back(truth->mixing[k * T + t]);
      gt.demixing.push_back(truth->demixing[k * T + t]);
    }
    out.truth = std::move(gt);
  }
  return out;
}

CovarianceSet CovarianceSet::from_dataset(const Dataset& data, bool cache_inverses) {
  CovarianceSet set;
  set.K_ = data.K;
  set.T_ = data.T;
  for (const Matrix& block : data.x) {
    if (block.cols() < block.rows()) set.rank_warning_ = true;
    set.cx_.push_back(sample_covariance(block));
    if (cache_inverses) set.cx_inv_.push_back(set.cx_.back().inverse());
  }
  return set;
}

const Matrix* CovarianceSet::cx_inverse(int k, int t) const {
  if (cx_inv_.empty()) return nullptr;
  return &cx_inv_[k * T_ + t];
}

Matrix CovarianceSet::block_mean(int k) const {
  Matrix mean = cx_[k * T_];
  for (int t = 1; t < T_; ++t) mean += cx_[k * T_ + t];
  return mean / static_cast<double>(T_);
}

namespace {

void require_gamma(Complex gamma) {
  if (std::abs(gamma) <= kParamFloor)
    throw SingularParameterizationError("gamma magnitude below floor");
}

void require_beta(Complex beta) {
  if (std::abs(beta) <= kParamFloor)
    throw SingularParameterizationError("beta magnitude below floor");
}

}  // namespace

Matrix assemble_mixing(const IveParams& params, int k, int t) {
  const int d = params.d();
  const Complex gamma = params.gamma(k, t);
  require_gamma(gamma);
  const Vector& g = params.g(k, t);
  const Vector& h = params.h(k, t);

  Matrix a(d, d);
  a(0, 0) = gamma;
  a.row(0).tail(d - 1) = h.adjoint();
  a.col(0).tail(d - 1) = g;
  a.bottomRightCorner(d - 1, d - 1) =
      (g * h.adjoint() - Matrix::Identity(d - 1, d - 1)) / gamma;
  return a;
}

Matrix assemble_demixing(const IveParams& params, int k, int t) {
  const int d = params.d();
  Matrix w(d, d);
  w(0, 0) = std::conj(params.beta(k, t));
  w.row(0).tail(d - 1) = params.h(k, t).adjoint();
  w.bottomRows(d - 1) = blocking_matrix(params, k, t);
  return w;
}

Matrix blocking_matrix(const IveParams& params, int k, int t) {
  return blocking_matrix(params.mixing_vector(k, t));
}

Matrix blocking_matrix(const Vector& a) {
  const int d = static_cast<int>(a.size());
  Matrix b(d - 1, d);
  b.col(0) = a.tail(d - 1);
  b.rightCols(d - 1) = -a(0) * Matrix::Identity(d - 1, d - 1);
  return b;
}

Complex complete_beta(const IveParams& params, int k, int t) {
  const Complex gamma = params.gamma(k, t);
  require_gamma(gamma);
  return (Complex(1.0, 0.0) - params.g(k, t).dot(params.h(k, t))) / std::conj(gamma);
}

Complex complete_gamma(const IveParams& params, int k, int t) {
  const Complex beta = params.beta(k, t);
  require_beta(beta);
  return (Complex(1.0, 0.0) - params.h(k, t).dot(params.g(k, t))) / std::conj(beta);
}

Vector orthogonal_coupling(const Vector& w, const Matrix& cx) {
  const Vector cw = cx * w;
  const Complex denom = w.dot(cw);
  if (std::abs(denom) <= kParamFloor)
    throw DegenerateDirectionError("w^H C w below floor in orthogonal coupling");
  return cw / denom;
}

Matrix sample_covariance(const Matrix& block) {
  Matrix c = block * block.adjoint() / static_cast<double>(block.cols());
  return (c + c.adjoint()) / 2.0;
}

Matrix background_cov(const Matrix& cx, const IveParams& params, int k, int t) {
  const Matrix b = blocking_matrix(params, k, t);
  Matrix cz = b * cx * b.adjoint();
  return (cz + cz.adjoint()) / 2.0;
}

Matrix background_cov_inverse_direct(const Matrix& cx, const IveParams& params, int k, int t) {
  return background_cov(cx, params, k, t).inverse();
}

Matrix background_cov_inverse_lemma(const Matrix& cx_inverse, const IveParams& params,
                                    int k, int t) {
  const int d = params.d();
  const Matrix a_full = assemble_mixing(params, k, t);
  const Vector a = a_full.col(0);
  const Matrix q = a_full.rightCols(d - 1);

  const Vector cia = cx_inverse * a;
  const Complex scale = a.dot(cia);  // a^H C^{-1} a
  if (std::abs(scale) <= kParamFloor)
    throw DegenerateDirectionError("a^H C^{-1} a below floor in lemma path");
  const Vector qca = q.adjoint() * cia;  // Q^H C^{-1} a
  Matrix inv = q.adjoint() * cx_inverse * q - (qca * qca.adjoint()) / scale;
  return (inv + inv.adjoint()) / 2.0;
}

}  // namespace quickiva
