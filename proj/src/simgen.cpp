// SPDX-License-Identifier: Apache-2.0

#include "quickiva/simgen.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>

namespace quickiva {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  have_cached_ = true;
  return r * std::cos(theta);
}

Complex Rng::complex_gaussian() {
  const double re = gaussian();
  const double im = gaussian();
  return Complex(re, im) / std::sqrt(2.0);
}

double Rng::gamma(double shape) {
  if (shape < 1.0) {
    const double boost = std::pow(uniform_pos(), 1.0 / shape);
    return gamma(shape + 1.0) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

Vector Rng::complex_gaussian_vector(int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = complex_gaussian();
  return v;
}

Matrix Rng::complex_gaussian_matrix(int rows, int cols) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = complex_gaussian();
  return m;
}

std::uint64_t Rng::split(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double exp_power_lambda_sq(int K, double alpha) {
  return std::exp(std::lgamma((K + 1) / alpha) - std::lgamma(K / alpha) -
                  std::log(static_cast<double>(K)));
}

Matrix sample_exp_power(Rng& rng, int K, double alpha, Eigen::Index n) {
  const double lambda = std::sqrt(exp_power_lambda_sq(K, alpha));
  const double shape = K / alpha;
  Matrix out(K, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector dir = rng.complex_gaussian_vector(K);
    const double norm = dir.norm();
    dir /= norm;
    const double q = rng.gamma(shape);
    const double radius = std::pow(q, 1.0 / (2.0 * alpha)) / lambda;
    out.col(i) = radius * dir;
  }
  return out;
}

Matrix random_unitary(Rng& rng, int n) {
  const Matrix a = rng.complex_gaussian_matrix(n, n);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    const Complex rjj = r(j, j);
    const double mag = std::abs(rjj);
    q.col(j) *= (mag > 0.0) ? rjj / mag : Complex(1.0, 0.0);
  }
  return q;
}

Matrix random_mixing(Rng& rng, int d, double cond_cap) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Matrix a = rng.complex_gaussian_matrix(d, d);
    Eigen::JacobiSVD<Matrix> svd(a);
    const double smin = svd.singularValues()(d - 1);
    if (smin > 0.0 && svd.singularValues()(0) / smin <= cond_cap) return a;
  }
  throw NumericalError("random_mixing: condition cap not met in 100 attempts");
}

Matrix complex_laplacean(Rng& rng, Eigen::Index n) {
  Matrix m(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = -std::log(rng.uniform_pos());
    m(0, i) = rng.complex_gaussian() * std::sqrt(e);
  }
  return m;
}

namespace {

void attach_truth(Dataset& data, std::vector<Matrix> sources, std::vector<Matrix> mixing,
                  std::vector<Matrix> demixing) {
  Dataset::GroundTruth gt;
  gt.sources = std::move(sources);
  gt.mixing = std::move(mixing);
  gt.demixing = std::move(demixing);
  data.truth = std::move(gt);
}

}  // namespace

Dataset generate_iva_dataset(Rng& rng, int K, int d, Eigen::Index N) {
  Dataset data;
  data.K = K;
  data.T = 1;
  data.d = d;
  data.Nb = N;

  // Dependent SOI vector: Haar-unitary mix of iid Laplacean components.
  const Matrix u = random_unitary(rng, K);
  Matrix soi(K, N);
  for (int k = 0; k < K; ++k) soi.row(k) = complex_laplacean(rng, N);
  soi = u * soi;

  std::vector<Matrix> sources, mixing, demixing;
  for (int k = 0; k < K; ++k) {
    Matrix s(d, N);
    s.row(0) = soi.row(k);
    for (int i = 1; i < d; ++i) s.row(i) = complex_laplacean(rng, N);
    const Matrix a = random_mixing(rng, d);
    data.x.push_back(a * s);
    sources.push_back(std::move(s));
    demixing.push_back(a.inverse());
    mixing.push_back(a);
  }
  attach_truth(data, std::move(sources), std::move(mixing), std::move(demixing));
  return data;
}

Dataset generate_csv_dataset(Rng& rng, int K, int d, int T, Eigen::Index Nb,
                             int n_csv_sources, double cond_cap) {
  Dataset data;
  data.K = K;
  data.T = T;
  data.d = d;
  data.Nb = Nb;

  const Matrix u = random_unitary(rng, K);

  // True demixing matrices: first n_csv rows fixed per k, rest fresh per block.
  std::vector<Matrix> demixing(K * T), mixing(K * T);
  for (int k = 0; k < K; ++k) {
    const Matrix fixed_rows = rng.complex_gaussian_matrix(n_csv_sources, d);
    for (int t = 0; t < T; ++t) {
      Matrix w(d, d);
      w.topRows(n_csv_sources) = fixed_rows;
      bool ok = false;
      for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        w.bottomRows(d - n_csv_sources) = rng.complex_gaussian_matrix(d - n_csv_sources, d);
        Eigen::JacobiSVD<Matrix> svd(w);
        const double smin = svd.singularValues()(d - 1);
        ok = smin > 0.0 && svd.singularValues()(0) / smin <= cond_cap;
      }
      if (!ok) throw NumericalError("generate_csv_dataset: condition cap not met");
      demixing[k * T + t] = w;
      mixing[k * T + t] = w.inverse();
    }
  }

  std::vector<Matrix> sources(K * T);
  data.x.resize(K * T);
  for (int t = 0; t < T; ++t) {
    Matrix soi(K, Nb);
    for (int k = 0; k < K; ++k) soi.row(k) = complex_laplacean(rng, Nb);
    soi = u * soi;
    for (int k = 0; k < K; ++k) {
      Matrix s(d, Nb);
      s.row(0) = soi.row(k);
      for (int i = 1; i < d; ++i) s.row(i) = complex_laplacean(rng, Nb);
      data.x[k * T + t] = mixing[k * T + t] * s;
      sources[k * T + t] = std::move(s);
    }
  }
  attach_truth(data, std::move(sources), std::move(mixing), std::move(demixing));
  return data;
}

Dataset generate_separation_dataset(Rng& rng, int K, int d, Eigen::Index N, double alpha) {
  Dataset data;
  data.K = K;
  data.T = 1;
  data.d = d;
  data.Nb = N;

  std::vector<Matrix> per_mixture_sources(K, Matrix(d, N));
  for (int i = 0; i < d; ++i) {
    const Matrix component = sample_exp_power(rng, K, alpha, N);
    for (int k = 0; k < K; ++k) per_mixture_sources[k].row(i) = component.row(k);
  }

  std::vector<Matrix> sources, mixing, demixing;
  for (int k = 0; k < K; ++k) {
    const Matrix a = random_mixing(rng, d);
    data.x.push_back(a * per_mixture_sources[k]);
    sources.push_back(std::move(per_mixture_sources[k]));
    demixing.push_back(a.inverse());
    mixing.push_back(a);
  }
  attach_truth(data, std::move(sources), std::move(mixing), std::move(demixing));
  return data;
}

}  // namespace quickiva
