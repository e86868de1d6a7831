// SPDX-License-Identifier: Apache-2.0

#include "quickiva/score.hpp"

#include <cmath>
#include <stdexcept>

namespace quickiva {

Complex RationalScore::eval(const Vector& s, int k) const {
  return std::conj(s(k)) / (1.0 + s.squaredNorm());
}

Complex RationalScore::conj_deriv(const Vector& s, int k) const {
  const double n2 = s.squaredNorm();
  const double denom = (1.0 + n2) * (1.0 + n2);
  return Complex((1.0 + n2 - std::norm(s(k))) / denom, 0.0);
}

std::atomic<std::uint64_t> NormScore::zero_count_{0};

Complex NormScore::eval(const Vector& s, int k) const {
  const double n = s.norm();
  if (n == 0.0) {
    zero_count_.fetch_add(1, std::memory_order_relaxed);
    return Complex(0.0, 0.0);
  }
  return std::conj(s(k)) / n;
}

Complex NormScore::conj_deriv(const Vector& s, int k) const {
  const double n = s.norm();
  if (n == 0.0) {
    zero_count_.fetch_add(1, std::memory_order_relaxed);
    return Complex(0.0, 0.0);
  }
  return Complex(1.0 / n - std::norm(s(k)) / (2.0 * n * n * n), 0.0);
}

const ScoreFunction& score_by_name(std::string_view name) {
  static const RationalScore rational;
  static const NormScore norm;
  if (name == "rational") return rational;
  if (name == "norm") return norm;
  throw std::invalid_argument("unknown score function: " + std::string(name));
}

Complex nu_stat(const Matrix& outputs, const ScoreFunction& score, int k) {
  const Eigen::Index n = outputs.cols();
  Complex acc(0.0, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector s = outputs.col(i);
    acc += score.eval(s, k) * s(k);
  }
  const Complex nu = acc / static_cast<double>(n);
  if (std::abs(nu) <= kStatFloor)
    throw DegenerateStatisticError("nu statistic below floor");
  return nu;
}

Complex rho_stat(const Matrix& outputs, const ScoreFunction& score, int k) {
  const Eigen::Index n = outputs.cols();
  Complex acc(0.0, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) acc += score.conj_deriv(outputs.col(i), k);
  const Complex rho = acc / static_cast<double>(n);
  if (std::abs(rho) <= kStatFloor)
    throw DegenerateStatisticError("rho statistic below floor");
  return rho;
}

}  // namespace quickiva
