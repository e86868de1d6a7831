// SPDX-License-Identifier: Apache-2.0
//
// Model score functions phi^k(s) and their conjugate Wirtinger derivatives
// d phi / d s_k^*, plus the nu/rho block statistics consumed by the Newton
// update rules. Score functions are stateless and selected by name.

#pragma once

#include <atomic>
#include <cstdint>
#include <string_view>

#include "quickiva/types.hpp"

namespace quickiva {

class ScoreFunction {
 public:
  virtual ~ScoreFunction() = default;

  virtual std::string_view name() const = 0;

  // phi^k(s) for the joint argument s in C^K.
  virtual Complex eval(const Vector& s, int k) const = 0;

  // d phi^k / d s_k^* at s.
  virtual Complex conj_deriv(const Vector& s, int k) const = 0;
};

// phi^k(s) = s_k^* / (1 + ||s||^2). Bounded everywhere (|phi| <= 1/2).
class RationalScore final : public ScoreFunction {
 public:
  std::string_view name() const override { return "rational"; }
  Complex eval(const Vector& s, int k) const override;
  Complex conj_deriv(const Vector& s, int k) const override;
};

// phi^k(s) = s_k^* / ||s||. At s = 0 both phi and its derivative evaluate
// to 0 and a diagnostic counter is bumped; the event has measure zero on
// continuous data.
class NormScore final : public ScoreFunction {
 public:
  std::string_view name() const override { return "norm"; }
  Complex eval(const Vector& s, int k) const override;
  Complex conj_deriv(const Vector& s, int k) const override;

  static std::uint64_t zero_evaluations() { return zero_count_.load(); }
  static void reset_zero_counter() { zero_count_.store(0); }

 private:
  static std::atomic<std::uint64_t> zero_count_;
};

// Lookup by identifier "rational" or "norm"; throws std::invalid_argument
// for unknown names.
const ScoreFunction& score_by_name(std::string_view name);

// nu_{k,t} = (1/N_b) sum_n phi^k(s(n)) s_k(n) over a block of extracted
// signals (outputs is K x N_b, row j the current estimate for mixture j).
// Throws DegenerateStatisticError below floor.
Complex nu_stat(const Matrix& outputs, const ScoreFunction& score, int k);

// rho_k = (1/N_b) sum_n d phi^k / d s_k^* (s(n)); same floor as nu_stat.
Complex rho_stat(const Matrix& outputs, const ScoreFunction& score, int k);

}  // namespace quickiva
