// SPDX-License-Identifier: Apache-2.0
//
// Shared scalar/matrix aliases and the error types thrown by the numerical
// core. All floors are hard thresholds: violations throw instead of
// silently regularizing.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace quickiva {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Magnitude floor for |gamma|, |beta| and quadratic-form denominators.
inline constexpr double kParamFloor = 1e-10;
// Floor for the nu/rho statistics of the update rules.
inline constexpr double kStatFloor = 1e-10;
// Condition-number limit above which Newton solves fall back to gradient steps.
inline constexpr double kCondLimit = 1e12;
// Step size used by the gradient fallback inside Newton steps.
inline constexpr double kFallbackStep = 0.1;

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// |gamma| or |beta| below floor: the rank-one parameterization is singular.
struct SingularParameterizationError : NumericalError {
  using NumericalError::NumericalError;
};

// w^H C w below floor in the orthogonal coupling.
struct DegenerateDirectionError : NumericalError {
  using NumericalError::NumericalError;
};

// |nu| or |rho| below floor.
struct DegenerateStatisticError : NumericalError {
  using NumericalError::NumericalError;
};

// Rank-deficient demixing matrix (orthogonalization cannot proceed).
struct RankDeficiencyError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace quickiva
