// SPDX-License-Identifier: Apache-2.0
//
// Built-in verification suite: algebraic identities of the parameterization,
// finite-difference checks of the Newton ingredients, and sampler moment
// tests. The mutation hook corrupts a value under test so the suite's own
// failure detection can be exercised.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace quickiva {

enum class Mutation { kNone, kHessianSign };

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<CheckResult> run_selftest(std::uint64_t seed, Mutation mutation = Mutation::kNone);

bool all_passed(const std::vector<CheckResult>& results);

void print_report(std::ostream& os, const std::vector<CheckResult>& results);

}  // namespace quickiva
