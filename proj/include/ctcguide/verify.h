// Copyright 2026 The ctcguide Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Seed-pinned self-checks: the dynamic programs against brute-force
// enumeration and every analytic gradient against finite differences.

#ifndef CTCGUIDE_VERIFY_H_
#define CTCGUIDE_VERIFY_H_

#include <cstdint>
#include <string>
#include <vector>

namespace ctcguide {

enum class VerifyScope { kCtc, kRnnt, kPruning, kGradients, kAll };

VerifyScope ParseVerifyScope(const std::string &name);

struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double seconds = 0.0;  // not part of the CSV, which must be reproducible
};

struct VerifyOptions {
  VerifyScope scope = VerifyScope::kAll;
  uint64_t seed = 1;
  int32_t seeds_per_shape = 100;  // oracle instances per (T, U, V)
  // Name of a gradient check whose analytic gradient is perturbed before
  // comparison. Used to show that the suite catches broken backprop.
  std::string corrupt;
};

std::vector<std::string> VerifyCheckNames(VerifyScope scope);
bool IsGradientCheck(const std::string &name);

std::vector<CheckResult> RunVerify(const VerifyOptions &options);

// Header "name,max_error,tolerance,pass" and one line per check.
std::string VerifyCsv(const std::vector<CheckResult> &results);

// Individual checks, exposed for the acceptance binary.
CheckResult VerifyCtcOracle(uint64_t seed, int32_t seeds_per_shape);
CheckResult VerifyRnntOracle(uint64_t seed, int32_t seeds_per_shape);
CheckResult VerifyRnntPathCount();

}  // namespace ctcguide

#endif  // CTCGUIDE_VERIFY_H_
