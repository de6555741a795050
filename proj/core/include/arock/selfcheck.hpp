/*
 * Copyright 2026 the arock authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace arock {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // the numbers behind the verdict, one line
};

/// Runs the library's internal invariant checks: operator inequalities,
/// sampler and moment agreement, step-size dominance, coefficient recurrences,
/// sharp synchronous ratios, timing-model expectations and one-step descent
/// spot checks. Deterministic for a given seed; takes a few seconds.
std::vector<CheckResult> run_selfchecks(std::uint64_t seed = 20260819);

}  // namespace arock
