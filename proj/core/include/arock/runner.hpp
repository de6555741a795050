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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "arock/config.hpp"
#include "arock/delays.hpp"
#include "arock/operators.hpp"

namespace arock {

/// Builds the contraction described by the [operator] section. Supported
/// kinds: scaled_identity, negated_scaled_identity (dim, blocks, r),
/// gradient_step (dim, blocks, mu, lipschitz, optional diag list) and
/// prox_gradient_step (the same plus threshold).
Operator operator_from_config(Config& cfg);

/// Builds the [delay] section's model; zero() when the section is absent.
/// Relative histogram paths resolve against base_dir.
DelayModel delay_from_config(Config& cfg, const std::string& base_dir);

/// Command-line overrides applied on top of the config file.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
};

/// Subcommand drivers. Each consumes its config (unknown keys are errors),
/// writes its output files under out_dir, prints a summary to os, and returns
/// false when a run-level invariant check fails. Validation problems throw.
bool plan_from_config(Config cfg, const std::string& out_dir, std::ostream& os);
bool simulate_from_config(Config cfg, const std::string& out_dir, const CliOverrides& ov,
                          std::ostream& os);
bool timing_from_config(Config cfg, const std::string& out_dir, const CliOverrides& ov,
                        std::ostream& os);
bool live_from_config(Config cfg, const std::string& out_dir, const CliOverrides& ov,
                      std::ostream& os);

struct ReportInputs {
  std::vector<std::string> trace_paths;
  std::string plan_path;    // optional plan.txt from the plan subcommand
  std::string timing_path;  // optional timing.csv from the timing subcommand
  double eps = 1e-6;        // target squared-error reduction
};

/// Cross-run comparison: per-trace least-squares rate fit, the predicted rate
/// it should respect, and (with timing data) epochs per unit time plus the
/// projected time to reach eps. All traces must describe the same operator
/// and hold at least 10 rows. Returns false when a fit lands above its
/// prediction by more than half the predicted gap to 1.
bool emit_report(const ReportInputs& in, const std::string& out_dir, std::ostream& os);

}  // namespace arock
