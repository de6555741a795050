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
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arock/delays.hpp"
#include "arock/engine.hpp"
#include "arock/operators.hpp"
#include "arock/rates.hpp"
#include "arock/trace.hpp"

namespace arock {

/// A shared-memory run: p workers snapshot the solution vector block by block
/// (individually consistent blocks, deliberately no whole-vector consistency),
/// compute one block residual each, and submit updates over an ordered queue.
/// A single applier thread applies them one at a time, measuring the empirical
/// per-block delays against a global applied-update counter.
struct LiveConfig {
  explicit LiveConfig(Operator op_) : op(std::move(op_)) {}

  Operator op;
  std::size_t workers = 1;
  std::size_t budget = 1;  // total applied updates
  StepPolicy policy = StepPolicy::Fixed;
  double eta = 1.0;  // Fixed policy only
  std::optional<StochasticRatePlan> stochastic;
  std::optional<DeterministicRatePlan> deterministic;
  std::uint64_t seed = 1;
  /// Mean of an exponential sleep per update (seconds); emulates compute cost
  /// plus network jitter. Zero disables the sleep and its RNG draw.
  double jitter_mean = 0.0;
  InitKind init = InitKind::Ones;
  std::size_t depth_cap = 100000;
  double tail_tol = 1e-9;
};

struct LiveResult {
  Trace trace;
  std::vector<double> final_x;
  /// Current delay j = max_b (k - read counter of block b), one per update.
  std::map<std::uint32_t, std::uint64_t> delay_histogram;
  /// Same, restricted to the second half of the run (delays drift as workers
  /// warm up; both views are reported).
  std::map<std::uint32_t, std::uint64_t> delay_histogram_window;
  /// Per-block ages pooled over all updates (m entries per update).
  std::map<std::uint32_t, std::uint64_t> age_histogram;
  /// Monotonic seconds since run start, one per applied update.
  std::vector<double> apply_times;
  std::uint64_t applied = 0;
  bool completed = false;  // false: a worker failed, the trace is partial
  std::string error;
};

/// Executes the configured run. A worker failure stops the run early; the
/// partial result is returned with completed = false and the error message.
LiveResult run_live(const LiveConfig& config);

/// Empirical delay model from the run's whole-run current-delay histogram;
/// its tail probabilities are exactly the measured tail frequencies.
DelayModel fit_delay_model(const LiveResult& result);

}  // namespace arock
