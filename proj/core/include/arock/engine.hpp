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
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "arock/delays.hpp"
#include "arock/history.hpp"
#include "arock/operators.hpp"
#include "arock/rates.hpp"
#include "arock/trace.hpp"

namespace arock {

enum class RunMode {
  Sync,   // p blocks per iteration, all read the same state
  Arock,  // one random block per iteration, delayed reads
};

enum class StepPolicy {
  Fixed,              // constant user-supplied eta
  PlanStochastic,     // eta1 from a StochasticRatePlan, chosen before sampling
  PlanDeterministic,  // H1(j(k)) after observing the current delay
};

enum class InitKind {
  Ones,          // x* + 1/sqrt(dim) in every coordinate
  RandomSphere,  // x* + uniform point on the unit sphere
};

/// Everything a simulated run needs. Consistency rules (checked by
/// run_experiment): Sync requires the zero-delay model and 1 <= p <= m;
/// PlanStochastic requires `stochastic` with matching m and r;
/// PlanDeterministic requires `deterministic` plus a schedule delay model.
struct RunSpec {
  explicit RunSpec(Operator op_) : op(std::move(op_)) {}

  Operator op;
  DelayModel delays = DelayModel::zero();
  RunMode mode = RunMode::Arock;
  std::size_t p = 1;  // sync subset size; ignored by Arock
  StepPolicy policy = StepPolicy::Fixed;
  double eta = 1.0;  // Fixed policy only
  std::optional<StochasticRatePlan> stochastic;
  std::optional<DeterministicRatePlan> deterministic;
  std::size_t iterations = 1000;
  std::uint64_t seed = 1;
  InitKind init = InitKind::Ones;
  std::size_t depth_cap = 100000;
  double tail_tol = 1e-9;  // Lyapunov truncation guard
};

/// Starting point for a run: the fixed point offset by the chosen unit-norm
/// direction (RandomSphere draws from the seed's init stream).
std::vector<double> initial_iterate(const Operator& op, InitKind init, std::uint64_t seed);

/// Assembles the delayed iterate: block b comes from the age-jvec[b] stored
/// iterate. Returns the vector together with the current delay max_b jvec[b].
/// Components must not exceed min(step, depth); violations throw.
std::pair<std::vector<double>, std::uint32_t> build_delayed_iterate(
    const IterateHistory& history, const BlockPartition& part,
    std::span<const std::uint32_t> jvec);

/// One synchronous round: every block in `subset` moves by -eta * S_b(x),
/// all residuals evaluated on the same input state.
void sync_km_step(std::vector<double>& x, const Operator& op, double eta,
                  std::span<const std::size_t> subset);

/// One asynchronous update: block i moves by -eta * S_i(xhat) where xhat is
/// the delayed iterate for jvec; the history advances by one step.
void arock_step(IterateHistory& history, const Operator& op, double eta, std::size_t i,
                std::span<const std::uint32_t> jvec);

/// Exact E[||x^{k+1} - x*||^2 | F^k] by enumerating the m equally likely block
/// choices for the given delay vector and step size. O(m * dim); m <= 1000.
double expected_next_sq_error(const IterateHistory& history, const Operator& op, double eta,
                              std::span<const std::uint32_t> jvec);

/// Exact E[xi^{k+1} | F^k] under the same enumeration, with xi built from the
/// given coefficients (the d-ring shifts by one, d_1 becoming the step just
/// taken). O(m * dim); m <= 1000.
double expected_next_lyapunov(const IterateHistory& history, const Operator& op, double eta,
                              std::span<const std::uint32_t> jvec,
                              const LyapunovCoefficients& coeffs);

struct BoundCheck {
  double lhs = 0.0;        // E[||x^{k+1} - x*||^2 | F^k]
  double rhs = 0.0;        // descent-lemma bound for the same state
  bool exact = true;       // enumeration (m <= 1000) vs Monte Carlo
  double std_error = 0.0;  // nonzero only for the Monte Carlo path
};

/// Checks the one-step descent inequality: lhs as above; rhs =
///   (1 - (eta/m)(1-r^2)(1 - eta D_j)) ||x - x*||^2
///   + (1/m) sum_{i<=j} (delta_i (1-r^2) + eps_i) d_i
///   - (eta/m) ||S xhat||^2 (1 - eta (1 + E_j))
/// with E_j = sum_{i<=j} 1/eps_i, D_j = sum_{i<=j} 1/delta_i and j the current
/// delay. Requires eta <= 1/(1 + E_j) and positive sequences covering i <= j.
/// Blocks are enumerated when m <= 1000, sampled otherwise.
BoundCheck exact_conditional_bound_check(const IterateHistory& history, const Operator& op,
                                         double eta, std::span<const std::uint32_t> jvec,
                                         std::span<const double> eps,
                                         std::span<const double> delta,
                                         std::size_t mc_samples = 10000,
                                         std::uint64_t mc_seed = 12345);

/// Runs the configured experiment and returns its trace. Deterministic given
/// the seed; rows hold the state before each update, metadata the run summary.
Trace run_experiment(const RunSpec& spec);

}  // namespace arock
