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
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "arock/rng.hpp"

namespace arock {

/// How a delay vector is drawn from the scalar age distribution.
///
/// PerBlock draws every component independently from the marginal; the
/// current delay (the max over blocks) is then stochastically larger than
/// that marginal, so rate plans built from tail_prob are optimistic under it.
/// SharedAge gives all components one common draw, which makes the current
/// delay's tail exactly tail_prob; rate-plan verification runs use it.
enum class DelaySampling { PerBlock, SharedAge };

struct DelayMoments {
  double M1 = 0.0;          // sum_l P_l rho^{-l/2}
  double M2 = 0.0;          // sum_l sqrt(P_l) rho^{-l/2}
  std::size_t terms = 0;    // summands evaluated before truncation
  bool diverged = false;    // partial sums grew instead of settling
  double tail_estimate = 0.0;
};

/// Distribution (or schedule) of the per-iteration delay vector.
///
/// Stochastic and Empirical kinds expose the scalar age tail
/// P_l = P[age >= l]; Deterministic is a shared-age schedule indexed by the
/// iteration counter. Samples are always clamped to the current iteration
/// count so early reads never predate x^0.
class DelayModel {
public:
  enum class Kind { Stochastic, Deterministic, Empirical };

  static DelayModel zero();
  static DelayModel fixed_age(std::uint32_t tau, DelaySampling s = DelaySampling::SharedAge);
  static DelayModel geometric(double pbar, DelaySampling s = DelaySampling::PerBlock);
  static DelayModel bounded_uniform(std::uint32_t tau, DelaySampling s = DelaySampling::PerBlock);
  static DelayModel empirical(std::map<std::uint32_t, std::uint64_t> histogram,
                              DelaySampling s = DelaySampling::SharedAge);
  /// Shared age ages[k] at iteration k; sampling past the end is an error.
  static DelayModel schedule(std::vector<std::uint32_t> ages);

  Kind kind() const { return kind_; }
  DelaySampling sampling() const { return sampling_; }
  std::string describe() const;

  /// Tail P_l of the scalar age distribution, l >= 0 (P_0 = 1).
  /// Throws for deterministic schedules.
  double tail_prob(std::uint32_t l) const;

  /// Largest age with positive probability (schedule: largest scheduled age);
  /// UINT32_MAX when unbounded.
  std::uint32_t max_age() const;

  /// History depth that keeps the ignored tail below tol: smallest l with
  /// P_l < tol, capped. Schedules return their max age.
  std::size_t suggested_depth(double tol = 1e-12, std::size_t cap = 100000) const;

  /// Draws the delay vector for iteration k into out (one entry per block),
  /// clamping every component to k. Deterministic schedules ignore rng.
  void sample_ages(Rng& rng, std::uint64_t k, std::span<std::uint32_t> out) const;

  const std::map<std::uint32_t, std::uint64_t>& histogram() const;
  std::uint64_t schedule_length() const { return static_cast<std::uint64_t>(schedule_.size()); }

private:
  DelayModel() = default;
  std::uint32_t sample_one(Rng& rng) const;

  Kind kind_ = Kind::Stochastic;
  DelaySampling sampling_ = DelaySampling::SharedAge;
  std::string name_ = "zero";
  // stochastic built-ins
  double pbar_ = 0.0;       // geometric
  std::uint32_t tau_ = 0;   // fixed / bounded-uniform
  enum class Family { Zero, Fixed, Geometric, BoundedUniform, Empirical } family_ = Family::Zero;
  // empirical
  std::map<std::uint32_t, std::uint64_t> hist_;
  std::vector<std::uint32_t> hist_ages_;
  std::vector<std::uint64_t> hist_cum_;
  std::uint64_t hist_total_ = 0;
  // deterministic
  std::vector<std::uint32_t> schedule_;
};

/// Convenience wrapper: sample the m-component delay vector at iteration k.
std::vector<std::uint32_t> sample_delay_vector(const DelayModel& model, Rng& rng, std::uint64_t k,
                                               std::size_t m);

/// Truncated sums M1 and M2 used by the stochastic rate plan. Terms stop once
/// they stay below tol times the running sum for 10 consecutive l; the
/// diverged flag is set when terms fail to decrease over a 100-term window.
DelayMoments delay_moments(const DelayModel& model, double rho, double tol = 1e-12,
                           std::size_t max_terms = 200000);

/// Age histogram CSV: "age,count" with a header line.
std::map<std::uint32_t, std::uint64_t> load_histogram(const std::string& path);
void save_histogram(const std::map<std::uint32_t, std::uint64_t>& hist, const std::string& path);

}  // namespace arock
