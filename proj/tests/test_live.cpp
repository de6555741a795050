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

#include <cstdint>
#include <vector>

#include "arock/live.hpp"
#include "doctest.h"

using namespace arock;

namespace {

Operator identity_op(std::size_t m, double r) {
  return Operator::scaled_identity(r, BlockPartition::uniform(m, 1));
}

}  // namespace

TEST_SUITE("live") {

TEST_CASE("a single worker replays the sequential zero-delay run") {
  const std::size_t m = 10;
  const std::uint64_t seed = 5;
  LiveConfig cfg(identity_op(m, 0.9));
  cfg.workers = 1;
  cfg.budget = 300;
  cfg.seed = seed;
  const LiveResult live = run_live(cfg);
  REQUIRE(live.completed);
  REQUIRE(live.applied == 300);

  RunSpec spec(identity_op(m, 0.9));
  spec.iterations = 300;
  spec.seed = seed;
  const Trace seq = run_experiment(spec);
  REQUIRE(live.trace.rows.size() == seq.rows.size());
  for (std::size_t k = 0; k < seq.rows.size(); ++k) {
    CHECK(live.trace.rows[k].block == seq.rows[k].block);
    CHECK(live.trace.rows[k].sq_error == seq.rows[k].sq_error);
  }
  CHECK(live.trace.meta_str("final_sq_error") == seq.meta_str("final_sq_error"));
  // with one worker nothing can be stale
  CHECK(live.delay_histogram.size() == 1);
  CHECK(live.delay_histogram.count(0) == 1);
}

TEST_CASE("single-worker runs replay exactly") {
  LiveConfig cfg(identity_op(6, 0.8));
  cfg.workers = 1;
  cfg.budget = 200;
  cfg.seed = 12;
  const LiveResult a = run_live(cfg), b = run_live(cfg);
  REQUIRE(a.completed);
  REQUIRE(b.completed);
  REQUIRE(a.trace.rows.size() == b.trace.rows.size());
  for (std::size_t k = 0; k < a.trace.rows.size(); ++k)
    CHECK(a.trace.format_row(k) == b.trace.format_row(k));
  CHECK(a.final_x == b.final_x);
}

TEST_CASE("parallel workers fill the delay accounting") {
  const std::size_t m = 50;
  LiveConfig cfg(identity_op(m, 0.9));
  cfg.workers = 4;
  cfg.budget = 4000;
  cfg.seed = 31;
  cfg.eta = 0.6;
  cfg.jitter_mean = 1e-5;
  const LiveResult res = run_live(cfg);
  REQUIRE(res.completed);
  CHECK(res.applied == 4000);
  CHECK(res.trace.rows.size() == 4000);
  CHECK(res.apply_times.size() == 4000);
  for (std::size_t i = 1; i < res.apply_times.size(); ++i)
    CHECK(res.apply_times[i] >= res.apply_times[i - 1]);

  std::uint64_t total = 0;
  for (const auto& [age, count] : res.delay_histogram) {
    (void)age;
    total += count;
  }
  CHECK(total == 4000);
  std::uint64_t ages_total = 0;
  for (const auto& [age, count] : res.age_histogram) {
    (void)age;
    ages_total += count;
  }
  CHECK(ages_total == 4000 * m);
  // every applied update used a positive step on some block
  for (const auto& row : res.trace.rows) {
    CHECK(row.eta == 0.6);
    CHECK(row.block >= 0);
    CHECK(row.block < static_cast<std::int64_t>(m));
  }
}

TEST_CASE("measured delays round trip into a usable plan") {
  const std::size_t m = 40;
  LiveConfig cfg(identity_op(m, 0.9));
  cfg.workers = 3;
  cfg.budget = 3000;
  cfg.seed = 8;
  cfg.jitter_mean = 1e-5;
  const LiveResult res = run_live(cfg);
  REQUIRE(res.completed);
  const DelayModel fitted = fit_delay_model(res);
  CHECK(fitted.histogram() == res.delay_histogram);
  CHECK(fitted.sampling() == DelaySampling::SharedAge);
  const auto plan = stochastic_plan(m, 0.9, fitted);
  CHECK(plan.eta1 > 0.0);
  CHECK(plan.eta1 <= 1.0);
  CHECK(plan.rate < 1.0);
}

TEST_CASE("plan-driven live runs stamp the plan step on every update") {
  const std::size_t m = 20;
  LiveConfig cfg(identity_op(m, 0.7));
  cfg.workers = 2;
  cfg.budget = 500;
  cfg.seed = 77;
  cfg.policy = StepPolicy::PlanStochastic;
  cfg.stochastic = stochastic_plan(m, 0.7, DelayModel::geometric(0.5));
  const LiveResult res = run_live(cfg);
  REQUIRE(res.completed);
  for (const auto& row : res.trace.rows) CHECK(row.eta == cfg.stochastic->eta1);
  CHECK(res.trace.meta_double("plan_eta1") == cfg.stochastic->eta1);
}

TEST_CASE("config validation fails fast") {
  LiveConfig none(identity_op(4, 0.5));
  none.workers = 0;
  CHECK_THROWS((void)run_live(none));

  LiveConfig empty(identity_op(4, 0.5));
  empty.budget = 0;
  CHECK_THROWS((void)run_live(empty));

  LiveConfig mismatch(identity_op(4, 0.5));
  mismatch.policy = StepPolicy::PlanStochastic;
  mismatch.stochastic = stochastic_plan(8, 0.5, DelayModel::zero());
  CHECK_THROWS((void)run_live(mismatch));
}

}  // TEST_SUITE
