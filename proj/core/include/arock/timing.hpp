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
#include <span>
#include <vector>

namespace arock {

/// Wall-clock model for one block update on a worker node: duration
/// C(i) + R + S where R and S are independent exponentials with mean lambda
/// (network receive/send) and C(i) is the compute cost of the chosen block.
struct TimingModel {
  std::size_t p = 1;       // worker nodes
  std::size_t m = 1;       // blocks
  double lambda = 0.0;     // mean of each exponential leg
  std::vector<double> cost = {0.0};  // size 1: constant; size m: per block

  bool constant_cost() const { return cost.size() == 1; }
  double cost_max() const;
  double cost_mean() const;
  void validate() const;
};

enum class TimingMode { Sync, Async };

/// H_p = sum_{l=1..p} 1/l, accumulated in ascending order.
double harmonic(std::size_t p);

struct SyncTimeBound {
  double bound = 0.0;     // C + lambda * H_p
  double harmonic = 0.0;  // H_p
};

/// Lower bound on the expected synchronous iteration time C + E max_l(R_l+S_l):
/// the max over p of one exponential leg already costs lambda * H_p. Constant
/// cost only; heterogeneous models need simulate_throughput.
SyncTimeBound sync_iteration_time_bound(const TimingModel& model);

struct ThroughputResult {
  double mean = 0.0;       // time to complete K epochs, averaged over trials
  double std_error = 0.0;  // zero for a single trial
  std::size_t trials = 0;
};

/// Simulates the time for K epochs (K*m block updates). Sync mode runs
/// ceil(K*m/p) barrier rounds, each lasting the max node duration; async mode
/// superposes p renewal streams and reports the time of the (K*m)-th update.
/// Each trial uses an independent stream derived from the seed, and trials are
/// reduced in order, so results are reproducible.
ThroughputResult simulate_throughput(const TimingModel& model, TimingMode mode, std::size_t epochs,
                                     std::size_t trials, std::uint64_t seed);

struct HeteroLimits {
  double sync_limit = 0.0;  // max_i C(i): the barrier waits for the hardest block
  double async_mean = 0.0;  // (1/m) sum_i C(i): average per-update cost
};

/// Large-p iteration-time limits for a per-block cost table.
HeteroLimits hetero_limits(std::span<const double> cost);

}  // namespace arock
