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

#include "arock/timing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <stdexcept>
#include <utility>

#include "arock/rng.hpp"

namespace arock {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double update_duration(const TimingModel& model, Rng& rng) {
  const double c =
      model.constant_cost() ? model.cost[0] : model.cost[rng.uniform_index(model.m)];
  return c + rng.exponential(model.lambda) + rng.exponential(model.lambda);
}

double sync_trial(const TimingModel& model, std::size_t epochs, Rng& rng) {
  const std::size_t updates = epochs * model.m;
  const std::size_t iterations = (updates + model.p - 1) / model.p;
  double total = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    double round = 0.0;
    for (std::size_t l = 0; l < model.p; ++l)
      round = std::max(round, update_duration(model, rng));
    total += round;
  }
  return total;
}

double async_trial(const TimingModel& model, std::size_t epochs, Rng& rng) {
  const std::size_t updates = epochs * model.m;
  using Event = std::pair<double, std::size_t>;  // (completion time, node)
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue;
  for (std::size_t l = 0; l < model.p; ++l) queue.emplace(update_duration(model, rng), l);
  double t = 0.0;
  for (std::size_t e = 0; e < updates; ++e) {
    const auto [when, node] = queue.top();
    queue.pop();
    t = when;
    queue.emplace(when + update_duration(model, rng), node);
  }
  return t;
}

}  // namespace

double TimingModel::cost_max() const {
  validate();
  return *std::max_element(cost.begin(), cost.end());
}

double TimingModel::cost_mean() const {
  validate();
  double acc = 0.0;
  for (const double c : cost) acc += c;
  return acc / static_cast<double>(cost.size());
}

void TimingModel::validate() const {
  require(p >= 1, "TimingModel: need at least one node");
  require(m >= 1, "TimingModel: need at least one block");
  require(lambda >= 0.0 && std::isfinite(lambda), "TimingModel: lambda must be >= 0");
  require(cost.size() == 1 || cost.size() == m,
          "TimingModel: cost table must be constant or one entry per block");
  for (const double c : cost)
    require(c >= 0.0 && std::isfinite(c), "TimingModel: costs must be >= 0");
}

double harmonic(std::size_t p) {
  double h = 0.0;
  for (std::size_t l = 1; l <= p; ++l) h += 1.0 / static_cast<double>(l);
  return h;
}

SyncTimeBound sync_iteration_time_bound(const TimingModel& model) {
  model.validate();
  require(model.constant_cost(),
          "sync_iteration_time_bound: constant cost only; simulate heterogeneous models");
  SyncTimeBound out;
  out.harmonic = harmonic(model.p);
  out.bound = model.cost[0] + model.lambda * out.harmonic;
  return out;
}

ThroughputResult simulate_throughput(const TimingModel& model, TimingMode mode, std::size_t epochs,
                                     std::size_t trials, std::uint64_t seed) {
  model.validate();
  require(epochs >= 1, "simulate_throughput: need at least one epoch");
  require(trials >= 1, "simulate_throughput: need at least one trial");
  double mean = 0.0, msq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, 1000 + t));
    const double value =
        mode == TimingMode::Sync ? sync_trial(model, epochs, rng) : async_trial(model, epochs, rng);
    const double d = value - mean;
    mean += d / static_cast<double>(t + 1);
    msq += d * (value - mean);
  }
  ThroughputResult out;
  out.mean = mean;
  out.trials = trials;
  out.std_error = trials >= 2 ? std::sqrt(msq / (static_cast<double>(trials - 1) *
                                                 static_cast<double>(trials)))
                              : 0.0;
  return out;
}

HeteroLimits hetero_limits(std::span<const double> cost) {
  require(!cost.empty(), "hetero_limits: empty cost table");
  HeteroLimits out;
  double acc = 0.0;
  for (const double c : cost) {
    require(c >= 0.0 && std::isfinite(c), "hetero_limits: costs must be >= 0");
    out.sync_limit = std::max(out.sync_limit, c);
    acc += c;
  }
  out.async_mean = acc / static_cast<double>(cost.size());
  return out;
}

}  // namespace arock
