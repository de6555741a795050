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

#include "arock/live.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "arock/format.hpp"
#include "arock/rng.hpp"

namespace arock {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

struct Update {
  std::size_t block = 0;
  std::vector<double> residual;         // S_i of the worker's snapshot
  std::vector<std::uint64_t> counters;  // applied count seen at each block read
};

// One writer (the applier), p snapshot readers. Each block is guarded by its
// own version word: odd while a write is in flight, bumped by two per update.
struct SharedState {
  std::vector<std::atomic<double>> values;
  std::vector<std::atomic<std::uint64_t>> versions;
  std::atomic<std::uint64_t> applied{0};
  std::atomic<bool> stop{false};
  std::atomic<bool> failed{false};

  std::mutex apply_mtx;  // workers waiting for their own update to land
  std::condition_variable apply_cv;

  std::mutex queue_mtx;
  std::condition_variable queue_cv;
  std::deque<Update> queue;
  std::uint64_t next_ticket = 0;  // enqueue order == apply order

  std::mutex error_mtx;
  std::string error;

  SharedState(std::size_t dim, std::size_t blocks) : values(dim), versions(blocks) {}

  void fail(const char* what) {
    {
      std::lock_guard lk(error_mtx);
      if (error.empty()) error = what;
    }
    failed.store(true, std::memory_order_relaxed);
    stop.store(true, std::memory_order_relaxed);
    queue_cv.notify_all();
    {
      std::lock_guard lk(apply_mtx);
    }
    apply_cv.notify_all();
  }
};

void worker_main(std::size_t w, const LiveConfig& cfg, SharedState& st) {
  try {
    Rng rng(derive_seed(cfg.seed, 1) + w);
    const BlockPartition& part = cfg.op.partition();
    const std::size_t m = part.blocks();
    std::vector<double> snap(part.dim());
    std::uint64_t waiting_for = 0;  // applied count that releases the next read
    for (;;) {
      {
        std::unique_lock lk(st.apply_mtx);
        st.apply_cv.wait(lk, [&] {
          return st.stop.load(std::memory_order_relaxed) ||
                 st.applied.load(std::memory_order_relaxed) >= waiting_for;
        });
      }
      if (st.stop.load(std::memory_order_relaxed)) return;

      // Block-by-block snapshot; each block read is individually consistent,
      // the whole vector intentionally need not be. The applied counter is
      // read inside the stable window so it tags the block's age.
      std::vector<std::uint64_t> counters(m);
      for (std::size_t b = 0; b < m; ++b) {
        const std::size_t off = part.offset(b);
        const std::size_t len = part.size(b);
        for (;;) {
          const std::uint64_t v1 = st.versions[b].load(std::memory_order_acquire);
          if (v1 & 1) {
            std::this_thread::yield();
            continue;
          }
          for (std::size_t t = 0; t < len; ++t)
            snap[off + t] = st.values[off + t].load(std::memory_order_relaxed);
          counters[b] = st.applied.load(std::memory_order_relaxed);
          std::atomic_thread_fence(std::memory_order_acquire);
          if (st.versions[b].load(std::memory_order_relaxed) == v1) break;
        }
      }

      const std::size_t i = rng.uniform_index(m);
      Update up;
      up.block = i;
      up.residual.resize(part.size(i));
      cfg.op.apply_S_block(snap, i, up.residual);
      up.counters = std::move(counters);
      if (cfg.jitter_mean > 0.0)
        std::this_thread::sleep_for(
            std::chrono::duration<double>(rng.exponential(cfg.jitter_mean)));
      if (st.stop.load(std::memory_order_relaxed)) return;
      std::uint64_t ticket;
      {
        std::lock_guard lk(st.queue_mtx);
        ticket = st.next_ticket++;
        st.queue.push_back(std::move(up));
      }
      st.queue_cv.notify_one();
      waiting_for = ticket + 1;  // next snapshot only after this update lands
    }
  } catch (const std::exception& e) {
    st.fail(e.what());
  }
}

const LyapunovCoefficients* live_coefficients(const LiveConfig& cfg) {
  if (cfg.policy == StepPolicy::PlanStochastic) return &cfg.stochastic->coeffs;
  if (cfg.policy == StepPolicy::PlanDeterministic) return &cfg.deterministic->coeffs;
  return nullptr;
}

void validate_config(const LiveConfig& cfg) {
  require(cfg.workers >= 1, "run_live: need at least one worker");
  require(cfg.budget >= 1, "run_live: budget must be at least 1");
  require(cfg.jitter_mean >= 0.0 && std::isfinite(cfg.jitter_mean),
          "run_live: jitter mean must be >= 0");
  if (cfg.policy == StepPolicy::Fixed)
    require(cfg.eta > 0.0 && std::isfinite(cfg.eta), "run_live: eta must be positive");
  if (cfg.policy == StepPolicy::PlanStochastic) {
    require(cfg.stochastic.has_value(), "run_live: stochastic plan missing");
    require(cfg.stochastic->m == cfg.op.blocks() &&
                cfg.stochastic->r == cfg.op.contraction_factor(),
            "run_live: stochastic plan does not match the operator");
  }
  if (cfg.policy == StepPolicy::PlanDeterministic) {
    require(cfg.deterministic.has_value(), "run_live: deterministic plan missing");
    require(cfg.deterministic->m == cfg.op.blocks() &&
                cfg.deterministic->r == cfg.op.contraction_factor(),
            "run_live: deterministic plan does not match the operator");
  }
}

}  // namespace

LiveResult run_live(const LiveConfig& cfg) {
  validate_config(cfg);
  const Operator& op = cfg.op;
  const BlockPartition& part = op.partition();
  const std::size_t m = part.blocks();
  const std::size_t dim = part.dim();
  const double r = op.contraction_factor();
  const std::vector<double>& xstar = op.fixed_point();
  const LyapunovCoefficients* coeffs = live_coefficients(cfg);
  const std::size_t depth =
      std::min(std::max<std::size_t>(coeffs != nullptr ? coeffs->size() : 1, 1), cfg.depth_cap);

  const std::vector<double> x0 = initial_iterate(op, cfg.init, cfg.seed);
  SharedState st(dim, m);
  for (std::size_t i = 0; i < dim; ++i) st.values[i].store(x0[i], std::memory_order_relaxed);
  IterateHistory hist(x0, depth);

  LiveResult res;
  res.trace.rows.reserve(cfg.budget);
  res.apply_times.reserve(cfg.budget);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::thread> workers;
  workers.reserve(cfg.workers);
  for (std::size_t w = 0; w < cfg.workers; ++w)
    workers.emplace_back(worker_main, w, std::cref(cfg), std::ref(st));

  for (std::uint64_t k = 0; k < cfg.budget; ++k) {
    Update up;
    {
      std::unique_lock lk(st.queue_mtx);
      st.queue_cv.wait(lk, [&] {
        return !st.queue.empty() || st.failed.load(std::memory_order_relaxed);
      });
      if (st.failed.load(std::memory_order_relaxed)) break;
      up = std::move(st.queue.front());
      st.queue.pop_front();
    }

    std::uint32_t current_delay = 0;
    for (std::size_t b = 0; b < m; ++b) {
      const auto age = static_cast<std::uint32_t>(k - up.counters[b]);
      current_delay = std::max(current_delay, age);
      ++res.age_histogram[age];
    }

    double eta = cfg.eta;
    if (cfg.policy == StepPolicy::PlanStochastic) eta = cfg.stochastic->eta1;
    if (cfg.policy == StepPolicy::PlanDeterministic)
      eta = cfg.deterministic->H1(static_cast<double>(current_delay));

    const double sq = sq_dist(hist.current(), xstar);
    const double xi =
        coeffs != nullptr ? lyapunov_value(hist, *coeffs, xstar, m, cfg.tail_tol) : sq;
    double factor = kNan;
    if (cfg.policy == StepPolicy::PlanStochastic)
      factor = rate_bound(eta, cfg.stochastic->eta2, m, r);
    if (cfg.policy == StepPolicy::PlanDeterministic)
      factor = rate_bound(eta, cfg.deterministic->H2(static_cast<double>(current_delay)), m, r);

    TraceRow row;
    row.k = k;
    row.block = static_cast<std::int64_t>(up.block);
    row.delay = static_cast<std::int64_t>(current_delay);
    row.eta = eta;
    row.sq_error = sq;
    row.lyapunov = xi;
    row.bound = std::isnan(factor) ? kNan : factor * xi;
    res.trace.rows.push_back(row);
    res.apply_times.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    ++res.delay_histogram[current_delay];
    if (k >= cfg.budget / 2) ++res.delay_histogram_window[current_delay];

    std::vector<double>& next = hist.scratch();
    next = hist.current();
    const std::size_t off = part.offset(up.block);
    for (std::size_t t = 0; t < up.residual.size(); ++t) next[off + t] -= eta * up.residual[t];
    hist.commit();

    const std::vector<double>& cur = hist.current();
    const std::uint64_t v = st.versions[up.block].load(std::memory_order_relaxed);
    st.versions[up.block].store(v + 1, std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_release);
    for (std::size_t t = 0; t < up.residual.size(); ++t)
      st.values[off + t].store(cur[off + t], std::memory_order_relaxed);
    st.versions[up.block].store(v + 2, std::memory_order_release);
    st.applied.store(k + 1, std::memory_order_release);
    {
      std::lock_guard lk(st.apply_mtx);
    }
    st.apply_cv.notify_all();
    ++res.applied;
  }

  st.stop.store(true, std::memory_order_relaxed);
  {
    std::lock_guard lk(st.apply_mtx);
  }
  st.apply_cv.notify_all();
  for (std::thread& t : workers) t.join();

  res.final_x = hist.current();
  res.completed = !st.failed.load(std::memory_order_relaxed) && res.applied == cfg.budget;
  {
    std::lock_guard lk(st.error_mtx);
    res.error = st.error;
  }

  Trace& trace = res.trace;
  trace.meta["schema"] = "1";
  trace.meta["mode"] = "live";
  trace.meta["operator"] = op.describe();
  trace.meta["dim"] = fmt_u64(dim);
  trace.meta["m"] = fmt_u64(m);
  trace.meta["p"] = fmt_u64(cfg.workers);
  trace.meta["r"] = fmt_double(r);
  trace.meta["eta_policy"] = cfg.policy == StepPolicy::Fixed ? "fixed"
                             : cfg.policy == StepPolicy::PlanStochastic ? "stochastic_plan"
                                                                        : "deterministic_plan";
  if (cfg.policy == StepPolicy::Fixed) trace.meta["eta"] = fmt_double(cfg.eta);
  if (cfg.policy == StepPolicy::PlanStochastic)
    trace.meta["eta"] = fmt_double(cfg.stochastic->eta1);
  trace.meta["delay_model"] = "measured";
  trace.meta["seed"] = fmt_u64(cfg.seed);
  trace.meta["iterations"] = fmt_u64(cfg.budget);
  trace.meta["depth"] = fmt_u64(depth);
  trace.meta["init"] = cfg.init == InitKind::Ones ? "ones" : "random_sphere";
  trace.meta["jitter_mean"] = fmt_double(cfg.jitter_mean);
  trace.meta["valid"] = res.completed ? "1" : "0";
  if (cfg.policy == StepPolicy::PlanStochastic) {
    trace.meta["rho"] = fmt_double(cfg.stochastic->rho);
    trace.meta["plan_eta1"] = fmt_double(cfg.stochastic->eta1);
    trace.meta["plan_eta2"] = fmt_double(cfg.stochastic->eta2);
    trace.meta["plan_rate"] = fmt_double(cfg.stochastic->rate);
  }
  if (cfg.policy == StepPolicy::PlanDeterministic) {
    trace.meta["rho"] = fmt_double(cfg.deterministic->rho);
    trace.meta["gamma"] = fmt_double(cfg.deterministic->gamma);
    trace.meta["horizon"] = fmt_double(cfg.deterministic->horizon);
    trace.meta["boundary_rate"] = fmt_double(cfg.deterministic->boundary_rate);
  }
  if (cfg.policy == StepPolicy::PlanStochastic)
    trace.meta["predicted_rate"] = fmt_double(cfg.stochastic->rate);
  if (cfg.policy == StepPolicy::PlanDeterministic)
    trace.meta["predicted_rate"] = fmt_double(cfg.deterministic->boundary_rate);
  trace.meta["final_sq_error"] = fmt_double(sq_dist(res.final_x, xstar));
  if (trace.rows.size() >= 10) {
    std::vector<double> ys(trace.rows.size());
    for (std::size_t i = 0; i < trace.rows.size(); ++i)
      ys[i] = coeffs != nullptr ? trace.rows[i].lyapunov : trace.rows[i].sq_error;
    try {
      trace.meta["fitted_rate"] = fmt_double(fit_geometric_rate(ys));
    } catch (const std::exception&) {
      // Runs that sit at the fixed point have no usable fit.
    }
  }
  return res;
}

DelayModel fit_delay_model(const LiveResult& result) {
  require(!result.delay_histogram.empty(), "fit_delay_model: empty delay histogram");
  return DelayModel::empirical(result.delay_histogram, DelaySampling::SharedAge);
}

}  // namespace arock
