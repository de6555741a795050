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

// End-to-end acceptance checks for the library's shipped guarantees. Each
// check prints exactly one [PASS]/[FAIL] line; the exit code is the number of
// failures. Tolerances are pinned here on purpose: exact identities get
// 1e-12-scale bounds, Monte Carlo checks get explicit standard-error bands.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "arock/engine.hpp"
#include "arock/format.hpp"
#include "arock/live.hpp"
#include "arock/timing.hpp"

using namespace arock;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void info(const std::string& text) {
    if (pass) detail = text;
  }
};

Operator identity_op(std::size_t m, double r) {
  return Operator::scaled_identity(r, BlockPartition::uniform(m, 1));
}

std::vector<double> linspace_diag(std::size_t dim, double lo, double hi) {
  std::vector<double> d(dim);
  for (std::size_t i = 0; i < dim; ++i)
    d[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(dim - 1);
  d.front() = lo;  // pin the endpoints so the factor is attained exactly
  d.back() = hi;
  return d;
}

// Symmetric contraction H diag(d) H with H a Householder reflection; the
// operator norm is max |d_i|, pinned to r by the first entry.
Operator random_symmetric_contraction(Rng& rng, std::size_t dim, double r, BlockPartition part) {
  const auto v = rng.unit_vector(dim);
  std::vector<double> d(dim);
  for (auto& x : d) x = (2.0 * rng.uniform01() - 1.0) * r;
  d[0] = -r;
  std::vector<double> hd(dim * dim), a(dim * dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t k = 0; k < dim; ++k)
      hd[i * dim + k] = ((i == k ? 1.0 : 0.0) - 2.0 * v[i] * v[k]) * d[k];
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k)
        acc += hd[i * dim + k] * ((k == j ? 1.0 : 0.0) - 2.0 * v[k] * v[j]);
      a[i * dim + j] = acc;
    }
  return Operator::linear(std::move(a), r, std::move(part));
}

double mean_of(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double stderr_of(const std::vector<double>& xs) {
  const double mu = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - mu) * (x - mu);
  const auto n = static_cast<double>(xs.size());
  return std::sqrt(acc / (n - 1.0) / n);
}

// 1. One-step expectation of the synchronous single-block update, enumerated
// over the block choice, against the sharp closed form on both step branches.
Outcome check_sharp_sync_ratio() {
  Outcome out;
  const std::size_t m = 10;
  const double r = 0.9;
  Rng rng(1001);
  const auto x0 = rng.unit_vector(m);
  const std::vector<std::uint32_t> jvec(m, 0);

  IterateHistory h1(x0, 1);
  const auto op = identity_op(m, r);
  const double ratio1 = expected_next_sq_error(h1, op, 1.0, jvec) / sq_norm(x0);
  out.expect(std::abs(ratio1 - 0.981) <= 1e-12,
             "identity branch off: " + fmt_double(ratio1) + " vs 0.981");
  out.expect(std::abs(sync_sharp_ratio(m, 1, r, 1.0) - 0.981) <= 1e-12,
             "closed form off at eta = 1");

  IterateHistory h2(x0, 1);
  const auto opn = Operator::negated_scaled_identity(r, BlockPartition::uniform(m, 1));
  const double ratio2 = expected_next_sq_error(h2, opn, 1.2, jvec) / sq_norm(x0);
  const double formula2 = sync_sharp_ratio(m, 1, r, 1.2);
  out.expect(std::abs(ratio2 - 1.06384) <= 1e-12,
             "negated branch off: " + fmt_double(ratio2) + " vs 1.06384");
  out.expect(std::abs(ratio2 - formula2) <= 1e-12, "negated branch disagrees with closed form");
  out.info("ratios " + fmt_double(ratio1) + " and " + fmt_double(ratio2) + ", gaps <= 1e-12");
  return out;
}

// 2. Gradient-step contraction factor: exact on the two extreme quadratics,
// an upper bound on the mixed one, and the algebraic rate identity.
Outcome check_gradient_contraction() {
  Outcome out;
  const std::size_t dim = 8;
  const auto part = BlockPartition::uniform(dim, 1);
  for (double v : {1.0, 3.0}) {
    const auto op = make_gd_operator(std::vector<double>(dim, v), 1.0, 3.0, part);
    const auto rep = contraction_check(op, 400, 20260819);
    out.expect(std::abs(rep.max_ratio - 0.5) <= 1e-12,
               "extreme quadratic " + fmt_double(v) + " measured " + fmt_double(rep.max_ratio));
    out.expect(rep.passed, "declared factor violated");
  }
  const auto mixed = make_gd_operator(linspace_diag(dim, 1.0, 3.0), 1.0, 3.0, part);
  out.expect(mixed.contraction_factor() == 0.5, "factor must be 1 - 2/(kappa+1) = 0.5");
  out.expect(contraction_check(mixed, 400, 77).max_ratio <= 0.5 + 1e-12,
             "mixed quadratic exceeds the factor");
  const double kappa = mixed.kappa();
  const double lhs = 1.0 - 0.5 * 0.5;
  const double rhs = 4.0 * kappa / ((kappa + 1.0) * (kappa + 1.0));
  out.expect(lhs == rhs, "1 - r^2 != 4 kappa/(kappa+1)^2 exactly");
  out.info("factor 0.5 attained, 1 - r^2 = " + fmt_double(lhs) + " exactly");
  return out;
}

// 3. Coefficient series against the geometric closed form c_i = 4^{1-i} and
// its defining recurrence, out to i = 50.
Outcome check_coefficient_series() {
  Outcome out;
  const auto toy = general_coefficients(
      0.5, [](std::size_t l) { return std::pow(4.0, -static_cast<double>(l)); }, 1e-30);
  out.expect(toy.size() >= 51, "series truncated before i = 50");
  double worst_form = 0.0, worst_rec = 0.0;
  for (std::size_t i = 1; i <= 50 && i <= toy.size(); ++i) {
    const double expect = std::pow(4.0, 1.0 - static_cast<double>(i));
    worst_form = std::max(worst_form, std::abs(toy.at(i) - expect) / expect);
    const double lhs = 0.5 * toy.at(i);
    const double rhs = toy.at(i + 1) + toy.s[i - 1];
    worst_rec = std::max(worst_rec, std::abs(lhs - rhs) / lhs);
  }
  out.expect(worst_form <= 1e-12, "closed-form gap " + fmt_double(worst_form));
  out.expect(worst_rec <= 1e-12, "recurrence residual " + fmt_double(worst_rec));
  out.info("closed-form gap " + fmt_double(worst_form) + ", recurrence residual " +
           fmt_double(worst_rec));
  return out;
}

// 4. Supermartingale property of the Lyapunov value under a finite-support
// age distribution: the exact expectation over blocks and ages contracts by
// the planned rate on a thousand random states.
Outcome check_stochastic_supermartingale() {
  Outcome out;
  const auto model = DelayModel::empirical({{0, 5}, {1, 3}, {2, 2}});
  const double page[3] = {0.5, 0.3, 0.2};
  Rng rng(4001);
  double worst = -kInf;
  std::size_t states = 0;
  for (std::size_t m : {std::size_t{4}, std::size_t{16}}) {
    const std::size_t dim = m == 4 ? 8 : 16;
    const auto part = BlockPartition::uniform(m, dim / m);
    std::vector<Operator> ops;
    ops.push_back(random_symmetric_contraction(rng, dim, 0.8, part));
    ops.push_back(make_gd_operator(linspace_diag(dim, 1.0, 3.0), 1.0, 3.0, part));
    for (const auto& op : ops) {
      const auto plan = stochastic_plan(m, op.contraction_factor(), model);
      const std::size_t depth = std::max<std::size_t>(2, plan.coeffs.size());
      for (std::size_t t = 0; t < 250; ++t) {
        IterateHistory h(rng.gaussian_vector(dim), depth);
        h.scratch() = rng.gaussian_vector(dim);
        h.commit();
        h.scratch() = rng.gaussian_vector(dim);
        h.commit();
        const double xi = lyapunov_value(h, plan.coeffs, op.fixed_point(), m);
        double e_next = 0.0;
        for (std::uint32_t a = 0; a <= 2; ++a) {
          const std::vector<std::uint32_t> jvec(m, a);
          e_next += page[a] * expected_next_lyapunov(h, op, plan.eta1, jvec, plan.coeffs);
        }
        worst = std::max(worst, e_next - (plan.rate * xi + 1e-9));
        ++states;
      }
    }
  }
  out.expect(states == 1000, "expected 1000 states, saw " + std::to_string(states));
  out.expect(worst <= 0.0, "bound violated by " + fmt_double(worst));
  out.info("1000 states, worst slack " + fmt_double(worst));
  return out;
}

// 5. Without delays the plan collapses to the classical iteration and the
// asynchronous run replays the single-block synchronous run bit for bit.
Outcome check_zero_delay_reduction() {
  Outcome out;
  const std::size_t m = 50;
  const double r = 0.9;
  const auto plan = stochastic_plan(m, r, DelayModel::zero());
  out.expect(plan.eta1 == 1.0, "eta1 must collapse to 1");
  out.expect(plan.coeffs.size() == 0, "coefficients must vanish");
  out.expect(plan.rate == plan.rho, "rate must collapse to the synchronous rho");
  out.expect(plan.eta2 == kInf, "no penalty scale without delays");

  RunSpec a(identity_op(m, r));
  a.policy = StepPolicy::PlanStochastic;
  a.stochastic = plan;
  a.iterations = 2000;
  a.seed = 424;
  a.init = InitKind::RandomSphere;
  RunSpec b(identity_op(m, r));
  b.mode = RunMode::Sync;
  b.p = 1;
  b.eta = 1.0;
  b.iterations = 2000;
  b.seed = 424;
  b.init = InitKind::RandomSphere;
  const Trace ta = run_experiment(a), tb = run_experiment(b);
  std::size_t mismatched = 0;
  for (std::size_t k = 0; k < ta.rows.size(); ++k) {
    if (ta.rows[k].block != tb.rows[k].block || ta.rows[k].sq_error != tb.rows[k].sq_error ||
        ta.rows[k].lyapunov != ta.rows[k].sq_error)
      ++mismatched;
  }
  out.expect(ta.rows.size() == tb.rows.size() && mismatched == 0,
             std::to_string(mismatched) + " of " + std::to_string(ta.rows.size()) +
                 " rows differ");
  out.expect(ta.meta_str("final_sq_error") == tb.meta_str("final_sq_error"),
             "final errors differ");
  out.info("2000 rows bit-identical, eta1 = 1, rate = rho");
  return out;
}

// 6. Deterministic-delay per-step bound under an adversarial schedule with
// spikes far above the horizon, plus the boundary rate on a tame run.
Outcome check_deterministic_bound() {
  Outcome out;
  const std::size_t m = 100;
  const double r = 0.9;
  const auto dp = deterministic_plan(m, r, 0.25, 1.0, 1.0, 0.0);
  out.expect(std::abs(dp.boundary_rate - 0.9994800744789248) <= 1e-13,
             "boundary rate drifted: " + fmt_double(dp.boundary_rate));
  out.expect(std::abs(dp.penalty - 2.238077583077168) <= 1e-13,
             "penalty drifted: " + fmt_double(dp.penalty));

  // spikes of 40..650 dwarf the horizon T = b m^q + d ~ 3.16
  std::vector<std::uint32_t> ages(1000);
  for (std::size_t k = 0; k < ages.size(); ++k)
    ages[k] = static_cast<std::uint32_t>(k % 5);
  ages[50] = 40;
  ages[333] = 300;
  ages[334] = 120;
  ages[700] = 650;
  ages[999] = 40;

  const auto op = identity_op(m, r);
  const std::size_t depth = std::max<std::size_t>(dp.coeffs.size(), 650);
  IterateHistory h(initial_iterate(op, InitKind::RandomSphere, 606), depth);
  Rng blocks(606);
  std::vector<std::uint32_t> jvec(m, 0);
  double worst = -kInf;
  for (std::size_t k = 0; k < ages.size(); ++k) {
    const std::uint32_t j = ages[k];
    jvec.assign(m, j);
    const double eta = dp.H1(static_cast<double>(j));
    const double xi = lyapunov_value(h, dp.coeffs, op.fixed_point(), m);
    const double e_next = expected_next_lyapunov(h, op, eta, jvec, dp.coeffs);
    const double bound = rate_bound(eta, dp.H2(static_cast<double>(j)), m, r) * xi + 1e-9;
    worst = std::max(worst, e_next - bound);
    arock_step(h, op, eta, blocks.uniform_index(m), jvec);
  }
  out.expect(worst <= 0.0, "per-step bound violated by " + fmt_double(worst));

  // below the horizon the whole-run decay stays under the boundary rate
  std::vector<std::uint32_t> tame(1000);
  for (std::size_t k = 0; k < tame.size(); ++k)
    tame[k] = static_cast<std::uint32_t>(k % 4);
  RunSpec spec(identity_op(m, r));
  spec.policy = StepPolicy::PlanDeterministic;
  spec.deterministic = dp;
  spec.delays = DelayModel::schedule(tame);
  spec.iterations = 1000;
  spec.seed = 607;
  spec.init = InitKind::RandomSphere;
  const Trace tr = run_experiment(spec);
  const double fitted = tr.meta_double("fitted_rate");
  out.expect(fitted <= 0.9994800744789248 + 1e-12,
             "tame-run rate " + fmt_double(fitted) + " above the boundary rate");
  out.info("worst per-step slack " + fmt_double(worst) + ", tame-run rate " + fmt_double(fitted));
  return out;
}

// 7. Long-run Lyapunov decay of the asynchronous iteration sits between the
// ideal synchronous rho and the planned rate, within Monte Carlo error.
Outcome check_empirical_rate_band() {
  Outcome out;
  const std::size_t m = 100;
  const double r = 0.9;
  const auto model = DelayModel::geometric(0.5, DelaySampling::SharedAge);
  const auto plan = stochastic_plan(m, r, model);
  out.expect(std::abs(plan.eta1 - 0.6544131445848974) <= 1e-12, "plan step drifted");
  out.expect(std::abs(plan.rate - 0.9987921503891684) <= 1e-12, "plan rate drifted");

  const std::size_t iters = 100000;
  const std::size_t seeds = 32;
  std::vector<double> mean_xi(iters, 0.0);
  std::vector<double> fits;
  fits.reserve(seeds);
  for (std::size_t s = 0; s < seeds; ++s) {
    RunSpec spec(identity_op(m, r));
    spec.policy = StepPolicy::PlanStochastic;
    spec.stochastic = plan;
    spec.delays = model;
    spec.iterations = iters;
    spec.seed = 9000 + s;
    spec.init = InitKind::RandomSphere;
    const Trace tr = run_experiment(spec);
    for (std::size_t k = 0; k < iters; ++k) mean_xi[k] += tr.rows[k].lyapunov;
    fits.push_back(tr.meta_double("fitted_rate"));
  }
  for (double& v : mean_xi) v /= static_cast<double>(seeds);
  const double fitted = fit_geometric_rate(mean_xi);
  const double se = stderr_of(fits);
  const double lo = plan.rho - 3.0 * se;
  const double hi = plan.rate + 3.0 * se;
  out.expect(fitted >= lo, "fitted " + fmt_double(fitted) + " below rho band " + fmt_double(lo));
  out.expect(fitted <= hi, "fitted " + fmt_double(fitted) + " above rate band " + fmt_double(hi));
  out.info("fitted " + fmt_double(fitted) + " inside [" + fmt_double(lo) + ", " + fmt_double(hi) +
           "], se " + fmt_double(se));
  return out;
}

// 8. Synchronization penalty: the barrier round pays at least the harmonic
// straggler term, and the asynchronous stream completes one update per mean
// duration per worker.
Outcome check_timing_bounds() {
  Outcome out;
  std::string seen;
  for (std::size_t p : {2, 4, 16, 64, 256}) {
    TimingModel tm;
    tm.p = p;
    tm.m = p;
    tm.lambda = 1.0;
    tm.cost = {0.0};
    const auto res = simulate_throughput(tm, TimingMode::Sync, 1, 100000, 8000 + p);
    const double floor = harmonic(p) - 3.0 * res.std_error;
    out.expect(res.mean >= floor, "p = " + std::to_string(p) + " mean " + fmt_double(res.mean) +
                                      " under harmonic floor " + fmt_double(floor));
    if (p == 256) seen = fmt_double(res.mean) + " vs floor " + fmt_double(floor);
  }

  TimingModel am;
  am.p = 8;
  am.m = 100;
  am.lambda = 0.2;
  am.cost = {1.0};
  const auto res = simulate_throughput(am, TimingMode::Async, 100, 40, 8777);
  const double updates = 100.0 * 100.0;
  const double ratio = (updates / res.mean) * ((1.0 + 2.0 * am.lambda) / 8.0);
  out.expect(ratio >= 0.99 && ratio <= 1.01,
             "async throughput ratio " + fmt_double(ratio) + " outside [0.99, 1.01]");
  out.info("p = 256 sync mean " + seen + ", async ratio " + fmt_double(ratio));
  return out;
}

// 9. Heterogeneous costs: exact large-p limits, and the barrier time is
// already pinned to the hardest block at p = 64.
Outcome check_hetero_costs() {
  Outcome out;
  const std::vector<double> cost = {1.0, 2.0};
  const auto lim = hetero_limits(cost);
  out.expect(lim.sync_limit == 2.0 && lim.async_mean == 1.5,
             "limits (" + fmt_double(lim.sync_limit) + ", " + fmt_double(lim.async_mean) +
                 ") != (2, 1.5)");

  TimingModel small;
  small.p = 2;
  small.m = 2;
  small.lambda = 0.0;
  small.cost = cost;
  const auto two = simulate_throughput(small, TimingMode::Sync, 1, 4000, 9001);
  out.expect(std::abs(two.mean - 1.75) <= 0.03,
             "p = 2 mean " + fmt_double(two.mean) + " far from E max = 1.75");

  TimingModel big;
  big.p = 64;
  big.m = 2;
  big.lambda = 0.0;
  big.cost = cost;
  const auto res = simulate_throughput(big, TimingMode::Sync, 32, 2000, 9002);
  out.expect(std::abs(res.mean - 2.0) <= 0.02,
             "p = 64 mean " + fmt_double(res.mean) + " not within 1% of 2");
  out.info("p = 2 mean " + fmt_double(two.mean) + ", p = 64 mean " + fmt_double(res.mean));
  return out;
}

// 10. Live executor: one worker replays the sequential engine exactly; a
// parallel run yields a usable measured delay model that round-trips.
Outcome check_live_executor() {
  Outcome out;
  const std::size_t m = 10;
  const double r = 0.9;
  LiveConfig cfg(identity_op(m, r));
  cfg.workers = 1;
  cfg.budget = 400;
  cfg.seed = 91;
  const LiveResult solo = run_live(cfg);
  out.expect(solo.completed, "single-worker run failed: " + solo.error);
  RunSpec spec(identity_op(m, r));
  spec.iterations = 400;
  spec.seed = 91;
  const Trace seq = run_experiment(spec);
  std::size_t mismatched = 0;
  if (solo.trace.rows.size() == seq.rows.size()) {
    for (std::size_t k = 0; k < seq.rows.size(); ++k)
      if (solo.trace.rows[k].block != seq.rows[k].block ||
          solo.trace.rows[k].sq_error != seq.rows[k].sq_error)
        ++mismatched;
  } else {
    mismatched = 400;
  }
  out.expect(mismatched == 0, std::to_string(mismatched) + " rows differ from the engine");

  LiveConfig par(identity_op(100, r));
  par.workers = 4;
  par.budget = 10000;
  par.seed = 92;
  par.eta = 0.6;
  par.jitter_mean = 1e-4;
  const LiveResult res = run_live(par);
  out.expect(res.completed && res.applied == 10000, "parallel run incomplete");
  out.expect(!res.delay_histogram.empty(), "no delays measured");
  const DelayModel fitted = fit_delay_model(res);
  out.expect(fitted.histogram() == res.delay_histogram, "histogram round trip not exact");
  std::uint64_t total = 0, running = 0;
  for (const auto& [age, count] : res.delay_histogram) {
    (void)age;
    total += count;
  }
  double tail_gap = 0.0;
  std::uint32_t max_age = 0;
  for (const auto& [age, count] : res.delay_histogram) max_age = std::max(max_age, age), (void)count;
  for (std::uint32_t l = 1; l <= max_age; ++l) {
    running = 0;
    for (const auto& [age, count] : res.delay_histogram)
      if (age >= l) running += count;
    const double expect = static_cast<double>(running) / static_cast<double>(total);
    tail_gap = std::max(tail_gap, std::abs(fitted.tail_prob(l) - expect));
  }
  out.expect(tail_gap == 0.0, "tail probabilities drifted by " + fmt_double(tail_gap));
  const auto plan = stochastic_plan(100, r, fitted);
  out.expect(plan.eta1 > 0.0 && plan.eta1 <= 1.0,
             "measured-delay step " + fmt_double(plan.eta1) + " outside (0, 1]");
  out.info("400 rows bit-identical, measured max delay " + std::to_string(max_age) +
           ", fitted step " + fmt_double(plan.eta1));
  return out;
}

}  // namespace

int main() {
  struct Item {
    const char* name;
    Outcome (*fn)();
  };
  const Item items[] = {
      {"sharp synchronous one-step ratio", check_sharp_sync_ratio},
      {"gradient-step contraction factor", check_gradient_contraction},
      {"coefficient series closed form", check_coefficient_series},
      {"stochastic lyapunov supermartingale", check_stochastic_supermartingale},
      {"zero-delay reduction to the classical run", check_zero_delay_reduction},
      {"deterministic per-step bound", check_deterministic_bound},
      {"empirical decay inside the predicted band", check_empirical_rate_band},
      {"timing harmonic bound and async throughput", check_timing_bounds},
      {"heterogeneous cost limits", check_hetero_costs},
      {"live executor parity and round trip", check_live_executor},
  };

  int failures = 0;
  int index = 0;
  for (const auto& item : items) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = item.fn();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2d %s (%.2fs)%s%s\n", out.pass ? "PASS" : "FAIL", index, item.name, secs,
                out.detail.empty() ? "" : ": ", out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  if (failures == 0)
    std::printf("all %d acceptance checks passed\n", index);
  else
    std::printf("%d of %d acceptance checks FAILED\n", failures, index);
  return failures == 0 ? 0 : 1;
}
