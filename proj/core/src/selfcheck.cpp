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

#include "arock/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "arock/delays.hpp"
#include "arock/engine.hpp"
#include "arock/format.hpp"
#include "arock/history.hpp"
#include "arock/operators.hpp"
#include "arock/rates.hpp"
#include "arock/rng.hpp"
#include "arock/timing.hpp"

namespace arock {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Checker {
  std::vector<CheckResult> results;
  void add(const std::string& name, bool passed, const std::string& detail) {
    results.push_back({name, passed, detail});
  }
};

std::vector<double> random_point(Rng& rng, std::size_t dim, double scale) {
  std::vector<double> x = rng.gaussian_vector(dim);
  for (double& v : x) v *= scale;
  return x;
}

/// Symmetric contraction H diag(d) H with H = I - 2 v v^T a random Householder
/// reflection and |d_i| <= r, so the operator norm is at most r.
Operator random_linear(Rng& rng, double r, std::size_t blocks, std::size_t block_size) {
  const std::size_t n = blocks * block_size;
  const std::vector<double> v = rng.unit_vector(n);
  std::vector<double> d(n);
  for (double& x : d) x = r * (2.0 * rng.uniform01() - 1.0);
  std::vector<double> hd(n * n);  // H diag(d)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (i == j ? 1.0 : 0.0) - 2.0 * v[i] * v[j];
      hd[i * n + j] = h * d[j];
    }
  }
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        acc += hd[i * n + k] * ((k == j ? 1.0 : 0.0) - 2.0 * v[k] * v[j]);
      a[i * n + j] = acc;
    }
  }
  return Operator::linear(std::move(a), r, BlockPartition::uniform(blocks, block_size));
}

std::vector<Operator> sample_operators(Rng& rng) {
  const BlockPartition part = BlockPartition::uniform(4, 3);
  const std::size_t dim = part.dim();
  std::vector<double> diag(dim);
  diag[0] = 1.0;
  diag[dim - 1] = 3.0;
  for (std::size_t i = 1; i + 1 < dim; ++i) diag[i] = 1.0 + 2.0 * rng.uniform01();
  std::vector<Operator> ops;
  ops.push_back(Operator::scaled_identity(0.9, part));
  ops.push_back(Operator::negated_scaled_identity(0.8, part));
  ops.push_back(random_linear(rng, 0.85, 4, 3));
  ops.push_back(make_gd_operator(diag, 1.0, 3.0, part));
  ops.push_back(make_prox_gd_operator(diag, 1.0, 3.0, 0.05, part));
  return ops;
}

void check_s_inequality(Checker& ck, Rng& rng) {
  double worst = kInf;
  for (const Operator& op : sample_operators(rng)) {
    const std::size_t n = op.dim();
    const double r = op.contraction_factor();
    std::vector<double> sx(n), sy(n);
    for (std::size_t trial = 0; trial < 1000; ++trial) {
      const std::vector<double> x = random_point(rng, n, 2.0);
      const std::vector<double> y = random_point(rng, n, 2.0);
      op.apply_S(x, sx);
      op.apply_S(y, sy);
      double inner = 0.0, ds = 0.0, dxy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = sy[i] - sx[i];
        const double b = y[i] - x[i];
        inner += a * b;
        ds += a * a;
        dxy += b * b;
      }
      const double margin = inner - 0.5 * ds - 0.5 * (1.0 - r * r) * dxy;
      worst = std::min(worst, margin / std::max(1.0, dxy));
    }
  }
  ck.add("residual_inequality", worst >= -1e-10,
         "min normalized margin " + fmt_double(worst) + " over 5 kinds x 1000 pairs");
}

void check_fixed_point(Checker& ck, Rng& rng) {
  double worst = 0.0;
  for (const Operator& op : sample_operators(rng)) {
    std::vector<double> s(op.dim());
    op.apply_S(op.fixed_point(), s);
    worst = std::max(worst, sq_norm(s));
  }
  ck.add("fixed_point_residual", worst == 0.0, "max ||S x*||^2 = " + fmt_double(worst));
}

void check_block_reassembly(Checker& ck, Rng& rng) {
  double worst = 0.0;
  for (const Operator& op : sample_operators(rng)) {
    const std::size_t n = op.dim();
    std::vector<double> full(n), assembled(n);
    for (std::size_t trial = 0; trial < 100; ++trial) {
      const std::vector<double> x = random_point(rng, n, 2.0);
      op.apply_S(x, full);
      for (std::size_t b = 0; b < op.blocks(); ++b) {
        op.apply_S_block(
            x, b,
            std::span<double>(assembled).subspan(op.partition().offset(b), op.partition().size(b)));
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double scale = std::max(1.0, std::abs(full[i]));
        worst = std::max(worst, std::abs(full[i] - assembled[i]) / scale);
      }
    }
  }
  ck.add("block_reassembly", worst <= 1e-13,
         "max relative gap between whole and blockwise residual " + fmt_double(worst));
}

void check_zero_delay_matches_sync(Checker& ck, Rng& rng) {
  const BlockPartition part = BlockPartition::uniform(6, 2);
  std::vector<double> diag(part.dim());
  diag[0] = 1.0;
  diag[part.dim() - 1] = 3.0;
  for (std::size_t i = 1; i + 1 < part.dim(); ++i) diag[i] = 1.0 + 2.0 * rng.uniform01();
  const Operator op = make_gd_operator(diag, 1.0, 3.0, part);
  const std::vector<double> x0 = random_point(rng, part.dim(), 1.0);
  const std::vector<std::uint32_t> jvec(part.blocks(), 0);
  bool identical = true;
  for (std::size_t i = 0; i < part.blocks(); ++i) {
    IterateHistory h(x0, 1);
    arock_step(h, op, 0.8, i, jvec);
    std::vector<double> x = x0;
    const std::size_t subset[1] = {i};
    sync_km_step(x, op, 0.8, subset);
    identical = identical && x == h.current();
  }
  ck.add("zero_delay_matches_sync", identical,
         identical ? "every single-block step bitwise equal" : "paths diverged");
}

void check_amgm_split(Checker& ck, Rng& rng) {
  double worst = kInf;
  for (std::size_t trial = 0; trial < 2000; ++trial) {
    const std::size_t j = 1 + rng.uniform_index(8);
    const double a = 2.0 * rng.uniform01();
    const double eta = 0.1 + 1.4 * rng.uniform01();
    double lhs = 0.0, ej = 0.0, weighted = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      const double eps = std::exp(6.0 * rng.uniform01() - 3.0);
      const double root_d = 4.0 * rng.uniform01();
      lhs += a * root_d;
      ej += 1.0 / eps;
      weighted += eps * root_d * root_d;
    }
    const double rhs = 0.5 * a * a * eta * ej + weighted / (2.0 * eta);
    worst = std::min(worst, (rhs - lhs) / std::max(1.0, rhs));
  }
  ck.add("arithmetic_geometric_split", worst >= -1e-10,
         "min normalized slack " + fmt_double(worst) + " over 2000 draws");
}

void check_sampler_tails(Checker& ck, Rng& rng) {
  const std::size_t n = 100000;
  const double band = 1.949 / std::sqrt(static_cast<double>(n));
  double worst = 0.0;
  const DelayModel models[] = {
      DelayModel::geometric(0.5),
      DelayModel::bounded_uniform(4),
      DelayModel::empirical({{0, 50}, {1, 30}, {2, 20}}),
  };
  for (const DelayModel& model : models) {
    std::map<std::uint32_t, std::size_t> counts;
    std::uint32_t age = 0;
    for (std::size_t i = 0; i < n; ++i) {
      model.sample_ages(rng, 1000000000, std::span<std::uint32_t>(&age, 1));
      ++counts[age];
    }
    const std::uint32_t hi = counts.rbegin()->first;
    std::size_t at_least = n;
    double sup = 0.0;
    for (std::uint32_t l = 1; l <= hi + 1; ++l) {
      const auto it = counts.find(l - 1);
      at_least -= it == counts.end() ? 0 : it->second;
      const double empirical = static_cast<double>(at_least) / static_cast<double>(n);
      sup = std::max(sup, std::abs(empirical - model.tail_prob(l)));
    }
    worst = std::max(worst, sup);
  }
  ck.add("sampler_tail_agreement", worst <= band,
         "sup tail gap " + fmt_double(worst) + " vs band " + fmt_double(band));
}

void check_geometric_moments(Checker& ck) {
  const double cases[][2] = {{0.5, 0.981}, {0.3, 0.9}, {0.7, 0.995}};
  double worst = 0.0;
  for (const auto& c : cases) {
    const double pbar = c[0], rho = c[1];
    const DelayMoments mom = delay_moments(DelayModel::geometric(pbar), rho);
    const double x = pbar / std::sqrt(rho);
    const double y = std::sqrt(pbar / rho);
    worst = std::max(worst, std::abs(mom.M1 - x / (1.0 - x)) / (x / (1.0 - x)));
    worst = std::max(worst, std::abs(mom.M2 - y / (1.0 - y)) / (y / (1.0 - y)));
  }
  ck.add("geometric_moment_closed_form", worst <= 1e-10,
         "max relative gap to closed form " + fmt_double(worst));
}

void check_empirical_tail(Checker& ck) {
  const DelayModel model = DelayModel::empirical({{0, 50}, {1, 30}, {2, 20}});
  const bool pass = model.tail_prob(0) == 1.0 && model.tail_prob(1) == 0.5 &&
                    model.tail_prob(2) == 0.2 && model.tail_prob(3) == 0.0;
  ck.add("empirical_tail_exact", pass,
         "P_1 = " + fmt_double(model.tail_prob(1)) + ", P_2 = " + fmt_double(model.tail_prob(2)));
}

void check_rate_bound_shape(Checker& ck) {
  const std::size_t m = 100;
  const double r = 0.9;
  const double gamma = 3.0;
  const double rho = 1.0 - (1.0 - r * r) / static_cast<double>(m);
  const double near_one = rate_bound(1e-12, gamma, m, r);
  const double at_min = rate_bound(gamma / 2.0, gamma, m, r);
  const bool shape = std::abs(near_one - 1.0) <= 1e-9 &&
                     at_min <= rate_bound(gamma / 2.0 - 0.01, gamma, m, r) &&
                     at_min <= rate_bound(gamma / 2.0 + 0.01, gamma, m, r);
  const double gap = std::abs(rate_bound(1.0, kInf, m, r) - rho);
  ck.add("rate_bound_shape", shape && gap <= 1e-15,
         "R(0+) - 1 = " + fmt_double(near_one - 1.0) + ", |R(1, inf) - rho| = " + fmt_double(gap));
}

void check_step_dominance(Checker& ck) {
  const DeterministicRatePlan plans[] = {
      deterministic_plan(100, 0.9, 0.25, 1.0, 1.0, 0.0),
      deterministic_plan(64, 0.5, 0.4, 2.0, 0.5, 1.0),
  };
  double worst1 = kInf, worst2 = kInf;
  for (const auto& plan : plans) {
    for (std::size_t j = 0; j <= 1000; ++j) {
      const double dj = static_cast<double>(j);
      worst1 = std::min(worst1, plan.h1(j) - plan.H1(dj));
      if (j > 0) worst2 = std::min(worst2, plan.h2(j) - plan.H2(dj));
    }
  }
  ck.add("closed_form_step_dominance", worst1 >= -1e-12 && worst2 >= -1e-12,
         "min h1 - H1 = " + fmt_double(worst1) + ", min h2 - H2 = " + fmt_double(worst2));
}

void check_coefficient_recurrence(Checker& ck) {
  const StochasticRatePlan sp = stochastic_plan(100, 0.9, DelayModel::geometric(0.5));
  const DeterministicRatePlan dp = deterministic_plan(100, 0.9, 0.25, 1.0, 1.0, 0.0);
  // Tight tail tolerance: suffix sums near the truncation horizon lose
  // relative accuracy, and the toy comparison below is relative.
  const LyapunovCoefficients toy = general_coefficients(
      0.5, [](std::size_t l) { return std::pow(4.0, -static_cast<double>(l)); }, 1e-30);
  double worst = 0.0;
  for (const LyapunovCoefficients* coeffs : {&sp.coeffs, &dp.coeffs, &toy}) {
    for (std::size_t i = 1; i + 1 <= coeffs->size(); ++i) {
      const double lhs = coeffs->rho * coeffs->at(i);
      const double rhs = coeffs->at(i + 1) + coeffs->s[i - 1];
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
  }
  double toy_gap = 0.0;
  for (std::size_t i = 1; i <= std::min<std::size_t>(toy.size(), 20); ++i) {
    const double expect = std::pow(4.0, 1.0 - static_cast<double>(i));
    toy_gap = std::max(toy_gap, std::abs(toy.at(i) - expect) / expect);
  }
  ck.add("coefficient_recurrence", worst <= 1e-12 && toy_gap <= 1e-12,
         "max recurrence residual " + fmt_double(worst) + ", toy series gap " +
             fmt_double(toy_gap));
}

double enumerate_sync_ratio(const Operator& op, double eta, std::size_t p, Rng& rng) {
  const std::size_t m = op.blocks();
  const std::vector<double> x = random_point(rng, op.dim(), 1.5);
  std::vector<std::size_t> subset(p);
  double acc = 0.0;
  std::size_t count = 0;
  // enumerate p-subsets of {0..m-1} lexicographically
  for (std::size_t i = 0; i < p; ++i) subset[i] = i;
  while (true) {
    std::vector<double> y = x;
    sync_km_step(y, op, eta, subset);
    acc += sq_dist(y, op.fixed_point());
    ++count;
    std::size_t i = p;
    while (i > 0 && subset[i - 1] == m - p + i - 1) --i;
    if (i == 0) break;
    ++subset[i - 1];
    for (std::size_t t = i; t < p; ++t) subset[t] = subset[t - 1] + 1;
  }
  return acc / static_cast<double>(count) / sq_dist(x, op.fixed_point());
}

void check_sync_sharp(Checker& ck, Rng& rng) {
  const BlockPartition part = BlockPartition::uniform(4, 1);
  const Operator pos = Operator::scaled_identity(0.6, part);
  const Operator neg = Operator::negated_scaled_identity(0.6, part);
  const double low = enumerate_sync_ratio(pos, 0.7, 2, rng);
  const double high = enumerate_sync_ratio(neg, 1.2, 2, rng);
  const double gap = std::max(std::abs(low - sync_sharp_ratio(4, 2, 0.6, 0.7)),
                              std::abs(high - sync_sharp_ratio(4, 2, 0.6, 1.2)));
  ck.add("sync_sharp_ratio_attained", gap <= 1e-12,
         "max gap to enumerated worst-case ratio " + fmt_double(gap));
}

void check_max_exponential(Checker& ck, Rng& rng) {
  bool pass = true;
  std::string detail;
  for (const std::size_t p : {std::size_t{2}, std::size_t{8}}) {
    const std::size_t trials = 200000;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      double mx = 0.0;
      for (std::size_t i = 0; i < p; ++i) mx = std::max(mx, rng.exponential(1.0));
      const double d = mx - mean;
      mean += d / static_cast<double>(t + 1);
      m2 += d * (mx - mean);
    }
    const double se = std::sqrt(m2 / static_cast<double>(trials - 1) /
                                static_cast<double>(trials));
    const double gap = std::abs(mean - harmonic(p));
    pass = pass && gap <= 5.0 * se;
    if (!detail.empty()) detail += "; ";
    detail += "p = " + fmt_u64(p) + ": |mean - H_p| = " + fmt_double(gap) + ", se = " +
              fmt_double(se);
  }
  ck.add("max_exponential_mean", pass, detail);
}

void check_async_event_rate(Checker& ck) {
  TimingModel model;
  model.p = 8;
  model.m = 50;
  model.lambda = 0.2;
  model.cost = {1.0};
  const std::size_t epochs = 40;
  const ThroughputResult res = simulate_throughput(model, TimingMode::Async, epochs, 50, 777);
  const double events = static_cast<double>(epochs * model.m);
  const double expected_update = 1.0 + 2.0 * model.lambda;
  const double ratio = events / res.mean * expected_update / static_cast<double>(model.p);
  ck.add("async_event_rate", ratio >= 0.98 && ratio <= 1.02,
         "normalized event rate " + fmt_double(ratio));
}

void check_async_speedup(Checker& ck) {
  TimingModel model;
  model.m = 16;
  model.lambda = 0.1;
  model.cost.resize(16);
  for (std::size_t i = 0; i < 16; ++i)
    model.cost[i] = 0.5 + 1.5 * static_cast<double>(i) / 15.0;
  auto speedup = [&](std::size_t p) {
    model.p = p;
    const double sync = simulate_throughput(model, TimingMode::Sync, 20, 40, 31).mean;
    const double async_time = simulate_throughput(model, TimingMode::Async, 20, 40, 32).mean;
    return sync / async_time;
  };
  const double s2 = speedup(2);
  const double s16 = speedup(16);
  ck.add("async_speedup_grows", s16 > s2,
         "sync/async time ratio " + fmt_double(s2) + " at p = 2 vs " + fmt_double(s16) +
             " at p = 16");
}

void check_hetero_limits(Checker& ck) {
  const double two[] = {1.0, 2.0};
  const double three[] = {1.0, 1.0, 10.0};
  const HeteroLimits a = hetero_limits(two);
  const HeteroLimits b = hetero_limits(three);
  const bool pass =
      a.sync_limit == 2.0 && a.async_mean == 1.5 && b.sync_limit == 10.0 && b.async_mean == 4.0;
  ck.add("hetero_cost_limits", pass,
         "{1,2} -> (" + fmt_double(a.sync_limit) + ", " + fmt_double(a.async_mean) +
             "), {1,1,10} -> (" + fmt_double(b.sync_limit) + ", " + fmt_double(b.async_mean) +
             ")");
}

struct SpotState {
  Operator op;
  StochasticRatePlan plan;
  IterateHistory history;
};

SpotState build_spot_state(Rng& rng) {
  const BlockPartition part = BlockPartition::uniform(8, 1);
  std::vector<double> diag(part.dim());
  diag[0] = 1.0;
  diag[part.dim() - 1] = 3.0;
  for (std::size_t i = 1; i + 1 < part.dim(); ++i) diag[i] = 1.0 + 2.0 * rng.uniform01();
  Operator op = make_gd_operator(diag, 1.0, 3.0, part);
  StochasticRatePlan plan = stochastic_plan(
      8, op.contraction_factor(), DelayModel::empirical({{0, 5}, {1, 3}, {2, 2}}));
  const std::size_t depth = std::max<std::size_t>(2, plan.coeffs.size());
  IterateHistory history(random_point(rng, part.dim(), 1.0), depth);
  for (int step = 0; step < 3; ++step) {
    std::vector<double>& next = history.scratch();
    next = history.current();
    for (double& v : next) v += 0.2 * (rng.uniform01() - 0.5);
    history.commit();
  }
  return SpotState{std::move(op), std::move(plan), std::move(history)};
}

void check_descent_spot(Checker& ck, Rng& rng) {
  const SpotState st = build_spot_state(rng);
  const std::uint32_t j = 2;
  const std::vector<std::uint32_t> jvec(st.op.blocks(), j);
  std::vector<double> eps(j), delta(j);
  double ej = 0.0;
  for (std::uint32_t i = 1; i <= j; ++i) {
    eps[i - 1] = st.plan.epsilon(i);
    delta[i - 1] = st.plan.delta(i);
    ej += 1.0 / eps[i - 1];
  }
  const double eta = 0.9 / (1.0 + ej);
  const BoundCheck bc = exact_conditional_bound_check(st.history, st.op, eta, jvec, eps, delta);
  const double slack = (bc.rhs - bc.lhs) / std::max(1.0, std::abs(bc.rhs));
  ck.add("one_step_descent_spot", bc.exact && slack >= -1e-12,
         "lhs = " + fmt_double(bc.lhs) + ", rhs = " + fmt_double(bc.rhs));
}

void check_supermartingale_spot(Checker& ck, Rng& rng) {
  const SpotState st = build_spot_state(rng);
  const double xi =
      lyapunov_value(st.history, st.plan.coeffs, st.op.fixed_point(), st.op.blocks());
  const double probs[] = {0.5, 0.3, 0.2};
  double expected = 0.0;
  for (std::uint32_t a = 0; a <= 2; ++a) {
    const std::vector<std::uint32_t> jvec(st.op.blocks(), a);
    expected +=
        probs[a] * expected_next_lyapunov(st.history, st.op, st.plan.eta1, jvec, st.plan.coeffs);
  }
  const double bound = st.plan.rate * xi + 1e-9;
  ck.add("lyapunov_supermartingale_spot", expected <= bound,
         "E[next] = " + fmt_double(expected) + " vs R * xi = " + fmt_double(st.plan.rate * xi));
}

}  // namespace

std::vector<CheckResult> run_selfchecks(std::uint64_t seed) {
  Checker ck;
  Rng rng(derive_seed(seed, 99));
  check_s_inequality(ck, rng);
  check_fixed_point(ck, rng);
  check_block_reassembly(ck, rng);
  check_zero_delay_matches_sync(ck, rng);
  check_amgm_split(ck, rng);
  check_sampler_tails(ck, rng);
  check_geometric_moments(ck);
  check_empirical_tail(ck);
  check_rate_bound_shape(ck);
  check_step_dominance(ck);
  check_coefficient_recurrence(ck);
  check_sync_sharp(ck, rng);
  check_max_exponential(ck, rng);
  check_async_event_rate(ck);
  check_async_speedup(ck);
  check_hetero_limits(ck);
  check_descent_spot(ck, rng);
  check_supermartingale_spot(ck, rng);
  return ck.results;
}

}  // namespace arock
