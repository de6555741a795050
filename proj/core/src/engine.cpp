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

#include "arock/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "arock/format.hpp"
#include "arock/rng.hpp"

namespace arock {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kEnumerationLimit = 1000;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Squared distance restricted to one block; bitwise equal to the full-vector
// sq_dist when the vectors agree outside the block (equal coordinates add an
// exact +0.0).
double block_sq_dist(std::span<const double> a, std::span<const double> b,
                     const BlockPartition& part, std::size_t i) {
  const std::size_t off = part.offset(i);
  const std::size_t len = part.size(i);
  double acc = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    const double d = a[off + t] - b[off + t];
    acc += d * d;
  }
  return acc;
}

}  // namespace

std::pair<std::vector<double>, std::uint32_t> build_delayed_iterate(
    const IterateHistory& history, const BlockPartition& part,
    std::span<const std::uint32_t> jvec) {
  require(part.dim() == history.dim(), "build_delayed_iterate: partition does not match history");
  require(jvec.size() == part.blocks(), "build_delayed_iterate: need one age per block");
  const std::uint64_t avail =
      std::min<std::uint64_t>(history.step(), static_cast<std::uint64_t>(history.depth()));
  std::uint32_t current_delay = 0;
  for (const std::uint32_t age : jvec) {
    if (age > avail) throw std::out_of_range("build_delayed_iterate: age exceeds stored history");
    current_delay = std::max(current_delay, age);
  }
  std::vector<double> out(part.dim());
  for (std::size_t b = 0; b < part.blocks(); ++b) {
    const std::vector<double>& src = history.iterate(jvec[b]);
    const std::size_t off = part.offset(b);
    const std::size_t len = part.size(b);
    for (std::size_t t = 0; t < len; ++t) out[off + t] = src[off + t];
  }
  return {std::move(out), current_delay};
}

void sync_km_step(std::vector<double>& x, const Operator& op, double eta,
                  std::span<const std::size_t> subset) {
  const BlockPartition& part = op.partition();
  require(x.size() == part.dim(), "sync_km_step: dimension mismatch");
  require(eta > 0.0 && std::isfinite(eta), "sync_km_step: eta must be positive");
  require(!subset.empty() && subset.size() <= part.blocks(), "sync_km_step: bad subset size");
  std::vector<char> seen(part.blocks(), 0);
  for (const std::size_t b : subset) {
    require(b < part.blocks(), "sync_km_step: block index out of range");
    require(!seen[b], "sync_km_step: subset indices must be distinct");
    seen[b] = 1;
  }
  // All residuals are evaluated on the input state before any write.
  std::vector<double> updates;
  updates.reserve(subset.size() * part.size(0));
  std::vector<std::size_t> offsets(subset.size());
  for (std::size_t s = 0; s < subset.size(); ++s) {
    const std::size_t b = subset[s];
    offsets[s] = updates.size();
    updates.resize(updates.size() + part.size(b));
    op.apply_S_block(x, b, std::span<double>(updates).subspan(offsets[s], part.size(b)));
  }
  for (std::size_t s = 0; s < subset.size(); ++s) {
    const std::size_t b = subset[s];
    const std::size_t off = part.offset(b);
    for (std::size_t t = 0; t < part.size(b); ++t) x[off + t] -= eta * updates[offsets[s] + t];
  }
}

void arock_step(IterateHistory& history, const Operator& op, double eta, std::size_t i,
                std::span<const std::uint32_t> jvec) {
  const BlockPartition& part = op.partition();
  require(i < part.blocks(), "arock_step: block index out of range");
  require(eta > 0.0 && std::isfinite(eta), "arock_step: eta must be positive");
  auto [xhat, j] = build_delayed_iterate(history, part, jvec);
  (void)j;
  std::vector<double> u(part.size(i));
  op.apply_S_block(xhat, i, u);
  std::vector<double>& next = history.scratch();
  next = history.current();
  const std::size_t off = part.offset(i);
  for (std::size_t t = 0; t < u.size(); ++t) next[off + t] -= eta * u[t];
  history.commit();
}

double expected_next_sq_error(const IterateHistory& history, const Operator& op, double eta,
                              std::span<const std::uint32_t> jvec) {
  const BlockPartition& part = op.partition();
  const std::size_t m = part.blocks();
  require(m <= kEnumerationLimit, "expected_next_sq_error: enumeration limited to m <= 1000");
  auto [xhat, j] = build_delayed_iterate(history, part, jvec);
  (void)j;
  std::vector<double> u(part.dim());
  op.apply_S(xhat, u);
  const std::vector<double>& x = history.current();
  const std::vector<double>& xstar = op.fixed_point();
  std::vector<double> cand = x;
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t off = part.offset(i);
    const std::size_t len = part.size(i);
    for (std::size_t t = 0; t < len; ++t) cand[off + t] = x[off + t] - eta * u[off + t];
    acc += sq_dist(cand, xstar);
    for (std::size_t t = 0; t < len; ++t) cand[off + t] = x[off + t];
  }
  return acc / static_cast<double>(m);
}

double expected_next_lyapunov(const IterateHistory& history, const Operator& op, double eta,
                              std::span<const std::uint32_t> jvec,
                              const LyapunovCoefficients& coeffs) {
  const BlockPartition& part = op.partition();
  const std::size_t m = part.blocks();
  require(m <= kEnumerationLimit, "expected_next_lyapunov: enumeration limited to m <= 1000");
  auto [xhat, j] = build_delayed_iterate(history, part, jvec);
  (void)j;
  std::vector<double> u(part.dim());
  op.apply_S(xhat, u);
  const std::vector<double>& x = history.current();
  const std::vector<double>& xstar = op.fixed_point();
  // After the step the difference ring shifts: d_i' = d_{i-1} for i >= 2 while
  // d_1' is the step about to be taken. The i >= 2 part is choice-independent.
  const std::size_t used = std::min(coeffs.size(), history.depth());
  double shifted = 0.0;
  for (std::size_t i = 2; i <= used; ++i) shifted += coeffs.at(i) * history.diff_sq(i - 1);
  std::vector<double> cand = x;
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t off = part.offset(i);
    const std::size_t len = part.size(i);
    for (std::size_t t = 0; t < len; ++t) cand[off + t] = x[off + t] - eta * u[off + t];
    const double step_sq = block_sq_dist(cand, x, part, i);
    acc += sq_dist(cand, xstar) +
           (coeffs.at(1) * step_sq + shifted) / static_cast<double>(m);
    for (std::size_t t = 0; t < len; ++t) cand[off + t] = x[off + t];
  }
  return acc / static_cast<double>(m);
}

BoundCheck exact_conditional_bound_check(const IterateHistory& history, const Operator& op,
                                         double eta, std::span<const std::uint32_t> jvec,
                                         std::span<const double> eps,
                                         std::span<const double> delta, std::size_t mc_samples,
                                         std::uint64_t mc_seed) {
  const BlockPartition& part = op.partition();
  const std::size_t m = part.blocks();
  auto [xhat, j] = build_delayed_iterate(history, part, jvec);
  require(eps.size() >= j && delta.size() >= j,
          "exact_conditional_bound_check: sequences must cover i <= j");
  double ej = 0.0, dj = 0.0;
  for (std::size_t i = 0; i < j; ++i) {
    require(eps[i] > 0.0 && delta[i] > 0.0,
            "exact_conditional_bound_check: sequences must be positive");
    ej += 1.0 / eps[i];
    dj += 1.0 / delta[i];
  }
  require(eta > 0.0 && eta <= 1.0 / (1.0 + ej),
          "exact_conditional_bound_check: eta exceeds 1/(1 + E_j)");

  const double r = op.contraction_factor();
  const double s2 = 1.0 - r * r;
  const std::vector<double>& x = history.current();
  const std::vector<double>& xstar = op.fixed_point();
  std::vector<double> u(part.dim());
  op.apply_S(xhat, u);
  const double sqx = sq_dist(x, xstar);
  const double sqs = sq_norm(u);
  double weighted = 0.0;
  for (std::size_t i = 1; i <= j; ++i)
    weighted += (delta[i - 1] * s2 + eps[i - 1]) * history.diff_sq(i);
  const double md = static_cast<double>(m);
  BoundCheck out;
  out.rhs = (1.0 - (eta / md) * s2 * (1.0 - eta * dj)) * sqx + weighted / md -
            (eta / md) * sqs * (1.0 - eta * (1.0 + ej));

  if (m <= kEnumerationLimit) {
    out.lhs = expected_next_sq_error(history, op, eta, jvec);
    return out;
  }
  require(mc_samples >= 2, "exact_conditional_bound_check: need at least 2 samples");
  Rng rng(mc_seed);
  std::vector<double> cand = x;
  double mean = 0.0, msq = 0.0;
  for (std::size_t n = 1; n <= mc_samples; ++n) {
    const std::size_t i = rng.uniform_index(m);
    const std::size_t off = part.offset(i);
    const std::size_t len = part.size(i);
    for (std::size_t t = 0; t < len; ++t) cand[off + t] = x[off + t] - eta * u[off + t];
    const double v = sq_dist(cand, xstar);
    for (std::size_t t = 0; t < len; ++t) cand[off + t] = x[off + t];
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    msq += d * (v - mean);
  }
  out.lhs = mean;
  out.exact = false;
  out.std_error =
      std::sqrt(msq / (static_cast<double>(mc_samples - 1) * static_cast<double>(mc_samples)));
  return out;
}

std::vector<double> initial_iterate(const Operator& op, InitKind init, std::uint64_t seed) {
  const std::size_t dim = op.dim();
  const std::vector<double>& xstar = op.fixed_point();
  std::vector<double> x0(dim);
  if (init == InitKind::Ones) {
    const double step = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t i = 0; i < dim; ++i) x0[i] = xstar[i] + step;
  } else {
    Rng init_rng(derive_seed(seed, 3));
    const std::vector<double> v = init_rng.unit_vector(dim);
    for (std::size_t i = 0; i < dim; ++i) x0[i] = xstar[i] + v[i];
  }
  return x0;
}

namespace {

const LyapunovCoefficients* plan_coefficients(const RunSpec& spec) {
  if (spec.policy == StepPolicy::PlanStochastic) return &spec.stochastic->coeffs;
  if (spec.policy == StepPolicy::PlanDeterministic) return &spec.deterministic->coeffs;
  return nullptr;
}

std::size_t pick_depth(const RunSpec& spec, const LyapunovCoefficients* coeffs) {
  std::size_t depth = 1;
  if (spec.mode == RunMode::Arock) {
    depth = spec.delays.kind() == DelayModel::Kind::Deterministic
                ? spec.delays.max_age()
                : spec.delays.suggested_depth(1e-12, spec.depth_cap);
  }
  if (coeffs != nullptr) depth = std::max(depth, coeffs->size());
  return std::min(std::max<std::size_t>(depth, 1), spec.depth_cap);
}

void validate_spec(const RunSpec& spec) {
  const std::size_t m = spec.op.blocks();
  require(spec.iterations >= 1, "run_experiment: need at least one iteration");
  if (spec.mode == RunMode::Sync) {
    require(spec.p >= 1 && spec.p <= m, "run_experiment: sync needs 1 <= p <= m");
    require(spec.delays.kind() == DelayModel::Kind::Stochastic && spec.delays.max_age() == 0,
            "run_experiment: sync mode requires the zero-delay model");
    require(spec.policy != StepPolicy::PlanDeterministic,
            "run_experiment: deterministic step policy needs measured delays (arock + schedule)");
  }
  if (spec.policy == StepPolicy::Fixed)
    require(spec.eta > 0.0 && std::isfinite(spec.eta), "run_experiment: eta must be positive");
  if (spec.policy == StepPolicy::PlanStochastic) {
    require(spec.stochastic.has_value(), "run_experiment: stochastic plan missing");
    require(spec.stochastic->m == m && spec.stochastic->r == spec.op.contraction_factor(),
            "run_experiment: stochastic plan does not match the operator");
  }
  if (spec.policy == StepPolicy::PlanDeterministic) {
    require(spec.deterministic.has_value(), "run_experiment: deterministic plan missing");
    require(spec.deterministic->m == m && spec.deterministic->r == spec.op.contraction_factor(),
            "run_experiment: deterministic plan does not match the operator");
    require(spec.delays.kind() == DelayModel::Kind::Deterministic,
            "run_experiment: deterministic step policy needs a delay schedule");
    require(spec.delays.schedule_length() >= spec.iterations,
            "run_experiment: delay schedule shorter than the run");
  }
}

}  // namespace

Trace run_experiment(const RunSpec& spec) {
  validate_spec(spec);
  const Operator& op = spec.op;
  const BlockPartition& part = op.partition();
  const std::size_t m = part.blocks();
  const double r = op.contraction_factor();
  const LyapunovCoefficients* coeffs = plan_coefficients(spec);
  const std::size_t depth = pick_depth(spec, coeffs);
  const std::vector<double>& xstar = op.fixed_point();

  Rng block_rng(derive_seed(spec.seed, 1));
  Rng delay_rng(derive_seed(spec.seed, 2));
  IterateHistory history(initial_iterate(op, spec.init, spec.seed), depth);

  Trace trace;
  trace.rows.reserve(spec.iterations);
  std::vector<std::uint32_t> jvec(m, 0);
  std::vector<std::size_t> order(m);
  std::uint64_t clamped = 0;

  for (std::size_t k = 0; k < spec.iterations; ++k) {
    std::uint32_t current_delay = 0;
    if (spec.mode == RunMode::Arock) {
      spec.delays.sample_ages(delay_rng, k, jvec);
      for (std::uint32_t& age : jvec) {
        if (age > depth) {
          age = static_cast<std::uint32_t>(depth);
          ++clamped;
        }
        current_delay = std::max(current_delay, age);
      }
    }
    // Step size: plan-stochastic eta is fixed before any sampling; the
    // deterministic policy reads the measured current delay.
    double eta = spec.eta;
    if (spec.policy == StepPolicy::PlanStochastic) eta = spec.stochastic->eta1;
    if (spec.policy == StepPolicy::PlanDeterministic)
      eta = spec.deterministic->H1(static_cast<double>(current_delay));

    const double sq = sq_dist(history.current(), xstar);
    const double xi = coeffs != nullptr
                          ? lyapunov_value(history, *coeffs, xstar, m, spec.tail_tol)
                          : sq;
    double factor = kNan;
    if (spec.mode == RunMode::Sync) {
      factor = sync_sharp_ratio(m, spec.p, r, eta);
    } else if (spec.policy == StepPolicy::PlanStochastic) {
      factor = rate_bound(eta, spec.stochastic->eta2, m, r);
    } else if (spec.policy == StepPolicy::PlanDeterministic) {
      factor = rate_bound(eta, spec.deterministic->H2(static_cast<double>(current_delay)), m, r);
    }

    TraceRow row;
    row.k = k;
    row.delay = static_cast<std::int64_t>(current_delay);
    row.eta = eta;
    row.sq_error = sq;
    row.lyapunov = xi;
    row.bound = std::isnan(factor) ? kNan : factor * xi;

    if (spec.mode == RunMode::Sync) {
      // Partial Fisher-Yates; for p = 1 this consumes exactly the same draw as
      // the asynchronous block choice, keeping aligned seeds comparable.
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t t = 0; t < spec.p; ++t)
        std::swap(order[t], order[t + block_rng.uniform_index(m - t)]);
      row.block = spec.p == 1 ? static_cast<std::int64_t>(order[0]) : -1;
      trace.rows.push_back(row);
      std::vector<double>& next = history.scratch();
      next = history.current();
      sync_km_step(next, op, eta, std::span<const std::size_t>(order.data(), spec.p));
      history.commit();
    } else {
      const std::size_t i = block_rng.uniform_index(m);
      row.block = static_cast<std::int64_t>(i);
      trace.rows.push_back(row);
      arock_step(history, op, eta, i, jvec);
    }
  }

  trace.meta["schema"] = "1";
  trace.meta["mode"] = spec.mode == RunMode::Sync ? "sync" : "arock";
  trace.meta["operator"] = op.describe();
  trace.meta["dim"] = fmt_u64(op.dim());
  trace.meta["m"] = fmt_u64(m);
  trace.meta["p"] = fmt_u64(spec.mode == RunMode::Sync ? spec.p : 1);
  trace.meta["r"] = fmt_double(r);
  trace.meta["eta_policy"] = spec.policy == StepPolicy::Fixed ? "fixed"
                             : spec.policy == StepPolicy::PlanStochastic
                                 ? "stochastic_plan"
                                 : "deterministic_plan";
  if (spec.policy == StepPolicy::Fixed) trace.meta["eta"] = fmt_double(spec.eta);
  if (spec.policy == StepPolicy::PlanStochastic)
    trace.meta["eta"] = fmt_double(spec.stochastic->eta1);
  trace.meta["delay_model"] =
      spec.mode == RunMode::Sync ? DelayModel::zero().describe() : spec.delays.describe();
  trace.meta["seed"] = fmt_u64(spec.seed);
  trace.meta["iterations"] = fmt_u64(spec.iterations);
  trace.meta["depth"] = fmt_u64(depth);
  trace.meta["clamped"] = fmt_u64(clamped);
  trace.meta["init"] = spec.init == InitKind::Ones ? "ones" : "random_sphere";
  if (spec.policy == StepPolicy::PlanStochastic) {
    trace.meta["rho"] = fmt_double(spec.stochastic->rho);
    trace.meta["plan_eta1"] = fmt_double(spec.stochastic->eta1);
    trace.meta["plan_eta2"] = fmt_double(spec.stochastic->eta2);
    trace.meta["plan_rate"] = fmt_double(spec.stochastic->rate);
  }
  if (spec.policy == StepPolicy::PlanDeterministic) {
    trace.meta["rho"] = fmt_double(spec.deterministic->rho);
    trace.meta["gamma"] = fmt_double(spec.deterministic->gamma);
    trace.meta["horizon"] = fmt_double(spec.deterministic->horizon);
    trace.meta["boundary_rate"] = fmt_double(spec.deterministic->boundary_rate);
  }
  if (spec.mode == RunMode::Sync) {
    const double eta_used = spec.policy == StepPolicy::Fixed ? spec.eta : spec.stochastic->eta1;
    trace.meta["predicted_rate"] = fmt_double(sync_sharp_ratio(m, spec.p, r, eta_used));
  } else if (spec.policy == StepPolicy::PlanStochastic) {
    trace.meta["predicted_rate"] = fmt_double(spec.stochastic->rate);
  } else if (spec.policy == StepPolicy::PlanDeterministic) {
    trace.meta["predicted_rate"] = fmt_double(spec.deterministic->boundary_rate);
  }
  trace.meta["final_sq_error"] = fmt_double(sq_dist(history.current(), xstar));
  if (trace.rows.size() >= 10) {
    std::vector<double> ys(trace.rows.size());
    for (std::size_t i = 0; i < trace.rows.size(); ++i)
      ys[i] = coeffs != nullptr ? trace.rows[i].lyapunov : trace.rows[i].sq_error;
    try {
      trace.meta["fitted_rate"] = fmt_double(fit_geometric_rate(ys));
    } catch (const std::exception&) {
      // Degenerate runs (already at the fixed point) have no usable fit.
    }
  }
  return trace;
}

}  // namespace arock
