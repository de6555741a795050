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

#include "arock/rates.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "arock/format.hpp"
#include "arock/operators.hpp"

namespace arock {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_mr(std::size_t m, double r) {
  require(m >= 1, "rates: need at least one block");
  require(r > 0.0 && r < 1.0, "rates: contraction factor must lie in (0, 1)");
}

}  // namespace

double rate_bound(double eta, double gamma, std::size_t m, double r) {
  check_mr(m, r);
  require(eta > 0.0, "rate_bound: step must be positive");
  require(gamma > 0.0, "rate_bound: gamma must be positive");
  return 1.0 - (eta / static_cast<double>(m)) * (1.0 - r * r) * (1.0 - eta / gamma);
}

double sync_rate(std::size_t m, std::size_t p, double r) {
  check_mr(m, r);
  require(p >= 1 && p <= m, "sync_rate: need 1 <= p <= m");
  return 1.0 - (static_cast<double>(p) / static_cast<double>(m)) * (1.0 - r * r);
}

double sync_sharp_ratio(std::size_t m, std::size_t p, double r, double eta) {
  check_mr(m, r);
  require(p >= 1 && p <= m, "sync_sharp_ratio: need 1 <= p <= m");
  require(eta > 0.0, "sync_sharp_ratio: step must be positive");
  if (eta == 1.0) return sync_rate(m, p, r);
  const double w = static_cast<double>(p) / static_cast<double>(m);
  const double g = eta <= 1.0 ? 1.0 - eta * (1.0 - r) : 1.0 - eta * (1.0 + r);
  return 1.0 - w + w * g * g;
}

SynchronousRate synchronous_rate(std::size_t m, std::size_t p, double r, double eta) {
  SynchronousRate out;
  out.m = m;
  out.p = p;
  out.r = r;
  out.eta = eta;
  out.ratio = sync_sharp_ratio(m, p, r, eta);
  out.rate = sync_rate(m, p, r);
  out.kappa = (1.0 + r) / (1.0 - r);
  const double base = 1.0 / (1.0 - r * r);
  const double pm = static_cast<double>(p) / static_cast<double>(m);
  out.complexity_lo = base - pm;        // theta = 1
  out.complexity_hi = base - 0.5 * pm;  // theta = 1/2
  return out;
}

LyapunovCoefficients general_coefficients(double rho, const std::function<double(std::size_t)>& s,
                                          double tol, std::size_t max_terms) {
  require(rho > 0.0 && rho < 1.0, "general_coefficients: rho must lie in (0, 1)");
  LyapunovCoefficients out;
  out.rho = rho;

  // Forward pass: t_l = s_l rho^{-l} until the terms are negligible.
  std::vector<double> terms;
  std::vector<double> svals;
  double weight = 1.0;  // rho^{-l}
  double total = 0.0;
  std::size_t settled = 0, growing = 0;
  double prev = -1.0;
  for (std::size_t l = 1; l <= max_terms; ++l) {
    weight /= rho;
    const double sl = s(l);
    require(sl >= 0.0 && std::isfinite(sl), "general_coefficients: s_l must be finite and >= 0");
    const double t = sl == 0.0 ? 0.0 : sl * weight;
    svals.push_back(sl);
    terms.push_back(t);
    total += t;
    if (!std::isfinite(total))
      throw std::domain_error("general_coefficients: series diverges");
    if (prev >= 0.0 && t >= prev && t > 0.0) {
      if (++growing >= 100) throw std::domain_error("general_coefficients: series diverges");
    } else {
      growing = 0;
    }
    prev = t;
    if (t <= tol * total) {
      if (++settled >= 10) break;
    } else {
      settled = 0;
    }
  }
  if (settled < 10 && terms.size() == max_terms && total > 0.0 &&
      terms.back() > tol * total)
    throw std::domain_error("general_coefficients: series failed to settle");

  // Tail estimate from the last observed geometric ratio.
  double tail = 0.0;
  if (terms.size() >= 2 && terms.back() > 0.0) {
    const double g = terms.back() / terms[terms.size() - 2];
    tail = g < 1.0 ? terms.back() * g / (1.0 - g) : kInf;
  }

  // Backward pass: U_i = sum_{l >= i} t_l, then c_i = rho^{i-1} U_i. The
  // recurrence rho c_i = c_{i+1} + s_i follows identically from this form.
  const std::size_t n = terms.size();
  out.c.resize(n);
  out.s = std::move(svals);
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + terms[i];
  double pow_r = 1.0;  // rho^{i-1}
  for (std::size_t i = 0; i < n; ++i) {
    out.c[i] = pow_r * suffix[i];
    pow_r *= rho;
  }
  out.tail_bound = tail;
  // Drop an all-zero tail (and the all-zero case entirely).
  while (!out.c.empty() && out.c.back() == 0.0) {
    out.c.pop_back();
    out.s.pop_back();
  }
  return out;
}

double StochasticRatePlan::epsilon(std::size_t i) const {
  require(i >= 1, "epsilon: index starts at 1");
  const double P = model.tail_prob(static_cast<std::uint32_t>(i));
  if (P == 0.0) return kInf;
  return std::sqrt(static_cast<double>(m)) * std::pow(rho, 0.5 * static_cast<double>(i)) /
         std::sqrt(P);
}

double StochasticRatePlan::delta(std::size_t i) const {
  require(i >= 1, "delta: index starts at 1");
  return std::sqrt(static_cast<double>(m)) * std::pow(rho, 0.5 * static_cast<double>(i)) /
         std::sqrt(1.0 - r * r);
}

StochasticRatePlan stochastic_plan(std::size_t m, double r, const DelayModel& model, double tol) {
  check_mr(m, r);
  if (model.kind() == DelayModel::Kind::Deterministic)
    throw std::invalid_argument("stochastic_plan: schedules have no age distribution");
  StochasticRatePlan plan;
  plan.m = m;
  plan.r = r;
  plan.rho = 1.0 - (1.0 - r * r) / static_cast<double>(m);
  const DelayMoments mom = delay_moments(model, plan.rho, tol);
  if (mom.diverged)
    throw std::domain_error("stochastic_plan: delay moments diverge for rho = " +
                            fmt_double(plan.rho));
  plan.M1 = mom.M1;
  plan.M2 = mom.M2;
  plan.model = model;
  const double sqm = std::sqrt(static_cast<double>(m));
  const double s2 = std::sqrt(1.0 - r * r);
  plan.eta1 = 1.0 / (1.0 + (s2 * plan.M1 + 2.0 * plan.M2) / sqm);
  plan.eta2 = plan.M1 == 0.0 ? kInf : sqm / (s2 * plan.M1);
  plan.rate = rate_bound(plan.eta1, plan.eta2, m, r);
  const double rho = plan.rho;
  plan.coeffs = general_coefficients(
      rho,
      [&model, sqm, s2, rho](std::size_t l) {
        const double P = model.tail_prob(static_cast<std::uint32_t>(l));
        const double w = sqm * std::pow(rho, 0.5 * static_cast<double>(l));
        return w * (std::sqrt(P) + s2 * P);
      },
      tol);
  return plan;
}

double DeterministicRatePlan::H1(double j) const {
  const double a = (1.0 / c) * std::pow(static_cast<double>(m), q - 0.5);
  return 1.0 / (1.0 + a * (3.0 + std::pow(gamma, -j)));
}

double DeterministicRatePlan::H2(double j) const {
  return 2.0 * c * std::pow(static_cast<double>(m), 0.5 - q) * std::pow(gamma, j);
}

double DeterministicRatePlan::h1(std::size_t j) const {
  double E = 0.0;
  for (std::size_t i = 1; i <= j; ++i) E += 1.0 / epsilon(i);
  return 1.0 / (1.0 + coeffs.at(1) / static_cast<double>(m) + E);
}

double DeterministicRatePlan::h2(std::size_t j) const {
  if (j == 0) return kInf;
  double D = 0.0;
  for (std::size_t i = 1; i <= j; ++i) D += 1.0 / delta(i);
  return 1.0 / D;
}

double DeterministicRatePlan::epsilon(std::size_t i) const {
  require(i >= 1, "epsilon: index starts at 1");
  return std::sqrt(static_cast<double>(m)) * std::pow(gamma, static_cast<double>(i));
}

double DeterministicRatePlan::delta(std::size_t i) const {
  return 2.0 * epsilon(i);
}

DeterministicRatePlan deterministic_plan(std::size_t m, double r, double q, double b, double c,
                                         double d, double tol) {
  check_mr(m, r);
  require(q >= 0.0 && q < 0.5, "deterministic_plan: need 0 <= q < 1/2");
  require(b > 0.0, "deterministic_plan: need b > 0");
  require(c > 0.0, "deterministic_plan: need c > 0");
  require(d >= 0.0, "deterministic_plan: need d >= 0");
  DeterministicRatePlan plan;
  plan.m = m;
  plan.r = r;
  plan.rho = 1.0 - (1.0 - r * r) / static_cast<double>(m);
  plan.q = q;
  plan.b = b;
  plan.c = c;
  plan.d = d;
  plan.horizon = b * std::pow(static_cast<double>(m), q) + d;
  plan.gamma = plan.rho - c * std::pow(static_cast<double>(m), -q);
  if (!(plan.gamma > 0.0))
    throw std::domain_error("deterministic_plan: rho - c m^{-q} must be positive");
  const double sqm = std::sqrt(static_cast<double>(m));
  const double gamma = plan.gamma;
  const double scale = sqm * (1.0 + 2.0 * (1.0 - r * r));
  plan.coeffs = general_coefficients(
      plan.rho, [scale, gamma](std::size_t l) { return scale * std::pow(gamma, static_cast<double>(l)); },
      tol);
  plan.boundary_rate = rate_bound(plan.H1(plan.horizon), plan.H2(plan.horizon), m, r);
  plan.penalty = (1.0 / c) * std::pow(static_cast<double>(m), q - 0.5) *
                 (3.0 + 1.5 * std::exp(b * c));
  return plan;
}

double lyapunov_value(const IterateHistory& history, const LyapunovCoefficients& coeffs,
                      std::span<const double> xstar, std::size_t m, double tail_tol) {
  require(m >= 1, "lyapunov_value: need at least one block");
  if (coeffs.size() < history.depth() && coeffs.tail_bound > tail_tol)
    throw std::invalid_argument(
        "lyapunov_value: coefficient truncation shorter than history depth with non-negligible tail");
  const auto& x = history.current();
  require(xstar.size() == x.size(), "lyapunov_value: fixed point has wrong dimension");
  double xi = sq_dist(x, xstar);
  const std::size_t n = std::min(coeffs.size(), history.depth());
  double acc = 0.0;
  for (std::size_t i = 1; i <= n; ++i) acc += coeffs.at(i) * history.diff_sq(i);
  xi += acc / static_cast<double>(m);
  return xi;
}

}  // namespace arock
