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
#include <functional>
#include <span>
#include <vector>

#include "arock/delays.hpp"
#include "arock/history.hpp"

namespace arock {

/// One-step contraction factor R(eta, gamma) = 1 - (eta/m)(1-r^2)(1 - eta/gamma),
/// the predicted conditional-expectation decay of the Lyapunov value.
/// gamma may be +infinity (no asynchronicity penalty).
double rate_bound(double eta, double gamma, std::size_t m, double r);

/// Ideal one-round factor without delays, eta = 1: 1 - (p/m)(1 - r^2).
double sync_rate(std::size_t m, std::size_t p, double r);

/// Sharp worst-case one-step ratio E||x^{k+1}-x*||^2 / ||x^k-x*||^2 of the
/// synchronous block iteration with step eta. Attained by T = rI when
/// eta <= 1 and by T = -rI when eta >= 1.
double sync_sharp_ratio(std::size_t m, std::size_t p, double r, double eta);

struct SynchronousRate {
  std::size_t m = 0, p = 0;
  double r = 0.0, eta = 1.0;
  double ratio = 0.0;          // sharp per-iteration ratio at eta
  double rate = 0.0;           // 1 - (p/m)(1-r^2), the eta = 1 value
  double kappa = 0.0;          // (1+r)/(1-r)
  // Epochs to shrink the squared error by eps lie in
  // [complexity_lo, complexity_hi] * ln(1/eps).
  double complexity_lo = 0.0;
  double complexity_hi = 0.0;
};

SynchronousRate synchronous_rate(std::size_t m, std::size_t p, double r, double eta = 1.0);

/// Weights of the asynchronicity error. c[i-1] holds c_i; s[i-1] the
/// generating term s_i; entries beyond the truncation are bounded by
/// tail_bound and read as 0 through at().
struct LyapunovCoefficients {
  double rho = 1.0;
  std::vector<double> c;
  std::vector<double> s;
  double tail_bound = 0.0;
  std::size_t size() const { return c.size(); }
  double at(std::size_t i) const { return (i >= 1 && i <= c.size()) ? c[i - 1] : 0.0; }
};

/// Evaluates c_i = sum_{l >= i} s(l) rho^{-(l - i + 1)} by truncated suffix
/// sums. The construction satisfies rho c_i = c_{i+1} + s(i) exactly and
/// c_i -> 0. Throws when the series fails to converge.
LyapunovCoefficients general_coefficients(double rho, const std::function<double(std::size_t)>& s,
                                          double tol = 1e-12, std::size_t max_terms = 200000);

/// Step-size plan for stochastic delays: moments M1/M2 of the current-delay
/// tail, the step eta1, the penalty scale eta2, the predicted rate
/// R(eta1, eta2) and the Lyapunov weights. Exact when the run's current-delay
/// tail equals model.tail_prob (shared-age sampling).
struct StochasticRatePlan {
  std::size_t m = 0;
  double r = 0.0, rho = 1.0;
  double M1 = 0.0, M2 = 0.0;
  double eta1 = 1.0;
  double eta2 = 0.0;  // +infinity when M1 = 0
  double rate = 1.0;  // R(eta1, eta2)
  DelayModel model = DelayModel::zero();
  LyapunovCoefficients coeffs;

  double epsilon(std::size_t i) const;  // sqrt(m) rho^{i/2} / sqrt(P_i)
  double delta(std::size_t i) const;    // sqrt(m) rho^{i/2} / sqrt(1-r^2)
};

StochasticRatePlan stochastic_plan(std::size_t m, double r, const DelayModel& model,
                                   double tol = 1e-12);

/// Step-size plan for adversarial (deterministic) delays with the good-behavior
/// horizon T(m) = b m^q + d. Steps H1(j) <= h1(j) and penalty scales
/// H2(j) <= h2(j) keep R(H1(j), H2(j)) a valid per-step bound for any delay j.
struct DeterministicRatePlan {
  std::size_t m = 0;
  double r = 0.0, rho = 1.0;
  double q = 0.0, b = 0.0, c = 0.0, d = 0.0;
  double horizon = 0.0;        // T(m)
  double gamma = 0.0;          // rho - c m^{-q}
  double boundary_rate = 1.0;  // R(H1(T), H2(T))
  double penalty = 0.0;        // (1/c) m^{q-1/2} (3 + 1.5 exp(b c))
  LyapunovCoefficients coeffs;

  double H1(double j) const;
  double H2(double j) const;
  double h1(std::size_t j) const;  // exact step ceiling (1 + c_1/m + E_j)^{-1}
  double h2(std::size_t j) const;  // exact penalty scale 1/D_j (+inf at j = 0)
  double epsilon(std::size_t i) const;  // sqrt(m) gamma^i
  double delta(std::size_t i) const;    // 2 sqrt(m) gamma^i
};

DeterministicRatePlan deterministic_plan(std::size_t m, double r, double q, double b, double c,
                                         double d, double tol = 1e-12);

/// Lyapunov value xi = ||x - x*||^2 + (1/m) sum_i c_i d_i over the stored
/// history. Requires the coefficient truncation to cover the history depth
/// unless the dropped tail is below tail_tol.
double lyapunov_value(const IterateHistory& history, const LyapunovCoefficients& coeffs,
                      std::span<const double> xstar, std::size_t m, double tail_tol = 1e-9);

}  // namespace arock
