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
#include <string>
#include <vector>

#include "arock/partition.hpp"

namespace arock {

enum class OperatorKind {
  ScaledIdentity,         // T x = x* + r (x - x*)
  NegatedScaledIdentity,  // T x = x* - r (x - x*)
  Linear,                 // T x = x* + A (x - x*), ||A|| <= r declared
  GradientStep,           // T = I - 2/(mu+L) grad f, f = 1/2 (x-x*)' D (x-x*)
  ProxGradientStep,       // T = prox_{c g} o (I - c grad f), g = t ||.||_1, c = 2/(mu+L)
};

/// A contraction T : R^dim -> R^dim with factor r in (0, 1), together with the
/// block partition used for coordinate updates. The fixed point x* is stored
/// explicitly; evaluation translates so that internally the fixed point sits
/// at the origin. S denotes the residual operator I - T (so S x* = 0).
class Operator {
public:
  static Operator scaled_identity(double r, BlockPartition part,
                                  std::vector<double> fixed_point = {});
  static Operator negated_scaled_identity(double r, BlockPartition part,
                                          std::vector<double> fixed_point = {});
  /// Dense row-major matrix A with declared operator norm bound r.
  static Operator linear(std::vector<double> matrix, double r, BlockPartition part,
                         std::vector<double> fixed_point = {});
  /// Gradient descent step with the optimal 2/(mu+L) step on a strongly convex
  /// quadratic whose Hessian is diag(d). Contracts with r = 1 - 2/(kappa+1),
  /// kappa = L/mu.
  static Operator gradient_step(std::vector<double> diag, double mu, double L,
                                BlockPartition part, std::vector<double> fixed_point = {});
  /// Same gradient step composed with the l1 proximal map (soft threshold t).
  /// The composition keeps the gradient step's contraction factor; its fixed
  /// point is the origin.
  static Operator prox_gradient_step(std::vector<double> diag, double mu, double L,
                                     double threshold, BlockPartition part);

  OperatorKind kind() const { return kind_; }
  const BlockPartition& partition() const { return part_; }
  std::size_t dim() const { return part_.dim(); }
  std::size_t blocks() const { return part_.blocks(); }
  double contraction_factor() const { return r_; }
  /// Condition number L/mu for the gradient kinds, (1+r)/(1-r) otherwise.
  double kappa() const;
  const std::vector<double>& fixed_point() const { return fixed_point_; }
  std::string describe() const;

  void apply_T(std::span<const double> x, std::span<double> out) const;
  void apply_S(std::span<const double> x, std::span<double> out) const;
  /// Rows of S x belonging to block i; out must have size(i) entries.
  void apply_S_block(std::span<const double> x, std::size_t i, std::span<double> out) const;

private:
  Operator(OperatorKind kind, double r, BlockPartition part, std::vector<double> fixed_point);

  OperatorKind kind_;
  double r_ = 0.0;
  BlockPartition part_;
  std::vector<double> fixed_point_;
  std::vector<double> matrix_;  // Linear: dim x dim row-major
  std::vector<double> diag_;    // GradientStep / ProxGradientStep
  double mu_ = 0.0, L_ = 0.0;
  double step_ = 0.0;           // 2/(mu+L)
  double threshold_ = 0.0;
};

/// Gradient-step operator for f(x) = 1/2 (x-x*)' diag(d) (x-x*).
Operator make_gd_operator(std::vector<double> diag, double mu, double L, BlockPartition part,
                          std::vector<double> fixed_point = {});
/// Proximal-gradient operator for f + t||.||_1 with the same quadratic f.
Operator make_prox_gd_operator(std::vector<double> diag, double mu, double L, double threshold,
                               BlockPartition part);

struct ContractionReport {
  double declared_r = 0.0;
  double max_ratio = 0.0;  // max ||Tx - Ty|| / ||x - y|| over sampled pairs
  std::size_t pairs = 0;
  bool passed = false;     // max_ratio <= declared_r + tol
};

/// Samples random pairs and checks the declared contraction factor.
ContractionReport contraction_check(const Operator& op, std::size_t pairs, std::uint64_t seed,
                                    double tol = 1e-12);

/// Squared Euclidean norm, accumulated in ascending index order. Used
/// everywhere a squared error enters a trace so that independently produced
/// traces are bitwise comparable.
double sq_norm(std::span<const double> x);
/// Squared distance ||a - b||^2, ascending index order.
double sq_dist(std::span<const double> a, std::span<const double> b);

}  // namespace arock
