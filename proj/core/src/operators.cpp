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

#include "arock/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "arock/rng.hpp"

namespace arock {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

double sq_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("sq_dist: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Operator::Operator(OperatorKind kind, double r, BlockPartition part, std::vector<double> fixed_point)
    : kind_(kind), r_(r), part_(std::move(part)), fixed_point_(std::move(fixed_point)) {
  require(part_.blocks() > 0, "Operator: empty partition");
  require(r_ > 0.0 && r_ < 1.0, "Operator: contraction factor must lie in (0, 1)");
  if (fixed_point_.empty()) fixed_point_.assign(part_.dim(), 0.0);
  require(fixed_point_.size() == part_.dim(), "Operator: fixed point has wrong dimension");
}

Operator Operator::scaled_identity(double r, BlockPartition part, std::vector<double> fixed_point) {
  return Operator(OperatorKind::ScaledIdentity, r, std::move(part), std::move(fixed_point));
}

Operator Operator::negated_scaled_identity(double r, BlockPartition part,
                                           std::vector<double> fixed_point) {
  return Operator(OperatorKind::NegatedScaledIdentity, r, std::move(part), std::move(fixed_point));
}

Operator Operator::linear(std::vector<double> matrix, double r, BlockPartition part,
                          std::vector<double> fixed_point) {
  Operator op(OperatorKind::Linear, r, std::move(part), std::move(fixed_point));
  require(matrix.size() == op.dim() * op.dim(), "Operator::linear: matrix must be dim x dim");
  op.matrix_ = std::move(matrix);
  return op;
}

Operator Operator::gradient_step(std::vector<double> diag, double mu, double L,
                                 BlockPartition part, std::vector<double> fixed_point) {
  require(mu > 0.0 && L > mu, "Operator::gradient_step: need 0 < mu < L");
  const double r = 1.0 - 2.0 / (L / mu + 1.0);
  Operator op(OperatorKind::GradientStep, r, std::move(part), std::move(fixed_point));
  require(diag.size() == op.dim(), "Operator::gradient_step: diag has wrong dimension");
  for (double d : diag)
    require(d >= mu && d <= L, "Operator::gradient_step: eigenvalue outside [mu, L]");
  op.diag_ = std::move(diag);
  op.mu_ = mu;
  op.L_ = L;
  op.step_ = 2.0 / (mu + L);
  return op;
}

Operator Operator::prox_gradient_step(std::vector<double> diag, double mu, double L,
                                      double threshold, BlockPartition part) {
  require(threshold >= 0.0, "Operator::prox_gradient_step: negative threshold");
  Operator op = gradient_step(std::move(diag), mu, L, std::move(part));
  op.kind_ = OperatorKind::ProxGradientStep;
  op.threshold_ = threshold;
  return op;
}

Operator make_gd_operator(std::vector<double> diag, double mu, double L, BlockPartition part,
                          std::vector<double> fixed_point) {
  return Operator::gradient_step(std::move(diag), mu, L, std::move(part), std::move(fixed_point));
}

Operator make_prox_gd_operator(std::vector<double> diag, double mu, double L, double threshold,
                               BlockPartition part) {
  return Operator::prox_gradient_step(std::move(diag), mu, L, threshold, std::move(part));
}

double Operator::kappa() const {
  if (kind_ == OperatorKind::GradientStep || kind_ == OperatorKind::ProxGradientStep)
    return L_ / mu_;
  return (1.0 + r_) / (1.0 - r_);
}

std::string Operator::describe() const {
  switch (kind_) {
    case OperatorKind::ScaledIdentity: return "scaled-identity";
    case OperatorKind::NegatedScaledIdentity: return "negated-scaled-identity";
    case OperatorKind::Linear: return "matrix";
    case OperatorKind::GradientStep: return "gradient-step";
    case OperatorKind::ProxGradientStep: return "prox-gradient-step";
  }
  return "unknown";
}

void Operator::apply_T(std::span<const double> x, std::span<double> out) const {
  const std::size_t n = dim();
  require(x.size() == n && out.size() == n, "Operator::apply_T: size mismatch");
  switch (kind_) {
    case OperatorKind::ScaledIdentity:
      for (std::size_t i = 0; i < n; ++i) out[i] = fixed_point_[i] + r_ * (x[i] - fixed_point_[i]);
      return;
    case OperatorKind::NegatedScaledIdentity:
      for (std::size_t i = 0; i < n; ++i) out[i] = fixed_point_[i] - r_ * (x[i] - fixed_point_[i]);
      return;
    case OperatorKind::Linear: {
      // out = x* + A (x - x*); guard against aliasing via a local accumulator per row
      std::vector<double> shifted(n);
      for (std::size_t i = 0; i < n; ++i) shifted[i] = x[i] - fixed_point_[i];
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* row = matrix_.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * shifted[j];
        out[i] = fixed_point_[i] + acc;
      }
      return;
    }
    case OperatorKind::GradientStep:
      for (std::size_t i = 0; i < n; ++i) {
        const double z = x[i] - fixed_point_[i];
        out[i] = fixed_point_[i] + (z - step_ * diag_[i] * z);
      }
      return;
    case OperatorKind::ProxGradientStep:
      for (std::size_t i = 0; i < n; ++i) {
        const double z = x[i] - step_ * diag_[i] * x[i];
        out[i] = soft_threshold(z, step_ * threshold_);
      }
      return;
  }
}

void Operator::apply_S(std::span<const double> x, std::span<double> out) const {
  const std::size_t n = dim();
  require(x.size() == n && out.size() == n, "Operator::apply_S: size mismatch");
  apply_T(x, out);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - out[i];
}

void Operator::apply_S_block(std::span<const double> x, std::size_t i, std::span<double> out) const {
  const std::size_t n = dim();
  require(x.size() == n, "Operator::apply_S_block: size mismatch");
  const std::size_t off = part_.offset(i);
  const std::size_t len = part_.size(i);
  require(out.size() == len, "Operator::apply_S_block: output size != block size");
  switch (kind_) {
    case OperatorKind::ScaledIdentity:
      for (std::size_t j = 0; j < len; ++j)
        out[j] = (1.0 - r_) * (x[off + j] - fixed_point_[off + j]);
      return;
    case OperatorKind::NegatedScaledIdentity:
      for (std::size_t j = 0; j < len; ++j)
        out[j] = (1.0 + r_) * (x[off + j] - fixed_point_[off + j]);
      return;
    case OperatorKind::Linear: {
      std::vector<double> shifted(n);
      for (std::size_t j = 0; j < n; ++j) shifted[j] = x[j] - fixed_point_[j];
      for (std::size_t j = 0; j < len; ++j) {
        double acc = 0.0;
        const double* row = matrix_.data() + (off + j) * n;
        for (std::size_t c = 0; c < n; ++c) acc += row[c] * shifted[c];
        out[j] = shifted[off + j] - acc;
      }
      return;
    }
    case OperatorKind::GradientStep:
      for (std::size_t j = 0; j < len; ++j)
        out[j] = step_ * diag_[off + j] * (x[off + j] - fixed_point_[off + j]);
      return;
    case OperatorKind::ProxGradientStep:
      for (std::size_t j = 0; j < len; ++j) {
        const double v = x[off + j];
        const double z = v - step_ * diag_[off + j] * v;
        out[j] = v - soft_threshold(z, step_ * threshold_);
      }
      return;
  }
}

ContractionReport contraction_check(const Operator& op, std::size_t pairs, std::uint64_t seed,
                                    double tol) {
  ContractionReport rep;
  rep.declared_r = op.contraction_factor();
  Rng rng(derive_seed(seed, 0x5eed));
  const std::size_t n = op.dim();
  std::vector<double> tx(n), ty(n);
  std::size_t used = 0;
  for (std::size_t s = 0; s < pairs; ++s) {
    const auto x = rng.gaussian_vector(n);
    const auto y = rng.gaussian_vector(n);
    const double d2 = sq_dist(x, y);
    if (d2 < 1e-24) continue;
    op.apply_T(x, tx);
    op.apply_T(y, ty);
    const double ratio = std::sqrt(sq_dist(tx, ty) / d2);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    ++used;
  }
  rep.pairs = used;
  rep.passed = used > 0 && rep.max_ratio <= rep.declared_r + tol;
  return rep;
}

}  // namespace arock
