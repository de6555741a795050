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

#include <cmath>
#include <vector>

#include "arock/operators.hpp"
#include "arock/rng.hpp"
#include "doctest.h"

using namespace arock;

TEST_SUITE("operators") {

TEST_CASE("uniform partition covers the coordinates") {
  const auto part = BlockPartition::uniform(4, 3);
  CHECK(part.blocks() == 4);
  CHECK(part.dim() == 12);
  CHECK(part.offset(0) == 0);
  CHECK(part.offset(3) == 9);
  CHECK(part.size(2) == 3);
  CHECK_THROWS(BlockPartition::uniform(0, 3));
  CHECK_THROWS((void)part.offset(4));
}

TEST_CASE("partition from sizes and block spans") {
  const auto part = BlockPartition::from_sizes({2, 1, 3});
  CHECK(part.blocks() == 3);
  CHECK(part.dim() == 6);
  std::vector<double> x = {0, 1, 2, 3, 4, 5};
  auto b2 = part.block(x, 2);
  REQUIRE(b2.size() == 3);
  CHECK(b2[0] == 3.0);
  b2[2] = 9.0;
  CHECK(x[5] == 9.0);
  CHECK_THROWS(BlockPartition::from_sizes({2, 0}));
  CHECK(part == BlockPartition::from_sizes({2, 1, 3}));
}

TEST_CASE("squared norms accumulate exactly on small integers") {
  const std::vector<double> a = {3.0, 4.0};
  const std::vector<double> b = {0.0, 0.0};
  CHECK(sq_norm(a) == 25.0);
  CHECK(sq_dist(a, b) == 25.0);
  CHECK(sq_dist(a, a) == 0.0);
}

TEST_CASE("scaled identity scales around its fixed point") {
  const double r = 0.5;
  const auto op = Operator::scaled_identity(r, BlockPartition::uniform(3, 1), {1.0, 2.0, 3.0});
  std::vector<double> x = {3.0, 2.0, 7.0}, t(3), s(3);
  op.apply_T(x, t);
  op.apply_S(x, s);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(t[i] == op.fixed_point()[i] + r * (x[i] - op.fixed_point()[i]));
    CHECK(s[i] == x[i] - t[i]);
  }
  // the fixed point is genuinely fixed
  op.apply_S(op.fixed_point(), s);
  CHECK(s == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(op.kind() == OperatorKind::ScaledIdentity);
  CHECK(op.contraction_factor() == r);
}

TEST_CASE("negated scaled identity flips the residual direction") {
  const double r = 0.9;
  const auto op = Operator::negated_scaled_identity(r, BlockPartition::uniform(2, 1));
  std::vector<double> x = {1.0, -2.0}, t(2);
  op.apply_T(x, t);
  CHECK(t[0] == -r * x[0]);
  CHECK(t[1] == -r * x[1]);
}

TEST_CASE("operator construction rejects bad contraction factors") {
  const auto part = BlockPartition::uniform(2, 1);
  CHECK_THROWS(Operator::scaled_identity(1.0, part));
  CHECK_THROWS(Operator::scaled_identity(0.0, part));
  CHECK_THROWS(Operator::scaled_identity(0.5, part, {1.0, 2.0, 3.0}));
}

TEST_CASE("linear operator applies the matrix around the fixed point") {
  // rotation scaled by 0.8: every pair contracts by exactly that factor
  const double r = 0.8;
  const std::vector<double> A = {0.0, r, -r, 0.0};
  const auto op = Operator::linear(A, r, BlockPartition::uniform(2, 1));
  std::vector<double> x = {1.0, 2.0}, t(2);
  op.apply_T(x, t);
  CHECK(t[0] == r * x[1]);
  CHECK(t[1] == -r * x[0]);
  const auto rep = contraction_check(op, 200, 7);
  CHECK(rep.passed);
  CHECK(rep.max_ratio == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("gradient step contracts with 1 - 2/(kappa+1)") {
  const std::size_t dim = 6;
  std::vector<double> diag(dim);
  for (std::size_t i = 0; i < dim; ++i)
    diag[i] = 1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(dim - 1);
  const auto op = make_gd_operator(diag, 1.0, 3.0, BlockPartition::uniform(dim, 1));
  CHECK(op.contraction_factor() == 0.5);
  CHECK(op.kappa() == 3.0);
  const auto rep = contraction_check(op, 500, 11);
  CHECK(rep.passed);
  CHECK(rep.max_ratio <= 0.5 + 1e-12);

  // the extreme quadratic f = (L/2)||x||^2 attains the factor on every pair
  const auto sharp = make_gd_operator(std::vector<double>(dim, 3.0), 1.0, 3.0,
                                      BlockPartition::uniform(dim, 1));
  const auto sharp_rep = contraction_check(sharp, 200, 13);
  CHECK(sharp_rep.max_ratio == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("prox gradient step keeps the contraction and fixes the origin") {
  const std::size_t dim = 8;
  std::vector<double> diag(dim, 1.0);
  diag.back() = 3.0;
  const auto op = make_prox_gd_operator(diag, 1.0, 3.0, 0.1, BlockPartition::uniform(dim, 1));
  std::vector<double> s(dim);
  const std::vector<double> origin(dim, 0.0);
  op.apply_S(origin, s);
  CHECK(sq_norm(s) == 0.0);
  const auto rep = contraction_check(op, 500, 17);
  CHECK(rep.passed);
  // soft threshold clips small coordinates toward zero
  std::vector<double> x(dim, 0.0), t(dim);
  x[0] = 0.02;
  op.apply_T(x, t);
  CHECK(t[0] == 0.0);
}

TEST_CASE("block residual rows match the full residual") {
  const std::size_t m = 4, bs = 3, dim = m * bs;
  std::vector<double> diag(dim);
  for (std::size_t i = 0; i < dim; ++i)
    diag[i] = 1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(dim - 1);
  const auto op = make_gd_operator(diag, 1.0, 3.0, BlockPartition::uniform(m, bs));
  Rng rng(99);
  const auto x = rng.gaussian_vector(dim);
  std::vector<double> full(dim), block(bs), assembled(dim);
  op.apply_S(x, full);
  for (std::size_t i = 0; i < m; ++i) {
    op.apply_S_block(x, i, block);
    for (std::size_t j = 0; j < bs; ++j) assembled[i * bs + j] = block[j];
  }
  const double gap = std::sqrt(sq_dist(full, assembled) / std::max(1.0, sq_norm(full)));
  CHECK(gap <= 1e-13);
}

TEST_CASE("describe names the operator kind") {
  const auto op = Operator::scaled_identity(0.5, BlockPartition::uniform(2, 1));
  CHECK(op.describe().find("scaled-identity") != std::string::npos);
  const auto gd = make_gd_operator({1.0, 3.0}, 1.0, 3.0, BlockPartition::uniform(2, 1));
  CHECK(gd.describe().find("gradient-step") != std::string::npos);
}

TEST_CASE("contraction check reports the declared factor for scaled identity") {
  const auto op = Operator::scaled_identity(0.9, BlockPartition::uniform(5, 1));
  const auto rep = contraction_check(op, 100, 3);
  CHECK(rep.pairs == 100);
  CHECK(rep.declared_r == 0.9);
  CHECK(rep.max_ratio == doctest::Approx(0.9).epsilon(1e-13));
  CHECK(rep.passed);
}

}  // TEST_SUITE
