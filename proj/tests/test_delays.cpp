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
#include <cstdio>
#include <filesystem>
#include <map>

#include "arock/delays.hpp"
#include "doctest.h"

using namespace arock;

TEST_SUITE("delays") {

TEST_CASE("zero model never ages") {
  const auto model = DelayModel::zero();
  CHECK(model.tail_prob(0) == 1.0);
  CHECK(model.tail_prob(1) == 0.0);
  CHECK(model.max_age() == 0);
  Rng rng(1);
  const auto ages = sample_delay_vector(model, rng, 50, 4);
  for (auto a : ages) CHECK(a == 0);
}

TEST_CASE("fixed age saturates at tau and clamps early iterations") {
  const auto model = DelayModel::fixed_age(3);
  CHECK(model.tail_prob(3) == 1.0);
  CHECK(model.tail_prob(4) == 0.0);
  CHECK(model.max_age() == 3);
  Rng rng(1);
  auto ages = sample_delay_vector(model, rng, 10, 4);
  for (auto a : ages) CHECK(a == 3);
  ages = sample_delay_vector(model, rng, 2, 4);
  for (auto a : ages) CHECK(a == 2);  // age cannot predate the first iterate
}

TEST_CASE("geometric tails and their sampled frequencies agree") {
  const auto model = DelayModel::geometric(0.5);
  CHECK(model.tail_prob(1) == 0.5);
  CHECK(model.tail_prob(2) == 0.25);
  CHECK(model.max_age() == UINT32_MAX);
  const auto depth = model.suggested_depth(1e-12);
  CHECK(depth >= 38);
  CHECK(depth <= 42);

  Rng rng(7);
  const std::size_t n = 20000;
  std::size_t ge1 = 0;
  std::uint32_t age = 0;
  for (std::size_t k = 0; k < n; ++k) {
    model.sample_ages(rng, 1000 + k, {&age, 1});
    if (age >= 1) ++ge1;
  }
  const double freq = static_cast<double>(ge1) / static_cast<double>(n);
  CHECK(freq == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("bounded uniform has linear tails") {
  const auto model = DelayModel::bounded_uniform(4);
  CHECK(model.tail_prob(1) == 0.8);
  CHECK(model.tail_prob(4) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(model.tail_prob(5) == 0.0);
  CHECK(model.max_age() == 4);
  CHECK(model.sampling() == DelaySampling::PerBlock);
}

TEST_CASE("empirical tails are exact suffix frequencies") {
  const auto model = DelayModel::empirical({{0, 50}, {1, 30}, {2, 20}});
  CHECK(model.tail_prob(1) == 0.5);
  CHECK(model.tail_prob(2) == 0.2);
  CHECK(model.tail_prob(3) == 0.0);
  CHECK(model.max_age() == 2);
  CHECK(model.sampling() == DelaySampling::SharedAge);
  Rng rng(3);
  std::uint32_t age = 0;
  for (int k = 0; k < 100; ++k) {
    model.sample_ages(rng, 10 + k, {&age, 1});
    CHECK(age <= 2);
  }
  CHECK_THROWS((void)DelayModel::empirical({}));
}

TEST_CASE("shared age gives every block the same draw") {
  const auto model = DelayModel::geometric(0.7, DelaySampling::SharedAge);
  Rng rng(5);
  std::vector<std::uint32_t> ages(6);
  bool saw_positive = false;
  for (int k = 0; k < 50; ++k) {
    model.sample_ages(rng, 100 + k, ages);
    for (auto a : ages) CHECK(a == ages[0]);
    saw_positive = saw_positive || ages[0] > 0;
  }
  CHECK(saw_positive);
}

TEST_CASE("schedules replay their ages and refuse to extrapolate") {
  const auto model = DelayModel::schedule({0, 1, 2, 5});
  CHECK(model.kind() == DelayModel::Kind::Deterministic);
  CHECK(model.schedule_length() == 4);
  CHECK(model.max_age() == 5);
  CHECK_THROWS((void)model.tail_prob(1));
  Rng rng(1);
  std::vector<std::uint32_t> ages(2);
  model.sample_ages(rng, 1, ages);
  CHECK(ages == std::vector<std::uint32_t>{1, 1});
  model.sample_ages(rng, 3, ages);
  CHECK(ages == std::vector<std::uint32_t>{3, 3});  // clamped to k
  CHECK_THROWS(model.sample_ages(rng, 4, ages));
}

TEST_CASE("delay moments match the geometric closed form") {
  const double rho = 0.981, pbar = 0.5;
  const auto mom = delay_moments(DelayModel::geometric(pbar), rho);
  const double x = pbar / std::sqrt(rho);
  const double y = std::sqrt(pbar / rho);
  CHECK_FALSE(mom.diverged);
  CHECK(mom.M1 == doctest::Approx(x / (1.0 - x)).epsilon(1e-10));
  CHECK(mom.M2 == doctest::Approx(y / (1.0 - y)).epsilon(1e-10));
  CHECK(mom.M1 == doctest::Approx(1.0194626820472987).epsilon(1e-12));
  CHECK(mom.M2 == doctest::Approx(2.4955448062281188).epsilon(1e-12));
}

TEST_CASE("delay moments: zero model has none, heavy tails diverge") {
  const auto none = delay_moments(DelayModel::zero(), 0.99);
  CHECK(none.M1 == 0.0);
  CHECK(none.M2 == 0.0);
  // pbar / sqrt(rho) > 1 makes the M1 series grow without bound
  const auto heavy = delay_moments(DelayModel::geometric(0.999), 0.9);
  CHECK(heavy.diverged);
}

TEST_CASE("empirical moments truncate to the exact finite sum") {
  const double rho = 0.95;
  const auto model = DelayModel::empirical({{0, 50}, {1, 30}, {2, 20}});
  const auto mom = delay_moments(model, rho);
  const double s = std::sqrt(rho);
  const double m1 = 0.5 / s + 0.2 / (s * s);
  const double m2 = std::sqrt(0.5) / s + std::sqrt(0.2) / (s * s);
  CHECK(mom.M1 == doctest::Approx(m1).epsilon(1e-14));
  CHECK(mom.M2 == doctest::Approx(m2).epsilon(1e-14));
}

TEST_CASE("histograms survive a csv round trip") {
  const std::map<std::uint32_t, std::uint64_t> hist = {{0, 123}, {2, 45}, {9, 6}};
  const auto path = (std::filesystem::temp_directory_path() / "arock_hist.csv").string();
  save_histogram(hist, path);
  CHECK(load_histogram(path) == hist);
  std::remove(path.c_str());
  CHECK_THROWS((void)load_histogram(path));
}

TEST_CASE("model validation rejects degenerate parameters") {
  CHECK_THROWS((void)DelayModel::geometric(1.0));
  CHECK_THROWS((void)DelayModel::geometric(-0.1));
  CHECK_THROWS((void)DelayModel::schedule({}));
}

}  // TEST_SUITE
