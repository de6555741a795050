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

#include "arock/delays.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "arock/format.hpp"

namespace arock {

DelayModel DelayModel::zero() {
  DelayModel m;
  m.kind_ = Kind::Stochastic;
  m.family_ = Family::Zero;
  m.sampling_ = DelaySampling::SharedAge;
  m.name_ = "zero";
  return m;
}

DelayModel DelayModel::fixed_age(std::uint32_t tau, DelaySampling s) {
  if (tau == 0) return zero();
  DelayModel m;
  m.kind_ = Kind::Stochastic;
  m.family_ = Family::Fixed;
  m.tau_ = tau;
  m.sampling_ = s;
  m.name_ = "fixed(" + fmt_u64(tau) + ")";
  return m;
}

DelayModel DelayModel::geometric(double pbar, DelaySampling s) {
  if (!(pbar > 0.0 && pbar < 1.0))
    throw std::invalid_argument("DelayModel::geometric: pbar must lie in (0, 1)");
  DelayModel m;
  m.kind_ = Kind::Stochastic;
  m.family_ = Family::Geometric;
  m.pbar_ = pbar;
  m.sampling_ = s;
  m.name_ = "geometric(" + fmt_double(pbar) + ")";
  return m;
}

DelayModel DelayModel::bounded_uniform(std::uint32_t tau, DelaySampling s) {
  DelayModel m;
  m.kind_ = Kind::Stochastic;
  m.family_ = Family::BoundedUniform;
  m.tau_ = tau;
  m.sampling_ = s;
  m.name_ = "uniform(0.." + fmt_u64(tau) + ")";
  return m;
}

DelayModel DelayModel::empirical(std::map<std::uint32_t, std::uint64_t> histogram, DelaySampling s) {
  DelayModel m;
  m.kind_ = Kind::Empirical;
  m.family_ = Family::Empirical;
  m.sampling_ = s;
  m.hist_ = std::move(histogram);
  for (const auto& [age, count] : m.hist_) {
    if (count == 0) continue;
    m.hist_ages_.push_back(age);
    m.hist_total_ += count;
    m.hist_cum_.push_back(m.hist_total_);
  }
  if (m.hist_total_ == 0)
    throw std::invalid_argument("DelayModel::empirical: histogram has no mass");
  m.name_ = "empirical(" + fmt_u64(m.hist_total_) + " samples)";
  return m;
}

DelayModel DelayModel::schedule(std::vector<std::uint32_t> ages) {
  if (ages.empty()) throw std::invalid_argument("DelayModel::schedule: empty schedule");
  DelayModel m;
  m.kind_ = Kind::Deterministic;
  m.sampling_ = DelaySampling::SharedAge;
  m.schedule_ = std::move(ages);
  m.name_ = "schedule(" + fmt_u64(m.schedule_.size()) + " steps)";
  return m;
}

std::string DelayModel::describe() const { return name_; }

double DelayModel::tail_prob(std::uint32_t l) const {
  if (kind_ == Kind::Deterministic)
    throw std::logic_error("DelayModel::tail_prob: schedules have no age distribution");
  if (l == 0) return 1.0;
  switch (family_) {
    case Family::Zero:
      return 0.0;
    case Family::Fixed:
      return l <= tau_ ? 1.0 : 0.0;
    case Family::Geometric:
      return std::pow(pbar_, static_cast<double>(l));
    case Family::BoundedUniform:
      if (l > tau_) return 0.0;
      return static_cast<double>(tau_ - l + 1) / static_cast<double>(tau_ + 1);
    case Family::Empirical: {
      // suffix count / total
      std::uint64_t below = 0;
      for (std::size_t i = 0; i < hist_ages_.size(); ++i) {
        if (hist_ages_[i] >= l) break;
        below = hist_cum_[i];
      }
      return static_cast<double>(hist_total_ - below) / static_cast<double>(hist_total_);
    }
  }
  return 0.0;
}

std::uint32_t DelayModel::max_age() const {
  switch (kind_) {
    case Kind::Deterministic:
      return *std::max_element(schedule_.begin(), schedule_.end());
    case Kind::Empirical:
      return hist_ages_.back();
    case Kind::Stochastic:
      switch (family_) {
        case Family::Zero: return 0;
        case Family::Fixed: return tau_;
        case Family::BoundedUniform: return tau_;
        case Family::Geometric: return std::numeric_limits<std::uint32_t>::max();
        default: break;
      }
  }
  return 0;
}

std::size_t DelayModel::suggested_depth(double tol, std::size_t cap) const {
  if (kind_ == Kind::Deterministic) return std::min<std::size_t>(max_age(), cap);
  const std::uint32_t bound = max_age();
  if (bound != std::numeric_limits<std::uint32_t>::max()) return std::min<std::size_t>(bound, cap);
  std::size_t l = 1;
  while (l < cap && tail_prob(static_cast<std::uint32_t>(l)) >= tol) ++l;
  return l;
}

std::uint32_t DelayModel::sample_one(Rng& rng) const {
  switch (family_) {
    case Family::Zero:
      return 0;
    case Family::Fixed:
      return tau_;
    case Family::Geometric: {
      // P[age >= l] = pbar^l
      const double u = rng.uniform01();
      const double a = std::floor(std::log1p(-u) / std::log(pbar_));
      if (a >= 4294967295.0) return std::numeric_limits<std::uint32_t>::max();
      return static_cast<std::uint32_t>(a);
    }
    case Family::BoundedUniform:
      return static_cast<std::uint32_t>(rng.uniform_index(static_cast<std::size_t>(tau_) + 1));
    case Family::Empirical: {
      const std::uint64_t target = static_cast<std::uint64_t>(rng.uniform_index(hist_total_)) + 1;
      const auto it = std::lower_bound(hist_cum_.begin(), hist_cum_.end(), target);
      return hist_ages_[static_cast<std::size_t>(it - hist_cum_.begin())];
    }
  }
  return 0;
}

void DelayModel::sample_ages(Rng& rng, std::uint64_t k, std::span<std::uint32_t> out) const {
  const std::uint32_t clamp =
      k >= std::numeric_limits<std::uint32_t>::max()
          ? std::numeric_limits<std::uint32_t>::max()
          : static_cast<std::uint32_t>(k);
  if (kind_ == Kind::Deterministic) {
    if (k >= schedule_.size())
      throw std::out_of_range("DelayModel::sample_ages: schedule exhausted at iteration " + fmt_u64(k));
    const std::uint32_t age = std::min(schedule_[static_cast<std::size_t>(k)], clamp);
    std::fill(out.begin(), out.end(), age);
    return;
  }
  if (sampling_ == DelaySampling::SharedAge) {
    const std::uint32_t age = std::min(sample_one(rng), clamp);
    std::fill(out.begin(), out.end(), age);
    return;
  }
  for (auto& o : out) o = std::min(sample_one(rng), clamp);
}

const std::map<std::uint32_t, std::uint64_t>& DelayModel::histogram() const {
  if (kind_ != Kind::Empirical)
    throw std::logic_error("DelayModel::histogram: not an empirical model");
  return hist_;
}

std::vector<std::uint32_t> sample_delay_vector(const DelayModel& model, Rng& rng, std::uint64_t k,
                                               std::size_t m) {
  std::vector<std::uint32_t> v(m);
  model.sample_ages(rng, k, v);
  return v;
}

DelayMoments delay_moments(const DelayModel& model, double rho, double tol, std::size_t max_terms) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("delay_moments: rho must lie in (0, 1)");
  if (model.kind() == DelayModel::Kind::Deterministic)
    throw std::invalid_argument("delay_moments: schedules have no age distribution");
  DelayMoments mom;
  const double lr = -0.5 * std::log(rho);  // rho^{-l/2} = exp(l * lr)

  // Bounded support: the sum is an exact finite sum, no heuristics needed.
  const std::uint32_t bound = model.max_age();
  if (bound != std::numeric_limits<std::uint32_t>::max()) {
    const std::size_t last = std::min<std::size_t>(bound, max_terms);
    for (std::size_t l = 1; l <= last; ++l) {
      const double P = model.tail_prob(static_cast<std::uint32_t>(l));
      const double w = std::exp(static_cast<double>(l) * lr);
      mom.M1 += P * w;
      mom.M2 += std::sqrt(P) * w;
    }
    mom.terms = last;
    mom.diverged = static_cast<std::size_t>(bound) > max_terms;
    return mom;
  }

  std::size_t settled = 0;   // consecutive terms below tol * running sum
  std::size_t growing = 0;   // consecutive terms not below the previous one
  double prev_term = -1.0;
  for (std::size_t l = 1; l <= max_terms; ++l) {
    const double P = model.tail_prob(static_cast<std::uint32_t>(l));
    const double w = std::exp(static_cast<double>(l) * lr);
    const double t1 = P * w;
    const double t2 = std::sqrt(P) * w;
    mom.M1 += t1;
    mom.M2 += t2;
    mom.terms = l;
    const double big = std::max(t1, t2);
    if (prev_term >= 0.0 && big >= prev_term && big > 0.0) {
      if (++growing >= 100) {
        mom.diverged = true;
        return mom;
      }
    } else {
      growing = 0;
    }
    prev_term = big;
    const double scale = std::max(mom.M1, mom.M2);
    if (big <= tol * scale) {
      if (++settled >= 10) {
        // geometric tail estimate from the last observed ratio
        mom.tail_estimate = big;
        return mom;
      }
    } else {
      settled = 0;
    }
    if (!std::isfinite(mom.M1) || !std::isfinite(mom.M2)) {
      mom.diverged = true;
      return mom;
    }
  }
  mom.diverged = true;  // never settled within max_terms
  return mom;
}

std::map<std::uint32_t, std::uint64_t> load_histogram(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_histogram: cannot open " + path);
  std::map<std::uint32_t, std::uint64_t> hist;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    if (!header_seen) {
      if (sv != "age,count") throw std::invalid_argument("load_histogram: expected 'age,count' header");
      header_seen = true;
      continue;
    }
    const auto comma = sv.find(',');
    if (comma == std::string_view::npos) throw std::invalid_argument("load_histogram: bad row");
    const auto age = parse_i64(trim(sv.substr(0, comma)), "histogram age");
    const auto count = parse_i64(trim(sv.substr(comma + 1)), "histogram count");
    if (age < 0 || count < 0) throw std::invalid_argument("load_histogram: negative entry");
    hist[static_cast<std::uint32_t>(age)] += static_cast<std::uint64_t>(count);
  }
  if (!header_seen) throw std::invalid_argument("load_histogram: missing header");
  return hist;
}

void save_histogram(const std::map<std::uint32_t, std::uint64_t>& hist, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_histogram: cannot open " + path);
  os << "age,count\n";
  for (const auto& [age, count] : hist)
    os << fmt_u64(age) << ',' << fmt_u64(count) << "\n";
  if (!os) throw std::runtime_error("save_histogram: write failed for " + path);
}

}  // namespace arock
