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

#include "arock/history.hpp"

#include <stdexcept>

#include "arock/operators.hpp"

namespace arock {

IterateHistory::IterateHistory(std::vector<double> x0, std::size_t depth)
    : depth_(depth == 0 ? 1 : depth), dim_(x0.size()) {
  if (dim_ == 0) throw std::invalid_argument("IterateHistory: empty initial iterate");
  slots_.assign(depth_ + 1, x0);
  diffs_.assign(depth_, 0.0);
}

const std::vector<double>& IterateHistory::iterate(std::size_t age) const {
  if (age > depth_) throw std::out_of_range("IterateHistory::iterate: age exceeds depth");
  // slots are ordered so that pos_ - age (mod depth+1) holds the age-old iterate
  const std::size_t n = depth_ + 1;
  return slots_[(pos_ + n - age % n) % n];
}

double IterateHistory::diff_sq(std::size_t i) const {
  if (i == 0 || i > depth_) throw std::out_of_range("IterateHistory::diff_sq: index outside 1..depth");
  return diffs_[(diff_pos_ + i - 1) % depth_];
}

std::vector<double>& IterateHistory::scratch() {
  const std::size_t n = depth_ + 1;
  return slots_[(pos_ + 1) % n];
}

void IterateHistory::commit() {
  const std::size_t n = depth_ + 1;
  const std::size_t next = (pos_ + 1) % n;
  const double d1 = sq_dist(slots_[next], slots_[pos_]);
  pos_ = next;
  ++step_;
  if (depth_ > 0) {
    diff_pos_ = (diff_pos_ + depth_ - 1) % depth_;
    diffs_[diff_pos_] = d1;
  }
  if (step_ == 0) throw std::overflow_error("IterateHistory: step counter wrapped");
}

}  // namespace arock
