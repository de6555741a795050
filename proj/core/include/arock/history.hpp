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
#include <vector>

namespace arock {

/// Ring buffer of the last depth+1 iterates plus the squared step differences
/// d_i = ||x^{k+1-i} - x^{k-i}||^2 for i = 1..depth. The buffer starts filled
/// with x^0, so ages beyond the current step read as x^0 and their differences
/// as 0. depth is clamped to at least 1.
class IterateHistory {
public:
  IterateHistory(std::vector<double> x0, std::size_t depth);

  std::size_t depth() const { return depth_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t step() const { return step_; }

  const std::vector<double>& current() const { return slots_[pos_]; }
  /// Iterate with the given age (0 = current). age must be <= depth.
  const std::vector<double>& iterate(std::size_t age) const;
  /// d_i for i in 1..depth; zero when i exceeds the number of pushes so far.
  double diff_sq(std::size_t i) const;

  /// Storage for the next iterate (the slot about to be overwritten). Fill it
  /// completely, then call commit().
  std::vector<double>& scratch();
  /// Advances the ring: scratch() becomes the current iterate and
  /// d_1 = ||new - old||^2 is recorded (older d_i shift by one).
  void commit();

private:
  std::size_t depth_;
  std::size_t dim_;
  std::uint64_t step_ = 0;
  std::size_t pos_ = 0;                    // index of the current iterate
  std::vector<std::vector<double>> slots_; // depth_+1 iterates
  std::vector<double> diffs_;              // circular, diffs_[diff_pos_] = d_1
  std::size_t diff_pos_ = 0;
};

}  // namespace arock
