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

#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace arock {

/// Contiguous partition of coordinates 0..dim-1 into m non-empty blocks.
/// Block i covers [offset(i), offset(i) + size(i)).
class BlockPartition {
public:
  BlockPartition() = default;

  static BlockPartition uniform(std::size_t m, std::size_t block_size) {
    if (m == 0 || block_size == 0)
      throw std::invalid_argument("BlockPartition::uniform: m and block_size must be positive");
    BlockPartition p;
    p.offsets_.resize(m + 1);
    for (std::size_t i = 0; i <= m; ++i) p.offsets_[i] = i * block_size;
    return p;
  }

  static BlockPartition from_sizes(const std::vector<std::size_t>& sizes) {
    if (sizes.empty()) throw std::invalid_argument("BlockPartition::from_sizes: no blocks");
    BlockPartition p;
    p.offsets_.resize(sizes.size() + 1);
    p.offsets_[0] = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] == 0) throw std::invalid_argument("BlockPartition::from_sizes: empty block");
      p.offsets_[i + 1] = p.offsets_[i] + sizes[i];
    }
    return p;
  }

  std::size_t blocks() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t dim() const { return offsets_.empty() ? 0 : offsets_.back(); }

  std::size_t offset(std::size_t i) const {
    check(i);
    return offsets_[i];
  }
  std::size_t size(std::size_t i) const {
    check(i);
    return offsets_[i + 1] - offsets_[i];
  }

  std::span<double> block(std::vector<double>& x, std::size_t i) const {
    check_vec(x.size(), i);
    return std::span<double>(x.data() + offsets_[i], offsets_[i + 1] - offsets_[i]);
  }
  std::span<const double> block(const std::vector<double>& x, std::size_t i) const {
    check_vec(x.size(), i);
    return std::span<const double>(x.data() + offsets_[i], offsets_[i + 1] - offsets_[i]);
  }

  bool operator==(const BlockPartition& o) const = default;

private:
  void check(std::size_t i) const {
    if (i >= blocks()) throw std::out_of_range("BlockPartition: block index out of range");
  }
  void check_vec(std::size_t n, std::size_t i) const {
    check(i);
    if (n != dim()) throw std::invalid_argument("BlockPartition: vector length != partition dim");
  }

  std::vector<std::size_t> offsets_;
};

}  // namespace arock
