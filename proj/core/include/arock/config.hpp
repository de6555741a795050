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
#include <map>
#include <set>
#include <string>
#include <vector>

namespace arock {

/// Versioned key-value configuration: a mandatory leading "version = 1", then
/// "[section]" headers with "key = value" lines ('#' starts a comment line).
/// Keys are addressed as "section.key". Every key must be consumed by a typed
/// getter before done() is called; leftovers are reported as unknown keys, so
/// misspelled settings fail loudly instead of silently using defaults.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& name = "<string>");

  bool has(const std::string& key) const;
  /// Keys of a section that are still unconsumed, in file order.
  std::vector<std::string> section_keys(const std::string& section) const;

  std::string get_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key);
  double get_double(const std::string& key, double fallback);
  std::uint64_t get_u64(const std::string& key);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  /// Comma-separated lists.
  std::vector<double> get_double_list(const std::string& key);
  std::vector<std::uint32_t> get_u32_list(const std::string& key);

  /// Throws listing every key that was never consumed.
  void done() const;

  const std::string& name() const { return name_; }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
  const std::string& raw(const std::string& key);

  std::string name_;
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
  std::set<std::string> consumed_;
};

}  // namespace arock
