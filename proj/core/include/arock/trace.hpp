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
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace arock {

/// One iteration record. sq_error and lyapunov describe the state *before*
/// the step taken at k; block/delay/eta describe that step. block is -1 when
/// a synchronous step touched more than one block. bound is the predicted
/// upper bound on the conditional expectation of the next Lyapunov value
/// (NaN when no rate prediction applies).
struct TraceRow {
  std::uint64_t k = 0;
  std::int64_t block = -1;
  std::int64_t delay = 0;
  double eta = 0.0;
  double sq_error = 0.0;
  double lyapunov = 0.0;
  double bound = 0.0;
};

/// Iteration log plus run metadata. CSV layout: '#'-prefixed "key = value"
/// metadata lines, a fixed header, then one row per iteration with k
/// contiguous from 0. All numbers use shortest round-trip formatting, so
/// rewriting a parsed trace reproduces it byte for byte.
struct Trace {
  std::map<std::string, std::string> meta;
  std::vector<TraceRow> rows;

  void write_csv(std::ostream& os) const;
  void save(const std::string& path) const;
  static Trace read_csv(std::istream& is);
  static Trace load(const std::string& path);

  std::string format_row(std::size_t idx) const;
  double meta_double(const std::string& key) const;
  std::string meta_str(const std::string& key) const;
};

/// Least-squares geometric decay rate of a positive series y_k ~ C rate^k.
/// Non-positive entries are skipped; requires at least 10 usable points.
double fit_geometric_rate(const std::vector<double>& values);
/// Same, on explicit (k, y) pairs.
double fit_geometric_rate(const std::vector<std::pair<double, double>>& points);

}  // namespace arock
