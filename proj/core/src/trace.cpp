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

#include "arock/trace.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "arock/format.hpp"

namespace arock {

namespace {
constexpr const char* kHeader = "k,block,delay,eta,sq_error,lyapunov,bound";

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}
}  // namespace

std::string Trace::format_row(std::size_t idx) const {
  const TraceRow& r = rows.at(idx);
  std::string line = fmt_u64(r.k);
  line += ',';
  line += fmt_i64(r.block);
  line += ',';
  line += fmt_i64(r.delay);
  line += ',';
  line += fmt_double(r.eta);
  line += ',';
  line += fmt_double(r.sq_error);
  line += ',';
  line += fmt_double(r.lyapunov);
  line += ',';
  line += fmt_double(r.bound);
  return line;
}

void Trace::write_csv(std::ostream& os) const {
  for (const auto& [k, v] : meta) os << "# " << k << " = " << v << "\n";
  os << kHeader << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) os << format_row(i) << "\n";
}

void Trace::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("Trace::save: cannot open " + path);
  write_csv(os);
  if (!os) throw std::runtime_error("Trace::save: write failed for " + path);
}

Trace Trace::read_csv(std::istream& is) {
  Trace t;
  std::string line;
  bool header_seen = false;
  std::uint64_t expect_k = 0;
  while (std::getline(is, line)) {
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      sv.remove_prefix(1);
      const auto eq = sv.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string key(trim(sv.substr(0, eq)));
      const std::string val(trim(sv.substr(eq + 1)));
      t.meta[key] = val;
      continue;
    }
    if (!header_seen) {
      if (sv != kHeader) throw std::invalid_argument("Trace::read_csv: unexpected header '" + std::string(sv) + "'");
      header_seen = true;
      continue;
    }
    const auto cols = split(sv, ',');
    if (cols.size() != 7) throw std::invalid_argument("Trace::read_csv: expected 7 columns");
    TraceRow r;
    r.k = static_cast<std::uint64_t>(parse_i64(cols[0], "trace k"));
    r.block = parse_i64(cols[1], "trace block");
    r.delay = parse_i64(cols[2], "trace delay");
    r.eta = parse_double(cols[3], "trace eta");
    r.sq_error = parse_double(cols[4], "trace sq_error");
    r.lyapunov = parse_double(cols[5], "trace lyapunov");
    r.bound = parse_double(cols[6], "trace bound");
    if (r.k != expect_k)
      throw std::invalid_argument("Trace::read_csv: rows must be contiguous in k starting at 0");
    ++expect_k;
    t.rows.push_back(r);
  }
  if (!header_seen) throw std::invalid_argument("Trace::read_csv: missing header");
  return t;
}

Trace Trace::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("Trace::load: cannot open " + path);
  return read_csv(is);
}

double Trace::meta_double(const std::string& key) const {
  return parse_double(meta_str(key), "trace meta " + key);
}

std::string Trace::meta_str(const std::string& key) const {
  const auto it = meta.find(key);
  if (it == meta.end()) throw std::out_of_range("trace meta missing key '" + key + "'");
  return it->second;
}

double fit_geometric_rate(const std::vector<std::pair<double, double>>& points) {
  // least squares of log y on k
  double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [k, y] : points) {
    if (!(y > 0.0) || !std::isfinite(y)) continue;
    const double ly = std::log(y);
    n += 1.0;
    sx += k;
    sy += ly;
    sxx += k * k;
    sxy += k * ly;
  }
  if (n < 10.0) throw std::invalid_argument("fit_geometric_rate: need at least 10 positive points");
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("fit_geometric_rate: degenerate abscissae");
  const double slope = (n * sxy - sx * sy) / denom;
  return std::exp(slope);
}

double fit_geometric_rate(const std::vector<double>& values) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) pts.emplace_back(static_cast<double>(i), values[i]);
  return fit_geometric_rate(pts);
}

}  // namespace arock
