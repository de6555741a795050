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

#include "arock/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "arock/format.hpp"

namespace arock {
namespace {

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

[[noreturn]] void parse_fail(const std::string& name, std::size_t line, const std::string& what) {
  throw std::runtime_error(name + ":" + fmt_u64(line) + ": " + what);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& name) {
  Config cfg;
  cfg.name_ = name;
  std::istringstream in(text);
  std::string line;
  std::string section;
  bool saw_version = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    if (sv.front() == '[') {
      if (sv.back() != ']') parse_fail(name, lineno, "malformed section header");
      const std::string sec(trim(sv.substr(1, sv.size() - 2)));
      if (!valid_name(sec)) parse_fail(name, lineno, "bad section name '" + sec + "'");
      if (!saw_version) parse_fail(name, lineno, "'version = 1' must precede the first section");
      section = sec;
      continue;
    }
    const std::size_t eq = sv.find('=');
    if (eq == std::string_view::npos) parse_fail(name, lineno, "expected 'key = value'");
    const std::string key(trim(sv.substr(0, eq)));
    const std::string value(trim(sv.substr(eq + 1)));
    if (!valid_name(key)) parse_fail(name, lineno, "bad key name '" + key + "'");
    if (value.empty()) parse_fail(name, lineno, "empty value for key '" + key + "'");
    if (!saw_version) {
      if (section.empty() && key == "version") {
        if (value != "1") parse_fail(name, lineno, "unsupported config version '" + value + "' (expected 1)");
        saw_version = true;
        continue;
      }
      parse_fail(name, lineno, "config must start with 'version = 1'");
    }
    if (section.empty() && key == "version") parse_fail(name, lineno, "duplicate version key");
    if (section.empty())
      parse_fail(name, lineno, "key '" + key + "' appears before any [section]");
    const std::string full = section + "." + key;
    if (cfg.values_.count(full) != 0) parse_fail(name, lineno, "duplicate key '" + full + "'");
    cfg.values_.emplace(full, value);
    cfg.order_.push_back(full);
  }
  if (!saw_version) throw std::runtime_error(name + ": missing 'version = 1'");
  return cfg;
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

std::vector<std::string> Config::section_keys(const std::string& section) const {
  std::vector<std::string> out;
  const std::string prefix = section + ".";
  for (const auto& full : order_) {
    if (full.size() > prefix.size() && full.compare(0, prefix.size(), prefix) == 0 &&
        consumed_.count(full) == 0) {
      out.push_back(full.substr(prefix.size()));
    }
  }
  return out;
}

void Config::fail(const std::string& key, const std::string& what) const {
  throw std::runtime_error(name_ + ": key '" + key + "': " + what);
}

const std::string& Config::raw(const std::string& key) {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(key, "missing required key");
  consumed_.insert(key);
  return it->second;
}

std::string Config::get_string(const std::string& key) { return raw(key); }

std::string Config::get_string(const std::string& key, const std::string& fallback) {
  return has(key) ? raw(key) : fallback;
}

double Config::get_double(const std::string& key) {
  const std::string& v = raw(key);
  try {
    return parse_double(v, key);
  } catch (const std::exception&) {
    fail(key, "not a number: '" + v + "'");
  }
}

double Config::get_double(const std::string& key, double fallback) {
  return has(key) ? get_double(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key) {
  const std::string& v = raw(key);
  std::int64_t parsed = 0;
  try {
    parsed = parse_i64(v, key);
  } catch (const std::exception&) {
    fail(key, "not a non-negative integer: '" + v + "'");
  }
  if (parsed < 0) fail(key, "not a non-negative integer: '" + v + "'");
  return static_cast<std::uint64_t>(parsed);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) {
  return has(key) ? get_u64(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const std::string& v = raw(key);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  fail(key, "not a boolean: '" + v + "'");
}

std::vector<double> Config::get_double_list(const std::string& key) {
  const std::string v = raw(key);
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    std::size_t comma = v.find(',', start);
    if (comma == std::string::npos) comma = v.size();
    const std::string item(trim(std::string_view(v).substr(start, comma - start)));
    if (item.empty()) fail(key, "empty list element");
    try {
      out.push_back(parse_double(item, key));
    } catch (const std::exception&) {
      fail(key, "not a number: '" + item + "'");
    }
    start = comma + 1;
  }
  return out;
}

std::vector<std::uint32_t> Config::get_u32_list(const std::string& key) {
  const std::string v = raw(key);
  std::vector<std::uint32_t> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    std::size_t comma = v.find(',', start);
    if (comma == std::string::npos) comma = v.size();
    const std::string item(trim(std::string_view(v).substr(start, comma - start)));
    if (item.empty()) fail(key, "empty list element");
    std::int64_t parsed = -1;
    try {
      parsed = parse_i64(item, key);
    } catch (const std::exception&) {
      fail(key, "not an integer: '" + item + "'");
    }
    if (parsed < 0 || parsed > 0xffffffffll) {
      fail(key, "not a small non-negative integer: '" + item + "'");
    }
    out.push_back(static_cast<std::uint32_t>(parsed));
    start = comma + 1;
  }
  return out;
}

void Config::done() const {
  std::string leftover;
  for (const auto& full : order_) {
    if (consumed_.count(full) == 0) {
      if (!leftover.empty()) leftover += ", ";
      leftover += full;
    }
  }
  if (!leftover.empty()) {
    throw std::runtime_error(name_ + ": unknown keys: " + leftover);
  }
}

}  // namespace arock
