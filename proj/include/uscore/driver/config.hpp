/*
 * Copyright 2026 The uscore Authors
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

#include "uscore/common.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace uscore::driver {

/// Flat key=value configuration. Lines starting with '#' and blank lines are
/// ignored; later assignments override earlier ones.
class Config {
 public:
  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "model",       "data",        "level",       "l_star",      "horizon",
        "n_particles", "n_list",      "dist",        "l_max",       "seed",
        "workers",     "out",         "k_star",      "m_star",      "sweep_cap",
        "repeats",     "replicates",  "estimator",   "always_resample",
        "levels",      "series",      "restarts",    "alpha",       "beta",
        "init_lo",     "init_hi",     "max_iter",    "patience",    "halving",
        "gradient",    "csv",         "theta",       "data_seed"};
    return keys;
  }

  static Config from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError(path + ": cannot open config file");
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
      }
      cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) {
    if (!known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  void set_default(const std::string& key, const std::string& value) {
    if (!has(key)) set(key, value);
  }

  bool has(const std::string& key) const { return values_.contains(key); }

  std::string str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
  }

  std::string str(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
  }

  long long integer(const std::string& key) const { return parse_int(key, str(key)); }
  long long integer(const std::string& key, long long fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  double real(const std::string& key) const {
    const std::string v = str(key);
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
  }
  double real(const std::string& key, double fallback) const {
    return has(key) ? real(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = str(key);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
  }

  /// Comma-separated integers.
  std::vector<long long> integers(const std::string& key) const {
    std::vector<long long> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
  }

  /// Sorted key=value lines; the input to the manifest hash.
  std::string canonical(const std::set<std::string>& exclude = {}) const {
    std::string out;
    for (const auto& [k, v] : values_) {
      if (exclude.contains(k)) continue;
      out += k + "=" + v + "\n";
    }
    return out;
  }

  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static long long parse_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
    return x;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace uscore::driver
