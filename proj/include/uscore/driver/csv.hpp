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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

namespace uscore::driver {

/// Shortest round-trip decimal form; "nan" for NaN.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt(long long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(std::uint64_t v) { return std::to_string(v); }

/// Serialized CSV sink. The first column of every file is the manifest hash.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> columns, std::string manifest_hash)
      : path_(path), columns_(std::move(columns)), hash_(std::move(manifest_hash)) {
    os_.open(path, std::ios::trunc);
    if (!os_) throw IoError(path + ": cannot open for writing");
    os_ << "manifest_hash";
    for (const auto& c : columns_) os_ << ',' << c;
    os_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) {
      throw ShapeError(path_ + ": row has " + std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(columns_.size()));
    }
    std::lock_guard lock(mutex_);
    os_ << hash_;
    for (const auto& c : cells) os_ << ',' << c;
    os_ << '\n';
    if (!os_) throw IoError(path_ + ": write failed");
  }

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::vector<std::string> columns_;
  std::string hash_;
  std::ofstream os_;
  std::mutex mutex_;
};

}  // namespace uscore::driver
