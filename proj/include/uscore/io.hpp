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

// Data file layout (all little-endian):
//   char[8]  magic "USCDATA1"
//   u64      d_y, d_x, l_star, T, seed
//   f64      x_star[d_x]
//   f64      values[(T * 2^(l_star+3) + 1) * d_y], row-major by time

#include "uscore/common.hpp"
#include "uscore/lattice.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace uscore {

inline constexpr char kDataMagic[8] = {'U', 'S', 'C', 'D', 'A', 'T', 'A', '1'};

namespace detail {

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFFu) << (8 * (7 - i));
    return r;
  }
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), 8);
}

inline void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

inline std::uint64_t get_u64(std::istream& is, const std::string& path) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) throw IoError(path + ": truncated data file");
  return to_little(v);
}

inline double get_f64(std::istream& is, const std::string& path) {
  return std::bit_cast<double>(get_u64(is, path));
}

}  // namespace detail

inline void write_data(const std::string& path, const ObservationRecord& rec) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(path + ": cannot open for writing");
  os.write(kDataMagic, sizeof kDataMagic);
  detail::put_u64(os, static_cast<std::uint64_t>(rec.obs_dim()));
  detail::put_u64(os, rec.x_star().size());
  detail::put_u64(os, static_cast<std::uint64_t>(rec.l_star()));
  detail::put_u64(os, static_cast<std::uint64_t>(rec.horizon()));
  detail::put_u64(os, rec.seed());
  for (double v : rec.x_star()) detail::put_f64(os, v);
  for (double v : rec.values()) detail::put_f64(os, v);
  if (!os) throw IoError(path + ": write failed");
}

inline ObservationRecord read_data(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path + ": cannot open data file");
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kDataMagic, 8) != 0) {
    throw IoError(path + ": not a uscore data file");
  }
  const std::uint64_t dy = detail::get_u64(is, path);
  const std::uint64_t dx = detail::get_u64(is, path);
  const std::uint64_t l_star = detail::get_u64(is, path);
  const std::uint64_t horizon = detail::get_u64(is, path);
  const std::uint64_t seed = detail::get_u64(is, path);
  if (dy == 0 || dy > 64 || dx == 0 || dx > 64 || l_star > 30 || horizon == 0 ||
      horizon > 100000) {
    throw IoError(path + ": implausible header");
  }
  std::vector<double> x_star(dx);
  for (double& v : x_star) v = detail::get_f64(is, path);
  const std::uint64_t rows = horizon * (std::uint64_t{1} << (l_star + 3)) + 1;
  std::vector<double> values(rows * dy);
  for (double& v : values) v = detail::get_f64(is, path);
  if (is.peek() != std::char_traits<char>::eof()) throw IoError(path + ": trailing bytes");
  return ObservationRecord(static_cast<int>(l_star), static_cast<int>(horizon),
                           static_cast<int>(dy), seed, std::move(x_star), std::move(values));
}

/// Observation path as CSV: time, y0, y1, ...
inline void export_csv(const std::string& path, const ObservationRecord& rec,
                       const std::string& manifest_hash) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(path + ": cannot open for writing");
  os << "manifest_hash,time";
  for (int j = 0; j < rec.obs_dim(); ++j) os << ",y" << j;
  os << '\n';
  os << std::setprecision(17);
  for (std::size_t r = 0; r < rec.rows(); ++r) {
    os << manifest_hash << ',' << rec.grid().time(r);
    for (int j = 0; j < rec.obs_dim(); ++j) os << ',' << rec.value(r, j);
    os << '\n';
  }
  if (!os) throw IoError(path + ": write failed");
}

}  // namespace uscore
