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

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace uscore {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: maps a
/// 128-bit counter and a 64-bit key to 128 pseudo-random bits.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// A counter-based random stream. A stream is identified by (key, id); draws
/// walk a 64-bit position counter. `child(tag)` derives an independent stream
/// deterministically, so any draw can be addressed by a path of tags such as
/// (replicate, sweep, unit time, particle) without shared mutable state.
///
/// Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(std::uint64_t seed = 0) noexcept
      : key_(detail::mix64(seed)), id_(0) {}

  constexpr Stream child(std::uint64_t tag) const noexcept {
    Stream s(*this);
    s.id_ = detail::mix64(id_ ^ detail::mix64(tag + 0x632BE59BD9B4E019ull));
    s.position_ = 0;
    s.buffered_ = 0;
    s.has_spare_normal_ = false;
    return s;
  }

  template <class... Tags>
  constexpr Stream child(std::uint64_t first, std::uint64_t second, Tags... rest) const noexcept {
    return child(first).child(second, static_cast<std::uint64_t>(rest)...);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    if (buffered_ == 0) refill();
    return buffer_[--buffered_];
  }

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  constexpr double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second variate of each pair is kept.
  double normal() noexcept {
    if (has_spare_normal_) {
      has_spare_normal_ = false;
      return spare_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_normal_ = true;
    return radius * std::cos(angle);
  }

  constexpr std::uint64_t id() const noexcept { return id_; }
  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  constexpr void refill() noexcept {
    const Philox4x32::Counter ctr = {
        static_cast<std::uint32_t>(position_), static_cast<std::uint32_t>(position_ >> 32),
        static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(id_ >> 32)};
    const Philox4x32::Key key = {static_cast<std::uint32_t>(key_),
                                 static_cast<std::uint32_t>(key_ >> 32)};
    const auto out = Philox4x32::block(ctr, key);
    ++position_;
    // Served back to front by operator().
    buffer_[1] = (std::uint64_t{out[1]} << 32) | out[0];
    buffer_[0] = (std::uint64_t{out[3]} << 32) | out[2];
    buffered_ = 2;
  }

  std::uint64_t key_;
  std::uint64_t id_;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// Tags used to carve a replicate's stream into purpose-specific children.
namespace stream_tag {
inline constexpr std::uint64_t kNoise = 1;
inline constexpr std::uint64_t kResample = 2;
inline constexpr std::uint64_t kSelect = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kSweep = 5;
inline constexpr std::uint64_t kLevel = 6;
inline constexpr std::uint64_t kReplicate = 7;
inline constexpr std::uint64_t kData = 8;
inline constexpr std::uint64_t kSgd = 9;
}  // namespace stream_tag

}  // namespace uscore
