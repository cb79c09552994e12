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

#include <Eigen/Dense>

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace uscore {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;

template <int R, int C>
using Mat = Eigen::Matrix<double, R, C>;

// Error hierarchy. Every failure raised by the library derives from Error so
// that drivers can catch one type and still report the specific cause.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class LevelError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class CouplingFailure : public Error {
 public:
  using Error::Error;
};

class NonMeetingError : public Error {
 public:
  NonMeetingError(const std::string& what, int sweeps) : Error(what), sweeps_(sweeps) {}
  int sweeps() const noexcept { return sweeps_; }

 private:
  int sweeps_;
};

class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Event counters carried alongside estimates. Owned by one chain at a time and
// merged when replicates are aggregated.
struct Diagnostics {
  std::uint64_t weight_fallbacks = 0;   // all log-weights were -inf or NaN
  std::uint64_t coupling_cap_hits = 0;  // rejection loop in the quad coupling gave up
  std::uint64_t domain_clamps = 0;      // Euler step left the state domain
  std::uint64_t resample_events = 0;

  Diagnostics& operator+=(const Diagnostics& o) {
    weight_fallbacks += o.weight_fallbacks;
    coupling_cap_hits += o.coupling_cap_hits;
    domain_clamps += o.domain_clamps;
    resample_events += o.resample_events;
    return *this;
  }
};

namespace detail {

template <class Derived>
std::string format_vector(const Eigen::MatrixBase<Derived>& v) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v(i);
  }
  os << ')';
  return os.str();
}

}  // namespace detail
}  // namespace uscore
