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
#include "uscore/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uscore {

// Indices are 0-based throughout.
struct IndexPair {
  int r = 0;
  int s = 0;
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

// (r^l, s^l, r^{l-1}, s^{l-1})
struct IndexQuad {
  int r_fine = 0;
  int s_fine = 0;
  int r_coarse = 0;
  int s_coarse = 0;
  friend bool operator==(const IndexQuad&, const IndexQuad&) = default;
};

inline constexpr std::uint64_t kQuadCouplingCap = 1'000'000;

inline void validate_probabilities(std::span<const double> p, const char* what) {
  if (p.empty()) throw ValidationError(std::string(what) + ": empty probability vector");
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError(std::string(what) + ": probabilities must be finite and >= 0");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError(std::string(what) + ": probabilities sum to " + std::to_string(sum));
  }
}

/// Inverse-CDF table over unnormalized non-negative masses.
class CategoricalTable {
 public:
  CategoricalTable() = default;
  explicit CategoricalTable(std::span<const double> mass) : cum_(mass.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) {
      acc += mass[i];
      cum_[i] = acc;
      if (mass[i] > 0.0) last_positive_ = static_cast<int>(i);
    }
  }

  double total() const noexcept { return cum_.empty() ? 0.0 : cum_.back(); }

  int draw(double u) const {
    const double target = u * total();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    const int idx = static_cast<int>(it - cum_.begin());
    return std::min(idx, last_positive_);
  }

  int draw(Stream& stream) const { return draw(stream.uniform()); }

 private:
  std::vector<double> cum_;
  int last_positive_ = 0;
};

/// Index i with probability p_i, from a single uniform.
inline int sample_categorical(std::span<const double> p, Stream& stream) {
  validate_probabilities(p, "sample_categorical");
  return CategoricalTable(p).draw(stream);
}

/// The maximal coupling omega(p, q): overlap min(p, q) on the diagonal plus an
/// independent product of the normalized residuals.
class MaximalCouplingPlan {
 public:
  MaximalCouplingPlan(std::span<const double> p, std::span<const double> q) {
    validate_probabilities(p, "maximal_coupling");
    validate_probabilities(q, "maximal_coupling");
    if (p.size() != q.size()) throw ValidationError("maximal_coupling: length mismatch");
    const std::size_t n = p.size();
    overlap_.resize(n);
    res_p_.resize(n);
    res_q_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      overlap_[i] = std::min(p[i], q[i]);
      res_p_[i] = p[i] - overlap_[i];
      res_q_[i] = q[i] - overlap_[i];
      alpha_ += overlap_[i];
      mass_p_ += res_p_[i];
      mass_q_ += res_q_[i];
    }
    overlap_table_ = CategoricalTable(overlap_);
    res_p_table_ = CategoricalTable(res_p_);
    res_q_table_ = CategoricalTable(res_q_);
  }

  std::size_t size() const noexcept { return overlap_.size(); }

  /// Sum_i min(p_i, q_i) = P(r = s).
  double overlap_mass() const noexcept { return alpha_; }

  double density(int r, int s) const {
    double v = (r == s) ? overlap_[r] : 0.0;
    if (has_residual()) {
      v += (1.0 - alpha_) * (res_p_[r] / mass_p_) * (res_q_[s] / mass_q_);
    }
    return v;
  }

  IndexPair sample(Stream& stream) const {
    const double kappa = stream.uniform();
    if (kappa < alpha_ || !has_residual()) {
      const int j = overlap_table_.draw(stream);
      return {j, j};
    }
    const int r = res_p_table_.draw(stream);
    const int s = res_q_table_.draw(stream);
    return {r, s};
  }

 private:
  bool has_residual() const noexcept { return mass_p_ > 0.0 && mass_q_ > 0.0; }

  std::vector<double> overlap_;
  std::vector<double> res_p_;
  std::vector<double> res_q_;
  double alpha_ = 0.0;
  double mass_p_ = 0.0;
  double mass_q_ = 0.0;
  CategoricalTable overlap_table_;
  CategoricalTable res_p_table_;
  CategoricalTable res_q_table_;
};

inline IndexPair maximal_coupling(std::span<const double> p, std::span<const double> q,
                                  Stream& stream) {
  return MaximalCouplingPlan(p, q).sample(stream);
}

/// Couples a draw of omega^l with a draw of omega^{l-1} so that both pairs
/// coincide with maximal probability; each pair keeps its own omega law.
inline IndexQuad maximal_coupling_of_maximal_couplings(const MaximalCouplingPlan& fine,
                                                       const MaximalCouplingPlan& coarse,
                                                       Stream& stream,
                                                       Diagnostics* diag = nullptr) {
  if (fine.size() != coarse.size()) {
    throw ValidationError("maximal_coupling_of_maximal_couplings: fine and coarse sizes differ");
  }
  const IndexPair a = fine.sample(stream);
  const double u = stream.uniform() * fine.density(a.r, a.s);
  if (u < coarse.density(a.r, a.s)) return {a.r, a.s, a.r, a.s};
  for (std::uint64_t it = 0; it < kQuadCouplingCap; ++it) {
    const IndexPair b = coarse.sample(stream);
    const double v = stream.uniform() * coarse.density(b.r, b.s);
    if (v > fine.density(b.r, b.s)) return {a.r, a.s, b.r, b.s};
  }
  if (diag) ++diag->coupling_cap_hits;
  throw CouplingFailure("maximal_coupling_of_maximal_couplings: rejection loop hit the cap of " +
                        std::to_string(kQuadCouplingCap) + " iterations");
}

inline IndexQuad maximal_coupling_of_maximal_couplings(std::span<const double> f_fine,
                                                       std::span<const double> f_fine_ring,
                                                       std::span<const double> f_coarse,
                                                       std::span<const double> f_coarse_ring,
                                                       Stream& stream,
                                                       Diagnostics* diag = nullptr) {
  return maximal_coupling_of_maximal_couplings(MaximalCouplingPlan(f_fine, f_fine_ring),
                                               MaximalCouplingPlan(f_coarse, f_coarse_ring),
                                               stream, diag);
}

}  // namespace uscore
