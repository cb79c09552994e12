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

#include "uscore/uscore.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace uscore::test {

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

/// Asymptotic p-value of the two-sample KS statistic (Kolmogorov series with
/// the Stephens small-sample correction).
inline double ks_pvalue(double d, std::size_t n, std::size_t m) {
  const double ne = static_cast<double>(n) * m / static_cast<double>(n + m);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

inline double ks_two_sample_p(const std::vector<double>& a, const std::vector<double>& b) {
  return ks_pvalue(ks_statistic(a, b), a.size(), b.size());
}

/// Pearson chi-square goodness-of-fit p-value with k - 1 degrees of freedom.
inline double chi_square_p(const std::vector<double>& counts, const std::vector<double>& probs) {
  double total = 0.0;
  for (double c : counts) total += c;
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = total * probs[i];
    stat += (counts[i] - e) * (counts[i] - e) / e;
  }
  const double dof = static_cast<double>(counts.size()) - 1.0;
  return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

/// Total variation between empirical frequencies and a probability table.
inline double total_variation(const std::vector<double>& counts, const std::vector<double>& probs) {
  double total = 0.0;
  for (double c : counts) total += c;
  double tv = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) tv += std::abs(counts[i] / total - probs[i]);
  return 0.5 * tv;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0) / static_cast<double>(xs.size()));
  return out;
}

/// OU data set at the desk scale used across the tests.
inline ObservationRecord ou_data(int l_star = 6, int horizon = 10, std::uint64_t seed = 42) {
  const OrnsteinUhlenbeck model;
  return simulate_data(model, model.theta_true, l_star, horizon, seed).observations;
}

/// Record whose observation path is constant (all increments zero).
inline ObservationRecord flat_record(int l_star, int horizon, int obs_dim, int state_dim = 1) {
  const LevelGrid g(l_star, horizon);
  return ObservationRecord(l_star, horizon, obs_dim, 0, std::vector<double>(state_dim, 0.0),
                           std::vector<double>((g.total_steps() + 1) * obs_dim, 0.0));
}

/// OU with theta1 = 0, so h is identically zero and every weight G is 1.
inline Vec<2> flat_theta() { return Vec<2>(0.0, 0.75); }

}  // namespace uscore::test
