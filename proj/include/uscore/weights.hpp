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
#include "uscore/lattice.hpp"
#include "uscore/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace uscore {

/// log G = h(x)^T dy - (delta / 2) |h(x)|^2.
template <DiffusionModel M>
double log_G(const M& model, const typename M::Params& theta, double delta,
             const typename M::State& x, const typename M::Obs& dy) {
  const typename M::Obs h = obs_drift(model, theta, x);
  return h.dot(dy) - 0.5 * delta * h.squaredNorm();
}

template <DiffusionModel M>
double log_G(const M& model, const typename M::Params& theta, int level,
             const typename M::State& x, const typename M::Obs& dy) {
  return log_G(model, theta, std::ldexp(1.0, -(level + 3)), x, dy);
}

/// Sum of log G over the steps of `segment` (steps + 1 states), each evaluated
/// at the left state with the matching increment in `increments`.
template <DiffusionModel M>
double unit_log_weight(const M& model, const typename M::Params& theta, double delta,
                       std::span<const double> segment, std::span<const double> increments) {
  constexpr int dx = M::state_dim;
  constexpr int dy = M::obs_dim;
  if (segment.size() % dx != 0 || increments.size() % dy != 0 ||
      segment.size() / dx != increments.size() / dy + 1) {
    throw ShapeError("unit_log_weight: segment must hold one more state than increments");
  }
  const std::size_t steps = increments.size() / dy;
  double total = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const Eigen::Map<const typename M::State> x(segment.data() + k * dx);
    const Eigen::Map<const typename M::Obs> d(increments.data() + k * dy);
    total += log_G(model, theta, delta, typename M::State(x), typename M::Obs(d));
  }
  return total;
}

template <DiffusionModel M>
double unit_log_weight(const M& model, const typename M::Params& theta, int level,
                       std::span<const double> segment, const LevelData& data, int unit) {
  if (data.grid().level() != level) throw LevelError("unit_log_weight: data level mismatch");
  return unit_log_weight(model, theta, data.grid().delta(), segment, data.unit(unit));
}

/// Normalized weights from log-weights via max-shifted exponentiation.
struct NormalizedWeights {
  std::vector<double> w;
  bool fallback = false;  // no finite log-weight; uniform substituted
};

inline NormalizedWeights normalize_log_weights(std::span<const double> log_w) {
  NormalizedWeights out;
  const std::size_t n = log_w.size();
  if (n == 0) throw ShapeError("normalize_log_weights: empty weight vector");
  out.w.assign(n, 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (double v : log_w) {
    if (!std::isnan(v)) top = std::max(top, v);
  }
  if (!std::isfinite(top)) {
    std::fill(out.w.begin(), out.w.end(), 1.0 / static_cast<double>(n));
    out.fallback = true;
    return out;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::isnan(log_w[i]) ? 0.0 : std::exp(log_w[i] - top);
    out.w[i] = v;
    sum += v;
  }
  for (double& v : out.w) v /= sum;
  return out;
}

/// 1 / sum w^2 for normalized weights.
inline double ess(std::span<const double> w) {
  double s = 0.0;
  for (double v : w) s += v * v;
  return s > 0.0 ? 1.0 / s : 0.0;
}

/// ESS of the normalized overlap min(p, q) / sum min(p, q); zero when the two
/// laws are disjoint.
inline double overlap_ess(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("overlap_ess: length mismatch");
  double mass = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = std::min(p[i], q[i]);
    mass += m;
    sq += m * m;
  }
  return sq > 0.0 ? mass * mass / sq : 0.0;
}

namespace detail {

// sigma(x)^{-1} (x' - x - b(x) delta)
template <DiffusionModel M>
typename M::State recover_increment(const M& model, const typename M::Params& theta,
                                    double delta, const typename M::State& x,
                                    const typename M::State& next, bool dense) {
  constexpr int dx = M::state_dim;
  const typename M::State r = next - x - drift(model, theta, x) * delta;
  if (!dense) {
    if constexpr (M::diagonal_diffusion) {
      const typename M::State s = model.diffusion_diag(x);
      if ((s.array() == 0.0).any() || !s.allFinite()) {
        throw NumericalError(std::string(M::name) + ": sigma(x) is singular at x = " +
                             detail::format_vector(x));
      }
      return r.cwiseQuotient(s);
    }
  }
  const Mat<dx, dx> sig = model.diffusion(x);
  Eigen::FullPivLU<Mat<dx, dx>> lu(sig);
  if (!lu.isInvertible()) {
    throw NumericalError(std::string(M::name) + ": sigma(x) is singular at x = " +
                         detail::format_vector(x));
  }
  return lu.solve(r);
}

}  // namespace detail

/// Recovered Brownian increment of one Euler step.
template <DiffusionModel M>
typename M::State recover_increment(const M& model, const typename M::Params& theta, int level,
                                    const typename M::State& x, const typename M::State& next) {
  return detail::recover_increment(model, theta, std::ldexp(1.0, -(level + 3)), x, next, false);
}

/// Contribution of one unit interval to the score functional
///   sum_k phi(x_k) dW_k + grad h(x_k)^T (dy_k - h(x_k) delta).
/// `dense` forces the general linear solves even for diagonal models.
template <DiffusionModel M>
Vec<M::param_dim> score_lambda_unit(const M& model, const typename M::Params& theta, double delta,
                                    std::span<const double> segment,
                                    std::span<const double> increments, bool dense = false) {
  constexpr int dx = M::state_dim;
  constexpr int dy = M::obs_dim;
  using State = typename M::State;
  using Obs = typename M::Obs;
  if (segment.size() % dx != 0 || increments.size() % dy != 0 ||
      segment.size() / dx != increments.size() / dy + 1) {
    throw ShapeError("score_lambda: segment must hold one more state than increments");
  }
  const std::size_t steps = increments.size() / dy;
  Vec<M::param_dim> total = Vec<M::param_dim>::Zero();
  for (std::size_t k = 0; k < steps; ++k) {
    const State x = Eigen::Map<const State>(segment.data() + k * dx);
    const State next = Eigen::Map<const State>(segment.data() + (k + 1) * dx);
    const Obs d = Eigen::Map<const Obs>(increments.data() + k * dy);
    const State w = detail::recover_increment(model, theta, delta, x, next, dense);
    const auto phi_x = dense ? phi_dense(model, theta, x) : phi(model, theta, x);
    const Obs h = obs_drift(model, theta, x);
    total += phi_x * w + grad_obs_drift(model, theta, x).transpose() * (d - h * delta);
  }
  return total;
}

/// lambda for a full level-l path against level-l data.
template <DiffusionModel M>
Vec<M::param_dim> score_lambda(const M& model, const typename M::Params& theta, int level,
                               const LatticePath& path, const LevelData& data,
                               bool dense = false) {
  if (path.grid().level() != level || data.grid().level() != level) {
    throw LevelError("score_lambda: path, data and level disagree");
  }
  if (path.grid().horizon() != data.grid().horizon()) {
    throw ShapeError("score_lambda: path and data horizons differ");
  }
  Vec<M::param_dim> total = Vec<M::param_dim>::Zero();
  for (int k = 0; k < path.grid().horizon(); ++k) {
    total += score_lambda_unit(model, theta, path.grid().delta(), path.unit(k), data.unit(k),
                               dense);
  }
  return total;
}

template <DiffusionModel M>
Vec<M::param_dim> score_lambda(const M& model, const typename M::Params& theta, int level,
                               const LatticePath& path, const ObservationRecord& data,
                               bool dense = false) {
  return score_lambda(model, theta, level, path, data.level_data(level), dense);
}

}  // namespace uscore
