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
#include "uscore/models.hpp"
#include "uscore/rng.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace uscore {

/// Dyadic grid of level l over [0, T]: step 2^-(l+3), T integer.
class LevelGrid {
 public:
  LevelGrid(int level, int horizon) : level_(level), horizon_(horizon) {
    if (level < 0 || level > 40) throw LevelError("level must lie in [0, 40]");
    if (horizon < 1) throw ConfigError("horizon T must be >= 1");
  }

  int level() const noexcept { return level_; }
  int horizon() const noexcept { return horizon_; }
  double delta() const noexcept { return std::ldexp(1.0, -(level_ + 3)); }
  int steps_per_unit() const noexcept { return 1 << (level_ + 3); }
  std::size_t total_steps() const noexcept {
    return static_cast<std::size_t>(horizon_) * static_cast<std::size_t>(steps_per_unit());
  }
  double time(std::size_t k) const noexcept { return static_cast<double>(k) * delta(); }

  LevelGrid coarser() const {
    if (level_ == 0) throw LevelError("level 0 has no coarser grid");
    return LevelGrid(level_ - 1, horizon_);
  }

  friend bool operator==(const LevelGrid&, const LevelGrid&) = default;

 private:
  int level_;
  int horizon_;
};

/// A hidden-state trajectory on a level grid; index 0 holds x_*.
class LatticePath {
 public:
  LatticePath(LevelGrid grid, int dim)
      : grid_(grid), dim_(dim), values_((grid.total_steps() + 1) * static_cast<std::size_t>(dim)) {}

  const LevelGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return grid_.total_steps() + 1; }

  template <int D>
  Eigen::Map<const Vec<D>> state(std::size_t k) const {
    return Eigen::Map<const Vec<D>>(values_.data() + k * static_cast<std::size_t>(dim_));
  }
  template <int D>
  Eigen::Map<Vec<D>> state(std::size_t k) {
    return Eigen::Map<Vec<D>>(values_.data() + k * static_cast<std::size_t>(dim_));
  }
  double at(std::size_t k, int component = 0) const {
    return values_[k * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(component)];
  }

  /// States of unit interval [k, k+1], both endpoints included.
  std::span<const double> unit(int k) const {
    const std::size_t m = static_cast<std::size_t>(grid_.steps_per_unit());
    return {values_.data() + static_cast<std::size_t>(k) * m * dim_, (m + 1) * dim_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const LatticePath& a, const LatticePath& b) {
    return a.grid_ == b.grid_ && a.dim_ == b.dim_ && a.values_ == b.values_;
  }

 private:
  LevelGrid grid_;
  int dim_;
  std::vector<double> values_;
};

/// Observation increments of one level, flattened step-major.
class LevelData {
 public:
  LevelData(LevelGrid grid, int obs_dim, std::vector<double> increments)
      : grid_(grid), obs_dim_(obs_dim), increments_(std::move(increments)) {
    if (increments_.size() != grid_.total_steps() * static_cast<std::size_t>(obs_dim_)) {
      throw ShapeError("level data: increment count does not match the grid");
    }
  }

  const LevelGrid& grid() const noexcept { return grid_; }
  int obs_dim() const noexcept { return obs_dim_; }

  template <int D>
  Eigen::Map<const Vec<D>> increment(std::size_t k) const {
    return Eigen::Map<const Vec<D>>(increments_.data() + k * static_cast<std::size_t>(obs_dim_));
  }

  /// Increments of unit interval k (steps_per_unit of them).
  std::span<const double> unit(int k) const {
    const std::size_t m = static_cast<std::size_t>(grid_.steps_per_unit());
    return {increments_.data() + static_cast<std::size_t>(k) * m * obs_dim_, m * obs_dim_};
  }

  std::span<const double> increments() const noexcept { return increments_; }

 private:
  LevelGrid grid_;
  int obs_dim_;
  std::vector<double> increments_;
};

/// Observation path Y on the data level l_star, plus the initial hidden state
/// drawn with it. Estimation at level l <= l_star only consumes increments.
class ObservationRecord {
 public:
  ObservationRecord(int l_star, int horizon, int obs_dim, std::uint64_t seed,
                    std::vector<double> x_star, std::vector<double> values)
      : grid_(l_star, horizon),
        obs_dim_(obs_dim),
        seed_(seed),
        x_star_(std::move(x_star)),
        values_(std::move(values)) {
    if (obs_dim < 1) throw ShapeError("observation dimension must be >= 1");
    if (values_.size() != (grid_.total_steps() + 1) * static_cast<std::size_t>(obs_dim_)) {
      throw ShapeError("observation record: value count does not match T * 2^(l*+3) + 1 rows");
    }
  }

  int l_star() const noexcept { return grid_.level(); }
  int horizon() const noexcept { return grid_.horizon(); }
  int obs_dim() const noexcept { return obs_dim_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const LevelGrid& grid() const noexcept { return grid_; }
  std::span<const double> x_star() const noexcept { return x_star_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t rows() const noexcept { return grid_.total_steps() + 1; }
  double value(std::size_t row, int component = 0) const {
    return values_[row * static_cast<std::size_t>(obs_dim_) + static_cast<std::size_t>(component)];
  }

  /// Y_{(k+1) Delta_l} - Y_{k Delta_l}, read off the fine grid.
  Eigen::VectorXd increment(int level, std::size_t k) const {
    const std::size_t stride = stride_for(level);
    if (k >= LevelGrid(level, horizon()).total_steps()) {
      throw ShapeError("observation increment index out of range");
    }
    Eigen::VectorXd dy(obs_dim_);
    for (int j = 0; j < obs_dim_; ++j) dy(j) = value((k + 1) * stride, j) - value(k * stride, j);
    return dy;
  }

  LevelData level_data(int level) const {
    const std::size_t stride = stride_for(level);
    const LevelGrid g(level, horizon());
    std::vector<double> inc(g.total_steps() * static_cast<std::size_t>(obs_dim_));
    for (std::size_t k = 0; k < g.total_steps(); ++k) {
      for (int j = 0; j < obs_dim_; ++j) {
        inc[k * obs_dim_ + j] = value((k + 1) * stride, j) - value(k * stride, j);
      }
    }
    return LevelData(g, obs_dim_, std::move(inc));
  }

 private:
  std::size_t stride_for(int level) const {
    if (level < 0) throw LevelError("level must be >= 0");
    if (level > l_star()) {
      throw LevelError("level " + std::to_string(level) + " is finer than the data level l* = " +
                       std::to_string(l_star()));
    }
    return std::size_t{1} << (l_star() - level);
  }

  LevelGrid grid_;
  int obs_dim_;
  std::uint64_t seed_;
  std::vector<double> x_star_;
  std::vector<double> values_;
};

inline Eigen::VectorXd obs_increment(const ObservationRecord& rec, int level, std::size_t k) {
  return rec.increment(level, k);
}

/// Copy of `model` conditioned on the initial state stored with the data.
template <DiffusionModel M>
M with_start(M model, const ObservationRecord& rec) {
  if (rec.x_star().size() != static_cast<std::size_t>(M::state_dim)) {
    throw ShapeError("data file state dimension does not match the model");
  }
  if (rec.obs_dim() != M::obs_dim) {
    throw ShapeError("data file observation dimension does not match the model");
  }
  for (int i = 0; i < M::state_dim; ++i) model.start(i) = rec.x_star()[i];
  return model;
}

template <DiffusionModel M>
struct SimulatedData {
  LatticePath hidden;
  ObservationRecord observations;
};

/// Joint Euler simulation of (X, Y) on level l_star. X_0 and Y_0 are drawn from
/// the model's initial Gaussian; the drawn X_0 is stored as x_*.
template <DiffusionModel M>
SimulatedData<M> simulate_data(const M& model, const typename M::Params& theta, int l_star,
                               int horizon, std::uint64_t seed, Diagnostics* diag = nullptr) {
  constexpr int dx = M::state_dim;
  constexpr int dy = M::obs_dim;
  using State = typename M::State;
  using Obs = typename M::Obs;

  const LevelGrid grid(l_star, horizon);
  const double delta = grid.delta();
  const double sqrt_delta = std::sqrt(delta);
  Stream root = Stream(seed).child(stream_tag::kData);
  Stream init = root.child(0);
  Stream x_noise = root.child(1);
  Stream y_noise = root.child(2);

  const State mean0 = State(model.initial_mean);
  const double sd0 = std::sqrt(model.initial_variance);
  State x;
  for (int i = 0; i < dx; ++i) x(i) = mean0(i) + sd0 * init.normal();
  if (model.clamp_to_domain(x) && diag) ++diag->domain_clamps;
  Obs y;
  for (int j = 0; j < dy; ++j) y(j) = sd0 * init.normal();

  LatticePath hidden(grid, dx);
  std::vector<double> values((grid.total_steps() + 1) * dy);
  hidden.template state<dx>(0) = x;
  Eigen::Map<Obs>(values.data()) = y;

  for (std::size_t k = 0; k < grid.total_steps(); ++k) {
    const Obs h = obs_drift(model, theta, x);
    State w;
    for (int i = 0; i < dx; ++i) w(i) = sqrt_delta * x_noise.normal();
    State next = x + drift(model, theta, x) * delta + model.diffusion(x) * w;
    if (model.clamp_to_domain(next) && diag) ++diag->domain_clamps;
    for (int j = 0; j < dy; ++j) y(j) += h(j) * delta + sqrt_delta * y_noise.normal();
    x = next;
    hidden.template state<dx>(k + 1) = x;
    Eigen::Map<Obs>(values.data() + (k + 1) * dy) = y;
  }

  std::vector<double> x_star(dx);
  for (int i = 0; i < dx; ++i) x_star[i] = hidden.at(0, i);
  return {std::move(hidden),
          ObservationRecord(l_star, horizon, dy, seed, std::move(x_star), std::move(values))};
}

}  // namespace uscore
