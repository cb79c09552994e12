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
#include "uscore/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace uscore {

/// Brownian increments W_1..W_m ~ N(0, Delta_l I) covering one unit interval
/// at level l (m = Delta_l^{-1}).
class NoiseBlock {
 public:
  NoiseBlock(int level, int dim)
      : level_(level), dim_(dim), values_(static_cast<std::size_t>(count_for(level)) * dim) {}

  static NoiseBlock sample(int level, int dim, Stream stream) {
    NoiseBlock block(level, dim);
    block.draw(stream);
    return block;
  }

  void draw(Stream& stream) {
    const double scale = std::sqrt(std::ldexp(1.0, -(level_ + 3)));
    for (double& w : values_) w = scale * stream.normal();
  }

  int level() const noexcept { return level_; }
  int dim() const noexcept { return dim_; }
  int count() const noexcept { return count_for(level_); }

  template <int D>
  Eigen::Map<const Vec<D>> increment(int k) const {
    return Eigen::Map<const Vec<D>>(values_.data() + static_cast<std::size_t>(k) * dim_);
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  static int count_for(int level) {
    if (level < 0) throw LevelError("noise block level must be >= 0");
    return 1 << (level + 3);
  }

  int level_;
  int dim_;
  std::vector<double> values_;
};

/// x' = x + b(x) delta + sigma(x) W. Clamps back into the domain when the
/// model requires it (GBM), counting the event.
template <DiffusionModel M>
typename M::State euler_step(const M& model, const typename M::Params& theta, double delta,
                             const typename M::State& x, const typename M::State& w,
                             Diagnostics* diag = nullptr) {
  typename M::State next;
  if constexpr (M::diagonal_diffusion) {
    next = x + drift(model, theta, x) * delta + model.diffusion_diag(x).cwiseProduct(w);
  } else {
    next = x + drift(model, theta, x) * delta + model.diffusion(x) * w;
  }
  if (model.clamp_to_domain(next) && diag) ++diag->domain_clamps;
  return next;
}

template <DiffusionModel M>
typename M::State euler_step(const M& model, const typename M::Params& theta, int level,
                             const typename M::State& x, const typename M::State& w,
                             Diagnostics* diag = nullptr) {
  return euler_step(model, theta, std::ldexp(1.0, -(level + 3)), x, w, diag);
}

namespace detail {

template <int D>
void require_segment(std::span<const double> seg, int steps, const char* what) {
  if (seg.size() != static_cast<std::size_t>(steps + 1) * D) {
    throw ShapeError(std::string(what) + ": segment must hold steps + 1 states");
  }
}

template <int D>
bool same_state(std::span<const double> a, std::span<const double> b) {
  return std::equal(a.begin(), a.begin() + D, b.begin());
}

// Advances `out` (steps + 1 states, out[0] already set) with increments
// aggregated in groups of `group` fine increments.
template <DiffusionModel M>
void propagate(const M& model, const typename M::Params& theta, double delta, int group,
               const NoiseBlock& noise, std::span<double> out, Diagnostics* diag) {
  constexpr int dx = M::state_dim;
  using State = typename M::State;
  const int steps = noise.count() / group;
  State x = Eigen::Map<const State>(out.data());
  for (int k = 0; k < steps; ++k) {
    State w = noise.increment<dx>(k * group);
    for (int g = 1; g < group; ++g) w += noise.increment<dx>(k * group + g);
    x = euler_step(model, theta, delta, x, w, diag);
    Eigen::Map<State>(out.data() + static_cast<std::size_t>(k + 1) * dx) = x;
  }
}

}  // namespace detail

/// Single-chain Q^l over one unit interval. `out` holds Delta_l^{-1} + 1
/// states; the first is the start state.
template <DiffusionModel M>
void unit_step(const M& model, const typename M::Params& theta, const typename M::State& x,
               const NoiseBlock& noise, std::span<double> out, Diagnostics* diag = nullptr) {
  constexpr int dx = M::state_dim;
  detail::require_segment<dx>(out, noise.count(), "unit_step");
  Eigen::Map<typename M::State>(out.data()) = x;
  detail::propagate(model, theta, std::ldexp(1.0, -(noise.level() + 3)), 1, noise, out, diag);
}

/// Synchronous coupling of two chains at one level: both are driven by the
/// same increments, so equal inputs give bitwise-equal outputs.
template <DiffusionModel M>
void coupled_unit_step(const M& model, const typename M::Params& theta,
                       const typename M::State& x, const typename M::State& x_ring,
                       const NoiseBlock& noise, std::span<double> out,
                       std::span<double> out_ring, Diagnostics* diag = nullptr) {
  constexpr int dx = M::state_dim;
  detail::require_segment<dx>(out, noise.count(), "coupled_unit_step");
  detail::require_segment<dx>(out_ring, noise.count(), "coupled_unit_step");
  unit_step(model, theta, x, noise, out, diag);
  if (x == x_ring) {
    std::copy(out.begin(), out.end(), out_ring.begin());
  } else {
    unit_step(model, theta, x_ring, noise, out_ring, diag);
  }
}

/// Q^{l,l-1}: fine chain with W_k, coarse chain with W_{2k-1} + W_{2k}.
/// `noise` is a level-l block; `out_coarse` holds Delta_{l-1}^{-1} + 1 states.
template <DiffusionModel M>
void fine_coarse_unit_step(const M& model, const typename M::Params& theta,
                           const typename M::State& x_fine, const typename M::State& x_coarse,
                           const NoiseBlock& noise, std::span<double> out_fine,
                           std::span<double> out_coarse, Diagnostics* diag = nullptr) {
  constexpr int dx = M::state_dim;
  const int level = noise.level();
  if (level < 1) throw LevelError("fine/coarse coupling needs level >= 1");
  detail::require_segment<dx>(out_fine, noise.count(), "fine_coarse_unit_step");
  detail::require_segment<dx>(out_coarse, noise.count() / 2, "fine_coarse_unit_step");
  Eigen::Map<typename M::State>(out_fine.data()) = x_fine;
  Eigen::Map<typename M::State>(out_coarse.data()) = x_coarse;
  detail::propagate(model, theta, std::ldexp(1.0, -(level + 3)), 1, noise, out_fine, diag);
  detail::propagate(model, theta, std::ldexp(1.0, -(level + 2)), 2, noise, out_coarse, diag);
}

/// Four-chain kernel: synchronously coupled fine pair and coarse pair, all
/// driven by one level-l block (coarse pair with pairwise-summed increments).
template <DiffusionModel M>
void four_chain_unit_step(const M& model, const typename M::Params& theta,
                          const typename M::State& fine, const typename M::State& fine_ring,
                          const typename M::State& coarse, const typename M::State& coarse_ring,
                          const NoiseBlock& noise, std::span<double> out_fine,
                          std::span<double> out_fine_ring, std::span<double> out_coarse,
                          std::span<double> out_coarse_ring, Diagnostics* diag = nullptr) {
  constexpr int dx = M::state_dim;
  const int level = noise.level();
  if (level < 1) throw LevelError("four-chain coupling needs level >= 1");
  const int m = noise.count();
  detail::require_segment<dx>(out_fine, m, "four_chain_unit_step");
  detail::require_segment<dx>(out_fine_ring, m, "four_chain_unit_step");
  detail::require_segment<dx>(out_coarse, m / 2, "four_chain_unit_step");
  detail::require_segment<dx>(out_coarse_ring, m / 2, "four_chain_unit_step");
  const double fine_delta = std::ldexp(1.0, -(level + 3));
  const double coarse_delta = 2.0 * fine_delta;

  auto run = [&](const typename M::State& start, std::span<double> out, int group, double delta) {
    Eigen::Map<typename M::State>(out.data()) = start;
    detail::propagate(model, theta, delta, group, noise, out, diag);
  };
  run(fine, out_fine, 1, fine_delta);
  if (fine == fine_ring) {
    std::copy(out_fine.begin(), out_fine.end(), out_fine_ring.begin());
  } else {
    run(fine_ring, out_fine_ring, 1, fine_delta);
  }
  run(coarse, out_coarse, 2, coarse_delta);
  if (coarse == coarse_ring) {
    std::copy(out_coarse.begin(), out_coarse.end(), out_coarse_ring.begin());
  } else {
    run(coarse_ring, out_coarse_ring, 2, coarse_delta);
  }
}

/// Forward Euler draw of a whole path at level l from x_*, one stream child per unit.
template <DiffusionModel M>
LatticePath forward_path(const M& model, const typename M::Params& theta, const LevelGrid& grid,
                         Stream stream, Diagnostics* diag = nullptr) {
  constexpr int dx = M::state_dim;
  LatticePath path(grid, dx);
  NoiseBlock noise(grid.level(), dx);
  const std::size_t m = static_cast<std::size_t>(grid.steps_per_unit());
  typename M::State x = model.x_star();
  for (int k = 0; k < grid.horizon(); ++k) {
    Stream s = stream.child(static_cast<std::uint64_t>(k));
    noise.draw(s);
    std::span<double> out = path.values().subspan(k * m * dx, (m + 1) * dx);
    unit_step(model, theta, x, noise, out, diag);
    x = Eigen::Map<const typename M::State>(out.data() + m * dx);
  }
  return path;
}

/// Fine/coarse coupled forward draw (kernel Q^{l,l-1} iterated over [0, T]).
template <DiffusionModel M>
std::pair<LatticePath, LatticePath> forward_fine_coarse(const M& model,
                                                        const typename M::Params& theta,
                                                        const LevelGrid& fine_grid, Stream stream,
                                                        Diagnostics* diag = nullptr) {
  constexpr int dx = M::state_dim;
  const LevelGrid coarse_grid = fine_grid.coarser();
  LatticePath fine(fine_grid, dx);
  LatticePath coarse(coarse_grid, dx);
  NoiseBlock noise(fine_grid.level(), dx);
  const std::size_t mf = static_cast<std::size_t>(fine_grid.steps_per_unit());
  const std::size_t mc = mf / 2;
  typename M::State xf = model.x_star();
  typename M::State xc = model.x_star();
  for (int k = 0; k < fine_grid.horizon(); ++k) {
    Stream s = stream.child(static_cast<std::uint64_t>(k));
    noise.draw(s);
    std::span<double> of = fine.values().subspan(k * mf * dx, (mf + 1) * dx);
    std::span<double> oc = coarse.values().subspan(k * mc * dx, (mc + 1) * dx);
    fine_coarse_unit_step(model, theta, xf, xc, noise, of, oc, diag);
    xf = Eigen::Map<const typename M::State>(of.data() + mf * dx);
    xc = Eigen::Map<const typename M::State>(oc.data() + mc * dx);
  }
  return {std::move(fine), std::move(coarse)};
}

}  // namespace uscore
