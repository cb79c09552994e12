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
#include "uscore/weights.hpp"

#include <concepts>
#include <span>

namespace uscore {

/// A path functional that is additive over unit intervals. The particle
/// filters accumulate it along each genealogy, so the value of every terminal
/// trajectory is available without re-walking the paths.
template <class F>
concept PathFunctional = requires(const F& f, const LevelData& data, int unit,
                                  std::span<const double> segment) {
  requires F::dim >= 1;
  { f.unit_value(data, unit, segment) } -> std::convertible_to<Vec<F::dim>>;
};

/// The score functional lambda of the level-l discretized model.
template <DiffusionModel M>
struct ScoreFunctional {
  static constexpr int dim = M::param_dim;

  const M* model;
  typename M::Params theta;

  ScoreFunctional(const M& m, const typename M::Params& t) : model(&m), theta(t) {}

  Vec<dim> unit_value(const LevelData& data, int unit, std::span<const double> segment) const {
    return score_lambda_unit(*model, theta, data.grid().delta(), segment, data.unit(unit));
  }
};

/// X_T - X_0 of the path, as a sum of per-unit displacements.
template <int Dx>
struct DisplacementFunctional {
  static constexpr int dim = Dx;

  Vec<dim> unit_value(const LevelData&, int, std::span<const double> segment) const {
    const std::size_t last = segment.size() - Dx;
    return Eigen::Map<const Vec<Dx>>(segment.data() + last) -
           Eigen::Map<const Vec<Dx>>(segment.data());
  }
};

/// Returns `value` for every path (all of it booked on the first unit).
template <int D>
struct ConstantFunctional {
  static constexpr int dim = D;
  Vec<D> value = Vec<D>::Zero();

  Vec<dim> unit_value(const LevelData&, int unit, std::span<const double>) const {
    return unit == 0 ? value : Vec<D>::Zero();
  }
};

static_assert(PathFunctional<ScoreFunctional<OrnsteinUhlenbeck>>);
static_assert(PathFunctional<DisplacementFunctional<1>>);
static_assert(PathFunctional<ConstantFunctional<2>>);

}  // namespace uscore
