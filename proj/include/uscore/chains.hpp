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
#include "uscore/couplings.hpp"
#include "uscore/dynamics.hpp"
#include "uscore/functionals.hpp"
#include "uscore/lattice.hpp"
#include "uscore/models.hpp"
#include "uscore/rng.hpp"
#include "uscore/weights.hpp"

#include <array>
#include <span>
#include <utility>
#include <vector>

namespace uscore {

struct ChainOptions {
  int n_particles = 64;
  bool always_resample = false;  // false: resample only when ESS < ess_fraction * N
  double ess_fraction = 0.25;
};

/// Particle system of one conditional filter: per unit interval k, the N
/// segments u_k^{1:N} (each Delta^{-1} + 1 states), their ancestor indices,
/// the log-weights accumulated since the last resampling, and the path
/// functional accumulated along each genealogy. Slot N-1 is the reference.
template <int Dx, int Df>
class ParticleCloud {
 public:
  ParticleCloud(LevelGrid grid, int n)
      : grid_(grid),
        n_(n),
        stride_(static_cast<std::size_t>(grid.steps_per_unit() + 1) * Dx),
        segments_(static_cast<std::size_t>(grid.horizon()),
                  std::vector<double>(static_cast<std::size_t>(n) * stride_)),
        ancestors_(static_cast<std::size_t>(grid.horizon()), std::vector<int>(n)),
        log_w_(n, 0.0),
        weights_(n, 1.0 / n),
        acc_(n, Vec<Df>::Zero()),
        acc_next_(n, Vec<Df>::Zero()) {}

  const LevelGrid& grid() const noexcept { return grid_; }
  int size() const noexcept { return n_; }

  std::span<double> segment(int k, int i) {
    return {segments_[k].data() + static_cast<std::size_t>(i) * stride_, stride_};
  }
  std::span<const double> segment(int k, int i) const {
    return {segments_[k].data() + static_cast<std::size_t>(i) * stride_, stride_};
  }
  Vec<Dx> endpoint(int k, int i) const {
    return Eigen::Map<const Vec<Dx>>(segments_[k].data() + static_cast<std::size_t>(i) * stride_ +
                                     stride_ - Dx);
  }

  /// ancestors(k)[i]: index at unit k-1 of the parent of particle i (k >= 1).
  std::vector<int>& ancestors(int k) { return ancestors_[k]; }
  const std::vector<int>& ancestors(int k) const { return ancestors_[k]; }

  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> log_weights() const noexcept { return log_w_; }
  const std::vector<Vec<Df>>& functional_values() const noexcept { return acc_; }

  /// Full trajectory of terminal particle j, traced back through the ancestors.
  LatticePath trajectory(int j) const {
    LatticePath path(grid_, Dx);
    const std::size_t m = static_cast<std::size_t>(grid_.steps_per_unit());
    for (int k = grid_.horizon() - 1; k >= 0; --k) {
      const auto seg = segment(k, j);
      std::copy(seg.begin(), seg.end(), path.values().begin() + k * m * Dx);
      if (k > 0) j = ancestors_[k][j];
    }
    return path;
  }

  /// sum_i F(i) phi(u_i) over the terminal trajectories.
  Vec<Df> rao_blackwell() const {
    Vec<Df> total = Vec<Df>::Zero();
    for (int i = 0; i < n_; ++i) total += weights_[i] * acc_[i];
    return total;
  }

  template <DiffusionModel M, PathFunctional F>
  void reweight(const M& model, const typename M::Params& theta, const F& f,
                const LevelData& data, int k, bool fresh, Diagnostics* diag) {
    for (int i = 0; i < n_; ++i) {
      const auto seg = segment(k, i);
      const double lw = unit_log_weight(model, theta, grid_.delta(), seg, data.unit(k));
      log_w_[i] = fresh ? lw : log_w_[i] + lw;
      const Vec<Df> parent = k == 0 ? Vec<Df>::Zero() : acc_[ancestors_[k][i]];
      acc_next_[i] = parent + f.unit_value(data, k, seg);
    }
    std::swap(acc_, acc_next_);
    NormalizedWeights nw = normalize_log_weights(log_w_);
    if (nw.fallback && diag) ++diag->weight_fallbacks;
    weights_ = std::move(nw.w);
  }

 private:
  LevelGrid grid_;
  int n_;
  std::size_t stride_;
  std::vector<std::vector<double>> segments_;
  std::vector<std::vector<int>> ancestors_;
  std::vector<double> log_w_;
  std::vector<double> weights_;
  std::vector<Vec<Df>> acc_;
  std::vector<Vec<Df>> acc_next_;
};

/// Weighted average of the path functional over the terminal trajectories.
template <int Dx, int Df>
Vec<Df> rao_blackwell_terminal(const ParticleCloud<Dx, Df>& cloud) {
  return cloud.rao_blackwell();
}

/// Value of an additive functional on a whole path.
template <PathFunctional F>
Vec<F::dim> evaluate_functional(const F& f, const LevelData& data, const LatticePath& path) {
  Vec<F::dim> total = Vec<F::dim>::Zero();
  for (int k = 0; k < path.grid().horizon(); ++k) total += f.unit_value(data, k, path.unit(k));
  return total;
}

// Chain states. Each path carries the functional value reported by the sweep
// that produced it (Rao-Blackwellized over the terminal cloud), so estimators
// never need to re-evaluate paths.

template <int Df>
struct SingleChain {
  LatticePath path;
  Vec<Df> value;
};

template <int Df>
struct ChainPair {
  LatticePath x;
  LatticePath x_ring;
  bool met = false;
  Vec<Df> value;
  Vec<Df> value_ring;
};

template <int Df>
struct LevelPair {
  LatticePath fine;
  LatticePath coarse;
  Vec<Df> value_fine;
  Vec<Df> value_coarse;
};

template <int Df>
struct ChainQuad {
  LatticePath fine;
  LatticePath fine_ring;
  LatticePath coarse;
  LatticePath coarse_ring;
  bool met_fine = false;
  bool met_coarse = false;
  Vec<Df> value_fine;
  Vec<Df> value_fine_ring;
  Vec<Df> value_coarse;
  Vec<Df> value_coarse_ring;
};

namespace detail {

inline void require_particles(const ChainOptions& opt) {
  if (opt.n_particles < 2) throw ConfigError("conditional particle filters need N >= 2");
  if (!(opt.ess_fraction >= 0.0 && opt.ess_fraction <= 1.0)) {
    throw ConfigError("ess_fraction must lie in [0, 1]");
  }
}

inline void require_path(const LatticePath& path, int level, int horizon, int dim,
                         const char* what) {
  if (path.grid().level() != level || path.grid().horizon() != horizon || path.dim() != dim) {
    throw ShapeError(std::string(what) + ": reference path does not match level/horizon/dim");
  }
}

// One conditional sweep over K coupled clouds. `propagate(k, i, stream)`
// fills segment (k, i) of every cloud for a free particle; `make_sampler`
// turns the current weight vectors into a callable drawing one index per
// cloud; `ess_of` returns the ESS that drives the resampling decision.
// Returns the terminal selection.
template <DiffusionModel M, PathFunctional F, std::size_t K, class Propagate, class MakeSampler,
          class EssOf>
std::array<int, K> conditional_sweep(const M& model, const typename M::Params& theta, const F& f,
                                     std::array<ParticleCloud<M::state_dim, F::dim>*, K> clouds,
                                     std::array<const LevelData*, K> data,
                                     std::array<const LatticePath*, K> refs,
                                     const ChainOptions& opt, const Stream& stream,
                                     Propagate&& propagate, MakeSampler&& make_sampler,
                                     EssOf&& ess_of, Diagnostics* diag) {
  const int n = opt.n_particles;
  const int horizon = clouds[0]->grid().horizon();
  bool resample = false;
  for (int k = 0; k < horizon; ++k) {
    if (k > 0) {
      if (resample) {
        auto sampler = make_sampler(clouds);
        Stream rs = stream.child(stream_tag::kResample, static_cast<std::uint64_t>(k));
        for (int i = 0; i < n - 1; ++i) {
          const std::array<int, K> idx = sampler(rs);
          for (std::size_t c = 0; c < K; ++c) clouds[c]->ancestors(k)[i] = idx[c];
        }
        for (std::size_t c = 0; c < K; ++c) clouds[c]->ancestors(k)[n - 1] = n - 1;
        if (diag) ++diag->resample_events;
      } else {
        for (std::size_t c = 0; c < K; ++c) {
          auto& anc = clouds[c]->ancestors(k);
          for (int i = 0; i < n; ++i) anc[i] = i;
        }
      }
    }
    for (int i = 0; i < n - 1; ++i) {
      propagate(k, i,
                stream.child(stream_tag::kNoise, static_cast<std::uint64_t>(k),
                             static_cast<std::uint64_t>(i)));
    }
    for (std::size_t c = 0; c < K; ++c) {
      const auto ref = refs[c]->unit(k);
      auto slot = clouds[c]->segment(k, n - 1);
      std::copy(ref.begin(), ref.end(), slot.begin());
      clouds[c]->reweight(model, theta, f, *data[c], k, k == 0 || resample, diag);
    }
    if (k + 1 < horizon) {
      resample = opt.always_resample ||
                 ess_of(clouds) < opt.ess_fraction * static_cast<double>(n);
    }
  }
  auto sampler = make_sampler(clouds);
  Stream ss = stream.child(stream_tag::kSelect);
  return sampler(ss);
}

template <int Dx, int Df>
Vec<Dx> start_of(const ParticleCloud<Dx, Df>& cloud, int k, int i,
                                       const Vec<Dx>& x_star) {
  return k == 0 ? x_star : cloud.endpoint(k - 1, cloud.ancestors(k)[i]);
}

}  // namespace detail

/// One sweep of the conditional particle filter at level l, conditioned on `ref`.
template <DiffusionModel M, PathFunctional F>
SingleChain<F::dim> cpf_kernel(const M& model, const typename M::Params& theta, int level,
                               const ObservationRecord& data, const LatticePath& ref,
                               const ChainOptions& opt, const Stream& stream, const F& f,
                               Diagnostics* diag = nullptr) {
  constexpr int dx = M::state_dim;
  constexpr int df = F::dim;
  detail::require_particles(opt);
  detail::require_path(ref, level, data.horizon(), dx, "cpf_kernel");
  const LevelData ld = data.level_data(level);
  ParticleCloud<dx, df> cloud(ld.grid(), opt.n_particles);
  NoiseBlock noise(level, dx);
  const typename M::State x_star = model.x_star();

  auto propagate = [&](int k, int i, Stream s) {
    noise.draw(s);
    unit_step(model, theta, detail::start_of(cloud, k, i, x_star), noise, cloud.segment(k, i),
              diag);
  };
  auto make_sampler = [](std::array<ParticleCloud<dx, df>*, 1> c) {
    return [table = CategoricalTable(c[0]->weights())](Stream& s) {
      return std::array<int, 1>{table.draw(s)};
    };
  };
  auto ess_of = [](std::array<ParticleCloud<dx, df>*, 1> c) { return ess(c[0]->weights()); };

  const auto sel = detail::conditional_sweep<M, F, 1>(model, theta, f, {&cloud}, {&ld}, {&ref},
                                                      opt, stream, propagate, make_sampler, ess_of,
                                                      diag);
  return {cloud.trajectory(sel[0]), cloud.rao_blackwell()};
}

template <DiffusionModel M>
SingleChain<M::param_dim> cpf_kernel(const M& model, const typename M::Params& theta, int level,
                                     const ObservationRecord& data, const LatticePath& ref,
                                     const ChainOptions& opt, const Stream& stream,
                                     Diagnostics* diag = nullptr) {
  return cpf_kernel(model, theta, level, data, ref, opt, stream, ScoreFunctional<M>(model, theta),
                    diag);
}

/// One sweep of the coupled conditional particle filter at level l. A met
/// pair stays met: its sweep reduces to a single conditional filter.
template <DiffusionModel M, PathFunctional F>
ChainPair<F::dim> ccpf_kernel(const M& model, const typename M::Params& theta, int level,
                              const ObservationRecord& data, const ChainPair<F::dim>& state,
                              const ChainOptions& opt, const Stream& stream, const F& f,
                              Diagnostics* diag = nullptr) {
  constexpr int dx = M::state_dim;
  constexpr int df = F::dim;
  detail::require_particles(opt);
  detail::require_path(state.x, level, data.horizon(), dx, "ccpf_kernel");
  detail::require_path(state.x_ring, level, data.horizon(), dx, "ccpf_kernel");
  if (state.met || state.x == state.x_ring) {
    SingleChain<df> one = cpf_kernel(model, theta, level, data, state.x, opt, stream, f, diag);
    return {one.path, one.path, true, one.value, one.value};
  }
  const LevelData ld = data.level_data(level);
  ParticleCloud<dx, df> a(ld.grid(), opt.n_particles);
  ParticleCloud<dx, df> b(ld.grid(), opt.n_particles);
  NoiseBlock noise(level, dx);
  const typename M::State x_star = model.x_star();

  auto propagate = [&](int k, int i, Stream s) {
    noise.draw(s);
    coupled_unit_step(model, theta, detail::start_of(a, k, i, x_star),
                      detail::start_of(b, k, i, x_star), noise, a.segment(k, i), b.segment(k, i),
                      diag);
  };
  auto make_sampler = [](std::array<ParticleCloud<dx, df>*, 2> c) {
    return [plan = MaximalCouplingPlan(c[0]->weights(), c[1]->weights())](Stream& s) {
      const IndexPair p = plan.sample(s);
      return std::array<int, 2>{p.r, p.s};
    };
  };
  auto ess_of = [](std::array<ParticleCloud<dx, df>*, 2> c) {
    return overlap_ess(c[0]->weights(), c[1]->weights());
  };

  const auto sel = detail::conditional_sweep<M, F, 2>(model, theta, f, {&a, &b}, {&ld, &ld},
                                                      {&state.x, &state.x_ring}, opt, stream,
                                                      propagate, make_sampler, ess_of, diag);
  ChainPair<df> out{a.trajectory(sel[0]), b.trajectory(sel[1]), false, a.rao_blackwell(),
                    b.rao_blackwell()};
  out.met = out.x == out.x_ring;
  return out;
}

template <DiffusionModel M>
ChainPair<M::param_dim> ccpf_kernel(const M& model, const typename M::Params& theta, int level,
                                    const ObservationRecord& data,
                                    const ChainPair<M::param_dim>& state, const ChainOptions& opt,
                                    const Stream& stream, Diagnostics* diag = nullptr) {
  return ccpf_kernel(model, theta, level, data, state, opt, stream,
                     ScoreFunctional<M>(model, theta), diag);
}

/// Coupled conditional sweep whose two ensembles live at levels l and l-1,
/// conditioned on (fine, coarse) and driven by one level-l noise block per
/// particle.
template <DiffusionModel M, PathFunctional F>
LevelPair<F::dim> ccpf_cross_level_kernel(const M& model, const typename M::Params& theta,
                                          int level, const ObservationRecord& data,
                                          const LatticePath& fine, const LatticePath& coarse,
                                          const ChainOptions& opt, const Stream& stream,
                                          const F& f, Diagnostics* diag = nullptr) {
  constexpr int dx = M::state_dim;
  constexpr int df = F::dim;
  if (level < 1) throw LevelError("ccpf_cross_level_kernel needs level >= 1");
  detail::require_particles(opt);
  detail::require_path(fine, level, data.horizon(), dx, "ccpf_cross_level_kernel");
  detail::require_path(coarse, level - 1, data.horizon(), dx, "ccpf_cross_level_kernel");
  const LevelData ld_fine = data.level_data(level);
  const LevelData ld_coarse = data.level_data(level - 1);
  ParticleCloud<dx, df> a(ld_fine.grid(), opt.n_particles);
  ParticleCloud<dx, df> b(ld_coarse.grid(), opt.n_particles);
  NoiseBlock noise(level, dx);
  const typename M::State x_star = model.x_star();

  auto propagate = [&](int k, int i, Stream s) {
    noise.draw(s);
    fine_coarse_unit_step(model, theta, detail::start_of(a, k, i, x_star),
                          detail::start_of(b, k, i, x_star), noise, a.segment(k, i),
                          b.segment(k, i), diag);
  };
  auto make_sampler = [](std::array<ParticleCloud<dx, df>*, 2> c) {
    return [plan = MaximalCouplingPlan(c[0]->weights(), c[1]->weights())](Stream& s) {
      const IndexPair p = plan.sample(s);
      return std::array<int, 2>{p.r, p.s};
    };
  };
  auto ess_of = [](std::array<ParticleCloud<dx, df>*, 2> c) {
    return overlap_ess(c[0]->weights(), c[1]->weights());
  };

  const auto sel = detail::conditional_sweep<M, F, 2>(model, theta, f, {&a, &b},
                                                      {&ld_fine, &ld_coarse}, {&fine, &coarse},
                                                      opt, stream, propagate, make_sampler,
                                                      ess_of, diag);
  return {a.trajectory(sel[0]), b.trajectory(sel[1]), a.rao_blackwell(), b.rao_blackwell()};
}

template <DiffusionModel M>
LevelPair<M::param_dim> ccpf_cross_level_kernel(const M& model, const typename M::Params& theta,
                                                int level, const ObservationRecord& data,
                                                const LatticePath& fine,
                                                const LatticePath& coarse,
                                                const ChainOptions& opt, const Stream& stream,
                                                Diagnostics* diag = nullptr) {
  return ccpf_cross_level_kernel(model, theta, level, data, fine, coarse, opt, stream,
                                 ScoreFunctional<M>(model, theta), diag);
}

/// One sweep of the four-ensemble kernel: a level-l CCPF and a level-(l-1)
/// CCPF sharing Brownian increments, resampled with the maximal coupling of
/// maximal couplings. The ESS rule looks at the coarse pair.
template <DiffusionModel M, PathFunctional F>
ChainQuad<F::dim> cccpf_kernel(const M& model, const typename M::Params& theta, int level,
                               const ObservationRecord& data, const ChainQuad<F::dim>& state,
                               const ChainOptions& opt, const Stream& stream, const F& f,
                               Diagnostics* diag = nullptr) {
  constexpr int dx = M::state_dim;
  constexpr int df = F::dim;
  if (level < 1) throw LevelError("cccpf_kernel needs level >= 1");
  detail::require_particles(opt);
  detail::require_path(state.fine, level, data.horizon(), dx, "cccpf_kernel");
  detail::require_path(state.fine_ring, level, data.horizon(), dx, "cccpf_kernel");
  detail::require_path(state.coarse, level - 1, data.horizon(), dx, "cccpf_kernel");
  detail::require_path(state.coarse_ring, level - 1, data.horizon(), dx, "cccpf_kernel");
  const LevelData ld_fine = data.level_data(level);
  const LevelData ld_coarse = data.level_data(level - 1);
  using Cloud = ParticleCloud<dx, df>;
  Cloud a(ld_fine.grid(), opt.n_particles);
  Cloud b(ld_fine.grid(), opt.n_particles);
  Cloud c(ld_coarse.grid(), opt.n_particles);
  Cloud d(ld_coarse.grid(), opt.n_particles);
  NoiseBlock noise(level, dx);
  const typename M::State x_star = model.x_star();

  auto propagate = [&](int k, int i, Stream s) {
    noise.draw(s);
    four_chain_unit_step(model, theta, detail::start_of(a, k, i, x_star),
                         detail::start_of(b, k, i, x_star), detail::start_of(c, k, i, x_star),
                         detail::start_of(d, k, i, x_star), noise, a.segment(k, i),
                         b.segment(k, i), c.segment(k, i), d.segment(k, i), diag);
  };
  auto make_sampler = [diag](std::array<Cloud*, 4> cl) {
    return [fine = MaximalCouplingPlan(cl[0]->weights(), cl[1]->weights()),
            coarse = MaximalCouplingPlan(cl[2]->weights(), cl[3]->weights()), diag](Stream& s) {
      const IndexQuad q = maximal_coupling_of_maximal_couplings(fine, coarse, s, diag);
      return std::array<int, 4>{q.r_fine, q.s_fine, q.r_coarse, q.s_coarse};
    };
  };
  auto ess_of = [](std::array<Cloud*, 4> cl) {
    return overlap_ess(cl[2]->weights(), cl[3]->weights());
  };

  const auto sel = detail::conditional_sweep<M, F, 4>(
      model, theta, f, {&a, &b, &c, &d}, {&ld_fine, &ld_fine, &ld_coarse, &ld_coarse},
      {&state.fine, &state.fine_ring, &state.coarse, &state.coarse_ring}, opt, stream, propagate,
      make_sampler, ess_of, diag);
  ChainQuad<df> out{a.trajectory(sel[0]), b.trajectory(sel[1]), c.trajectory(sel[2]),
                    d.trajectory(sel[3]), false, false, a.rao_blackwell(), b.rao_blackwell(),
                    c.rao_blackwell(), d.rao_blackwell()};
  out.met_fine = out.fine == out.fine_ring;
  out.met_coarse = out.coarse == out.coarse_ring;
  return out;
}

template <DiffusionModel M>
ChainQuad<M::param_dim> cccpf_kernel(const M& model, const typename M::Params& theta, int level,
                                     const ObservationRecord& data,
                                     const ChainQuad<M::param_dim>& state, const ChainOptions& opt,
                                     const Stream& stream, Diagnostics* diag = nullptr) {
  return cccpf_kernel(model, theta, level, data, state, opt, stream,
                      ScoreFunctional<M>(model, theta), diag);
}

/// Initial pair at level l. X is one conditional sweep applied to an Euler
/// prior draw, X_ring an independent Euler prior draw, so X runs one sweep
/// ahead of X_ring.
template <DiffusionModel M, PathFunctional F>
ChainPair<F::dim> init_mu_l(const M& model, const typename M::Params& theta, int level,
                            const ObservationRecord& data, const ChainOptions& opt,
                            const Stream& stream, const F& f, Diagnostics* diag = nullptr) {
  detail::require_particles(opt);
  const LevelGrid grid(level, data.horizon());
  const Stream init = stream.child(stream_tag::kInit);
  LatticePath ring = forward_path(model, theta, grid, init.child(0), diag);
  const LatticePath bar = forward_path(model, theta, grid, init.child(1), diag);
  SingleChain<F::dim> x = cpf_kernel(model, theta, level, data, bar, opt, init.child(2), f, diag);
  const Vec<F::dim> ring_value = evaluate_functional(f, data.level_data(level), ring);
  const bool met = x.path == ring;
  return {std::move(x.path), std::move(ring), met, x.value, ring_value};
}

template <DiffusionModel M>
ChainPair<M::param_dim> init_mu_l(const M& model, const typename M::Params& theta, int level,
                                  const ObservationRecord& data, const ChainOptions& opt,
                                  const Stream& stream, Diagnostics* diag = nullptr) {
  return init_mu_l(model, theta, level, data, opt, stream, ScoreFunctional<M>(model, theta), diag);
}

/// Initial quad at levels (l, l-1): the (fine, coarse) pair is one cross-level
/// sweep applied to a coupled forward draw; the ringed pair is an independent
/// coupled forward draw.
template <DiffusionModel M, PathFunctional F>
ChainQuad<F::dim> init_mu_l_lm1(const M& model, const typename M::Params& theta, int level,
                                const ObservationRecord& data, const ChainOptions& opt,
                                const Stream& stream, const F& f, Diagnostics* diag = nullptr) {
  if (level < 1) throw LevelError("init_mu_l_lm1 needs level >= 1");
  detail::require_particles(opt);
  const LevelGrid grid(level, data.horizon());
  const Stream init = stream.child(stream_tag::kInit);
  auto ring = forward_fine_coarse(model, theta, grid, init.child(0), diag);
  const auto bar = forward_fine_coarse(model, theta, grid, init.child(1), diag);
  LevelPair<F::dim> x = ccpf_cross_level_kernel(model, theta, level, data, bar.first, bar.second,
                                                opt, init.child(2), f, diag);
  const Vec<F::dim> v_fine_ring = evaluate_functional(f, data.level_data(level), ring.first);
  const Vec<F::dim> v_coarse_ring =
      evaluate_functional(f, data.level_data(level - 1), ring.second);
  ChainQuad<F::dim> out{std::move(x.fine),         std::move(ring.first), std::move(x.coarse),
                        std::move(ring.second),    false,                 false,
                        x.value_fine,              v_fine_ring,           x.value_coarse,
                        v_coarse_ring};
  out.met_fine = out.fine == out.fine_ring;
  out.met_coarse = out.coarse == out.coarse_ring;
  return out;
}

template <DiffusionModel M>
ChainQuad<M::param_dim> init_mu_l_lm1(const M& model, const typename M::Params& theta, int level,
                                      const ObservationRecord& data, const ChainOptions& opt,
                                      const Stream& stream, Diagnostics* diag = nullptr) {
  return init_mu_l_lm1(model, theta, level, data, opt, stream, ScoreFunctional<M>(model, theta),
                       diag);
}

}  // namespace uscore
