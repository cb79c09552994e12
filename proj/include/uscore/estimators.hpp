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

#include "uscore/chains.hpp"
#include "uscore/common.hpp"
#include "uscore/couplings.hpp"
#include "uscore/functionals.hpp"
#include "uscore/lattice.hpp"
#include "uscore/models.hpp"
#include "uscore/pool.hpp"
#include "uscore/rng.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uscore {

// ---------------------------------------------------------------------------
// Level distributions

enum class LevelKind { Geometric, Empirical, Custom };

class LevelDistribution {
 public:
  LevelDistribution(LevelKind kind, std::vector<double> pmf, double p = 0.0)
      : kind_(kind), p_(p), pmf_(std::move(pmf)) {
    if (pmf_.empty()) throw ConfigError("level distribution needs a non-empty support");
    double sum = 0.0;
    for (double v : pmf_) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError("level distribution masses must be positive on the support");
      }
      sum += v;
    }
    for (double& v : pmf_) v /= sum;
    survival_.assign(pmf_.size(), 0.0);
    double tail = 0.0;
    for (std::size_t l = pmf_.size(); l-- > 0;) {
      tail += pmf_[l];
      survival_[l] = tail;
    }
    survival_[0] = 1.0;
    table_ = CategoricalTable(pmf_);
  }

  LevelKind kind() const noexcept { return kind_; }
  double success_rate() const noexcept { return p_; }
  int l_max() const noexcept { return static_cast<int>(pmf_.size()) - 1; }
  double pmf(int l) const { return pmf_.at(static_cast<std::size_t>(l)); }
  /// P*(l) = sum_{j >= l} p*(j).
  double survival(int l) const { return survival_.at(static_cast<std::size_t>(l)); }
  std::span<const double> masses() const noexcept { return pmf_; }

  int sample(Stream& stream) const { return table_.draw(stream); }

  std::string label() const {
    switch (kind_) {
      case LevelKind::Geometric: return "geom:" + format_rate(p_);
      case LevelKind::Empirical: return "empirical";
      default: return "custom";
    }
  }

 private:
  static std::string format_rate(double p) {
    std::string s = std::to_string(p);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.push_back('0');
    return s;
  }

  LevelKind kind_;
  double p_;
  std::vector<double> pmf_;
  std::vector<double> survival_;
  CategoricalTable table_;
};

/// Geometric(p) masses p (1 - p)^l, normalized over {0..l_max}.
inline LevelDistribution geometric_levels(double p, int l_max) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("geometric success rate must lie in (0, 1)");
  if (l_max < 0) throw ConfigError("l_max must be >= 0");
  std::vector<double> pmf(static_cast<std::size_t>(l_max) + 1);
  for (int l = 0; l <= l_max; ++l) pmf[l] = p * std::pow(1.0 - p, l);
  return LevelDistribution(LevelKind::Geometric, std::move(pmf), p);
}

/// Masses proportional to Delta_l^{1/2} (l + 1) log2(2 + l)^2 over {0..l_max}.
inline LevelDistribution empirical_levels(int l_max) {
  if (l_max < 0) throw ConfigError("l_max must be >= 0");
  std::vector<double> pmf(static_cast<std::size_t>(l_max) + 1);
  for (int l = 0; l <= l_max; ++l) {
    const double lg = std::log2(2.0 + l);
    pmf[l] = std::sqrt(std::ldexp(1.0, -(l + 3))) * (l + 1.0) * lg * lg;
  }
  return LevelDistribution(LevelKind::Empirical, std::move(pmf));
}

inline LevelDistribution degenerate_levels(int level) {
  if (level < 0) throw ConfigError("level must be >= 0");
  std::vector<double> pmf(static_cast<std::size_t>(level) + 1, 1e-300);
  pmf.back() = 1.0;
  return LevelDistribution(LevelKind::Custom, std::move(pmf));
}

/// Parses "geom:<p>" or "empirical".
inline LevelDistribution level_pmf(const std::string& spec, int l_max) {
  if (spec == "empirical") return empirical_levels(l_max);
  if (spec.rfind("geom:", 0) == 0) {
    double p = 0.0;
    try {
      std::size_t used = 0;
      p = std::stod(spec.substr(5), &used);
      if (used != spec.size() - 5) throw std::invalid_argument(spec);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse geometric rate in '" + spec + "'");
    }
    return geometric_levels(p, l_max);
  }
  throw ConfigError("unknown level distribution '" + spec + "' (expected geom:<p> or empirical)");
}

inline LevelDistribution level_pmf(LevelKind kind, int l_max, double p = 0.6) {
  switch (kind) {
    case LevelKind::Geometric: return geometric_levels(p, l_max);
    case LevelKind::Empirical: return empirical_levels(l_max);
    default: throw ConfigError("custom level distributions need explicit masses");
  }
}

// ---------------------------------------------------------------------------
// Rhee-Glynn terms

struct EstimatorParams {
  ChainOptions chain;
  int k_star = 2;
  int m_star = 4;
  int sweep_cap = 0;  // 0 selects 10 * m_star + 1000

  int effective_cap() const { return sweep_cap > 0 ? sweep_cap : 10 * m_star + 1000; }

  void validate() const {
    if (k_star < 2 || k_star >= m_star) throw ConfigError("need 2 <= k_star < m_star");
    if (effective_cap() < m_star) throw ConfigError("sweep_cap must be >= m_star");
  }
};

template <int Df>
struct PsiResult {
  Vec<Df> value = Vec<Df>::Zero();
  int level = 0;
  int tau = 0;         // level 0: tau^0; level l: max(tau^l, tau^{l-1})
  int tau_fine = 0;
  int tau_coarse = 0;  // unused at level 0
  int sweeps = 0;
};

namespace detail {

inline double correction_weight(int k, int k_star, int m_star) {
  const int span = m_star - k_star + 1;
  return static_cast<double>(std::min(span, k - k_star)) / span;
}

}  // namespace detail

/// Time-averaged Rhee-Glynn estimate at level 0:
///   avg_{k*<=k<=m*} lambda(X^k) + sum_{k>k*} w_k (lambda(X^k) - lambda(X_ring^k)).
/// The correction sum stops after the meeting sweep, past which every term
/// vanishes.
template <DiffusionModel M, PathFunctional F>
PsiResult<F::dim> psi_zero(const M& model, const typename M::Params& theta,
                           const ObservationRecord& data, const EstimatorParams& params,
                           const Stream& stream, const F& f, Diagnostics* diag = nullptr) {
  params.validate();
  const int k_star = params.k_star;
  const int m_star = params.m_star;
  const int cap = params.effective_cap();
  ChainPair<F::dim> pair =
      init_mu_l(model, theta, 0, data, params.chain, stream.child(stream_tag::kSweep, 0), f, diag);
  int tau = pair.met ? 0 : -1;
  Vec<F::dim> average = Vec<F::dim>::Zero();
  Vec<F::dim> correction = Vec<F::dim>::Zero();
  int k = 0;
  while (k < m_star || tau < 0) {
    ++k;
    if (k > cap) {
      throw NonMeetingError("psi_zero: chains did not meet within " + std::to_string(cap) +
                                " sweeps",
                            cap);
    }
    pair = ccpf_kernel(model, theta, 0, data, pair, params.chain,
                       stream.child(stream_tag::kSweep, static_cast<std::uint64_t>(k)), f, diag);
    if (k >= k_star && k <= m_star) average += pair.value;
    if (k > k_star && tau < 0) {
      correction += detail::correction_weight(k, k_star, m_star) * (pair.value - pair.value_ring);
    }
    if (tau < 0 && pair.met) tau = k;
  }
  PsiResult<F::dim> out;
  out.value = average / static_cast<double>(m_star - k_star + 1) + correction;
  out.level = 0;
  out.tau = tau;
  out.tau_fine = tau;
  out.sweeps = k;
  return out;
}

template <DiffusionModel M>
PsiResult<M::param_dim> psi_zero(const M& model, const typename M::Params& theta,
                                 const ObservationRecord& data, const EstimatorParams& params,
                                 const Stream& stream, Diagnostics* diag = nullptr) {
  return psi_zero(model, theta, data, params, stream, ScoreFunctional<M>(model, theta), diag);
}

/// Level-l increment: time-averaged lambda^l - lambda^{l-1} plus the
/// difference of the two within-level corrections, run until both pairs met.
template <DiffusionModel M, PathFunctional F>
PsiResult<F::dim> psi_level(const M& model, const typename M::Params& theta, int level,
                            const ObservationRecord& data, const EstimatorParams& params,
                            const Stream& stream, const F& f, Diagnostics* diag = nullptr) {
  if (level < 1) throw LevelError("psi_level needs level >= 1");
  params.validate();
  const int k_star = params.k_star;
  const int m_star = params.m_star;
  const int cap = params.effective_cap();
  ChainQuad<F::dim> quad = init_mu_l_lm1(model, theta, level, data, params.chain,
                                         stream.child(stream_tag::kSweep, 0), f, diag);
  int tau_f = quad.met_fine ? 0 : -1;
  int tau_c = quad.met_coarse ? 0 : -1;
  Vec<F::dim> average = Vec<F::dim>::Zero();
  Vec<F::dim> correction = Vec<F::dim>::Zero();
  int k = 0;
  while (k < m_star || tau_f < 0 || tau_c < 0) {
    ++k;
    if (k > cap) {
      throw NonMeetingError("psi_level: chains at level " + std::to_string(level) +
                                " did not meet within " + std::to_string(cap) + " sweeps",
                            cap);
    }
    quad = cccpf_kernel(model, theta, level, data, quad, params.chain,
                        stream.child(stream_tag::kSweep, static_cast<std::uint64_t>(k)), f, diag);
    if (k >= k_star && k <= m_star) average += quad.value_fine - quad.value_coarse;
    if (k > k_star) {
      const double w = detail::correction_weight(k, k_star, m_star);
      if (tau_f < 0) correction += w * (quad.value_fine - quad.value_fine_ring);
      if (tau_c < 0) correction -= w * (quad.value_coarse - quad.value_coarse_ring);
    }
    if (tau_f < 0 && quad.met_fine) tau_f = k;
    if (tau_c < 0 && quad.met_coarse) tau_c = k;
  }
  PsiResult<F::dim> out;
  out.value = average / static_cast<double>(m_star - k_star + 1) + correction;
  out.level = level;
  out.tau_fine = tau_f;
  out.tau_coarse = tau_c;
  out.tau = std::max(tau_f, tau_c);
  out.sweeps = k;
  return out;
}

template <DiffusionModel M>
PsiResult<M::param_dim> psi_level(const M& model, const typename M::Params& theta, int level,
                                  const ObservationRecord& data, const EstimatorParams& params,
                                  const Stream& stream, Diagnostics* diag = nullptr) {
  return psi_level(model, theta, level, data, params, stream, ScoreFunctional<M>(model, theta),
                   diag);
}

/// Psi^0 for level 0, Psi^l otherwise.
template <DiffusionModel M, PathFunctional F>
PsiResult<F::dim> psi(const M& model, const typename M::Params& theta, int level,
                      const ObservationRecord& data, const EstimatorParams& params,
                      const Stream& stream, const F& f, Diagnostics* diag = nullptr) {
  if (level == 0) return psi_zero(model, theta, data, params, stream, f, diag);
  return psi_level(model, theta, level, data, params, stream, f, diag);
}

// ---------------------------------------------------------------------------
// Unbiased estimators

enum class EstimatorKind { SingleTerm, CoupledSum };

template <int Df>
struct ScoreEstimate {
  Vec<Df> value = Vec<Df>::Zero();
  int level = 0;                      // the drawn L
  std::vector<PsiResult<Df>> terms;   // one per level computed
  int sweeps = 0;                     // summed over terms
  double wall_seconds = 0.0;
  Diagnostics diagnostics;
  int replicates = 1;
  int failed_replicates = 0;
};

namespace detail {

inline void require_data_level(const ObservationRecord& data, const LevelDistribution& dist) {
  if (data.l_star() < dist.l_max()) {
    throw LevelError("data level l* = " + std::to_string(data.l_star()) +
                     " is coarser than L_max = " + std::to_string(dist.l_max()));
  }
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Psi^L / p*(L) with L ~ p*.
template <DiffusionModel M, PathFunctional F>
ScoreEstimate<F::dim> single_term_estimate(const M& model, const typename M::Params& theta,
                                           const ObservationRecord& data,
                                           const LevelDistribution& dist,
                                           const EstimatorParams& params, const Stream& stream,
                                           const F& f) {
  detail::require_data_level(data, dist);
  const auto t0 = std::chrono::steady_clock::now();
  ScoreEstimate<F::dim> est;
  Stream pick = stream.child(stream_tag::kLevel);
  est.level = dist.sample(pick);
  PsiResult<F::dim> term =
      psi(model, theta, est.level, data, params,
          stream.child(stream_tag::kLevel, static_cast<std::uint64_t>(est.level) + 1), f,
          &est.diagnostics);
  est.value = term.value / dist.pmf(est.level);
  est.sweeps = term.sweeps;
  est.terms.push_back(term);
  est.wall_seconds = detail::seconds_since(t0);
  return est;
}

/// sum_{l <= L} Psi^l / P*(l) with L ~ p*; each term from an independent run.
template <DiffusionModel M, PathFunctional F>
ScoreEstimate<F::dim> coupled_sum_estimate(const M& model, const typename M::Params& theta,
                                           const ObservationRecord& data,
                                           const LevelDistribution& dist,
                                           const EstimatorParams& params, const Stream& stream,
                                           const F& f) {
  detail::require_data_level(data, dist);
  const auto t0 = std::chrono::steady_clock::now();
  ScoreEstimate<F::dim> est;
  Stream pick = stream.child(stream_tag::kLevel);
  est.level = dist.sample(pick);
  for (int l = 0; l <= est.level; ++l) {
    PsiResult<F::dim> term =
        psi(model, theta, l, data, params,
            stream.child(stream_tag::kLevel, static_cast<std::uint64_t>(l) + 1), f,
            &est.diagnostics);
    est.value += term.value / dist.survival(l);
    est.sweeps += term.sweeps;
    est.terms.push_back(term);
  }
  est.wall_seconds = detail::seconds_since(t0);
  return est;
}

template <DiffusionModel M, PathFunctional F>
ScoreEstimate<F::dim> estimate(EstimatorKind kind, const M& model, const typename M::Params& theta,
                               const ObservationRecord& data, const LevelDistribution& dist,
                               const EstimatorParams& params, const Stream& stream, const F& f) {
  return kind == EstimatorKind::SingleTerm
             ? single_term_estimate(model, theta, data, dist, params, stream, f)
             : coupled_sum_estimate(model, theta, data, dist, params, stream, f);
}

/// Pairwise (cascade) mean of vectors, in index order.
template <int D>
Vec<D> pairwise_mean(std::span<const Vec<D>> xs) {
  if (xs.empty()) return Vec<D>::Constant(std::numeric_limits<double>::quiet_NaN());
  auto sum = [](auto&& self, std::span<const Vec<D>> v) -> Vec<D> {
    if (v.size() == 1) return v[0];
    const std::size_t h = v.size() / 2;
    return self(self, v.first(h)) + self(self, v.subspan(h));
  };
  return sum(sum, xs) / static_cast<double>(xs.size());
}

/// Mean of M independent estimates run on `workers` threads. Replicates whose
/// chains fail to meet are dropped and counted.
template <DiffusionModel M, PathFunctional F>
ScoreEstimate<F::dim> averaged_estimate(EstimatorKind kind, const M& model,
                                        const typename M::Params& theta,
                                        const ObservationRecord& data,
                                        const LevelDistribution& dist,
                                        const EstimatorParams& params, int replicates,
                                        const Stream& stream, const F& f, int workers = 1) {
  if (replicates < 1) throw ConfigError("averaged_estimate needs M >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::optional<ScoreEstimate<F::dim>>> runs(static_cast<std::size_t>(replicates));
  parallel_for(runs.size(), workers, [&](std::size_t r) {
    try {
      runs[r] = estimate(kind, model, theta, data, dist, params,
                         stream.child(stream_tag::kReplicate, r), f);
    } catch (const NonMeetingError&) {
      runs[r].reset();
    }
  });
  ScoreEstimate<F::dim> out;
  out.replicates = replicates;
  std::vector<Vec<F::dim>> values;
  for (auto& run : runs) {
    if (!run) {
      ++out.failed_replicates;
      continue;
    }
    values.push_back(run->value);
    out.sweeps += run->sweeps;
    out.diagnostics += run->diagnostics;
    if (replicates == 1) {
      out.level = run->level;
      out.terms = run->terms;
    }
  }
  if (values.empty()) {
    throw NonMeetingError("averaged_estimate: every replicate failed to meet", params.effective_cap());
  }
  out.value = pairwise_mean<F::dim>(values);
  out.wall_seconds = detail::seconds_since(t0);
  return out;
}

template <DiffusionModel M>
ScoreEstimate<M::param_dim> averaged_estimate(EstimatorKind kind, const M& model,
                                              const typename M::Params& theta,
                                              const ObservationRecord& data,
                                              const LevelDistribution& dist,
                                              const EstimatorParams& params, int replicates,
                                              const Stream& stream, int workers = 1) {
  return averaged_estimate(kind, model, theta, data, dist, params, replicates, stream,
                           ScoreFunctional<M>(model, theta), workers);
}

template <DiffusionModel M>
ScoreEstimate<M::param_dim> single_term_estimate(const M& model, const typename M::Params& theta,
                                                 const ObservationRecord& data,
                                                 const LevelDistribution& dist,
                                                 const EstimatorParams& params,
                                                 const Stream& stream) {
  return single_term_estimate(model, theta, data, dist, params, stream,
                              ScoreFunctional<M>(model, theta));
}

template <DiffusionModel M>
ScoreEstimate<M::param_dim> coupled_sum_estimate(const M& model, const typename M::Params& theta,
                                                 const ObservationRecord& data,
                                                 const LevelDistribution& dist,
                                                 const EstimatorParams& params,
                                                 const Stream& stream) {
  return coupled_sum_estimate(model, theta, data, dist, params, stream,
                              ScoreFunctional<M>(model, theta));
}

}  // namespace uscore
