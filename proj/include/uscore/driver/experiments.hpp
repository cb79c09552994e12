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
#include "uscore/driver/config.hpp"
#include "uscore/driver/csv.hpp"
#include "uscore/driver/sgd.hpp"
#include "uscore/estimators.hpp"
#include "uscore/io.hpp"
#include "uscore/lattice.hpp"
#include "uscore/models.hpp"
#include "uscore/oracle.hpp"
#include "uscore/pool.hpp"
#include "uscore/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace uscore::driver {

// ---------------------------------------------------------------------------
// Resolving a configuration

template <class Fn>
void with_model(const std::string& name, Fn&& fn) {
  if (name == "ou") {
    fn(OrnsteinUhlenbeck{});
  } else if (name == "gbm") {
    fn(GeometricBrownian{});
  } else if (name == "lorenz") {
    fn(Lorenz{});
  } else {
    throw ConfigError("unknown model '" + name + "' (expected ou, gbm or lorenz)");
  }
}

inline EstimatorParams estimator_params(const Config& cfg) {
  EstimatorParams p;
  p.chain.n_particles = static_cast<int>(cfg.integer("n_particles", 64));
  p.chain.always_resample = cfg.boolean("always_resample", false);
  p.k_star = static_cast<int>(cfg.integer("k_star", 2));
  p.m_star = static_cast<int>(cfg.integer("m_star", 4));
  p.sweep_cap = static_cast<int>(cfg.integer("sweep_cap", 0));
  if (p.chain.n_particles < 2) throw ConfigError("n_particles must be >= 2");
  p.validate();
  return p;
}

inline LevelDistribution level_distribution(const Config& cfg) {
  return level_pmf(cfg.str("dist", "empirical"), static_cast<int>(cfg.integer("l_max", 3)));
}

inline EstimatorKind estimator_kind(const Config& cfg) {
  const std::string v = cfg.str("estimator", "coupled-sum");
  if (v == "coupled-sum") return EstimatorKind::CoupledSum;
  if (v == "single-term") return EstimatorKind::SingleTerm;
  throw ConfigError("estimator must be coupled-sum or single-term, got '" + v + "'");
}

inline int workers_of(const Config& cfg) {
  const long long w = cfg.integer("workers", 1);
  if (w < 0) throw ConfigError("workers must be >= 0");
  return w == 0 ? hardware_workers() : static_cast<int>(w);
}

inline std::uint64_t seed_of(const Config& cfg) {
  return static_cast<std::uint64_t>(cfg.integer("seed", 1));
}

template <DiffusionModel M>
typename M::Params theta_of(const M& model, const Config& cfg) {
  typename M::Params theta = model.theta_true;
  if (!cfg.has("theta")) return theta;
  std::stringstream ss(cfg.str("theta"));
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= M::param_dim) throw ConfigError("theta has too many components");
    try {
      theta(i++) = std::stod(item);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse theta component '" + item + "'");
    }
  }
  if (i != M::param_dim) throw ConfigError("theta needs " + std::to_string(M::param_dim) + " components");
  return theta;
}

inline ObservationRecord load_data(const Config& cfg) {
  if (!cfg.has("data")) throw IoError("no data file given (set data=<path> or --data)");
  return read_data(cfg.str("data"));
}

// ---------------------------------------------------------------------------
// Statistics

inline double sample_mean(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Unbiased sample variance; NaN for fewer than two samples.
inline double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = sample_mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

/// Linear-interpolation quantile (the usual "type 7" rule).
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

// ---------------------------------------------------------------------------
// Replicated Psi terms

template <int Df>
struct PsiSample {
  std::optional<PsiResult<Df>> result;
  double wall_s = 0.0;
};

template <DiffusionModel M>
std::vector<PsiSample<M::param_dim>> psi_replicates(const M& model,
                                                    const typename M::Params& theta, int level,
                                                    const ObservationRecord& data,
                                                    const EstimatorParams& params, int repeats,
                                                    const Stream& root, int workers) {
  std::vector<PsiSample<M::param_dim>> out(static_cast<std::size_t>(repeats));
  const ScoreFunctional<M> f(model, theta);
  parallel_for(out.size(), workers, [&](std::size_t r) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out[r].result = psi(model, theta, level, data, params, root.child(r), f);
    } catch (const NonMeetingError&) {
      out[r].result.reset();
    }
    out[r].wall_s = detail::seconds_since(t0);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Variance sweep: V_l of Psi^l per level, and V_N of Psi^0 per ensemble size.

struct VarianceRow {
  std::string kind;  // "level" or "ensemble"
  int level = 0;
  int n_particles = 0;
  int component = 0;
  int repeats = 0;
  int failed = 0;
  double mean = 0.0;
  double variance = 0.0;
  double scaled_variance = 0.0;  // variance / P*(l)^2 under the configured pmf
  double mean_tau = 0.0;
  double mean_sweeps = 0.0;
  double wall_s = 0.0;
};

inline const std::vector<std::string>& variance_columns() {
  static const std::vector<std::string> cols = {
      "kind",     "level",           "n_particles", "component",     "repeats", "failed",
      "mean",     "variance",        "variance_over_survival_sq",    "mean_tau",
      "mean_sweeps", "mean_wall_s"};
  return cols;
}

template <int Df>
void summarize_psi(const std::vector<PsiSample<Df>>& samples, VarianceRow base,
                   double survival, std::vector<VarianceRow>& rows) {
  std::vector<std::vector<double>> comp(Df);
  std::vector<double> taus;
  std::vector<double> sweeps;
  std::vector<double> walls;
  for (const auto& s : samples) {
    walls.push_back(s.wall_s);
    if (!s.result) {
      ++base.failed;
      continue;
    }
    for (int i = 0; i < Df; ++i) comp[i].push_back(s.result->value(i));
    taus.push_back(s.result->tau);
    sweeps.push_back(s.result->sweeps);
  }
  base.repeats = static_cast<int>(samples.size());
  base.mean_tau = sample_mean(taus);
  base.mean_sweeps = sample_mean(sweeps);
  base.wall_s = sample_mean(walls);
  for (int i = 0; i < Df; ++i) {
    VarianceRow row = base;
    row.component = i;
    row.mean = sample_mean(comp[i]);
    row.variance = sample_variance(comp[i]);
    row.scaled_variance = row.variance / (survival * survival);
    rows.push_back(row);
  }
}

template <DiffusionModel M>
std::vector<VarianceRow> variance_sweep(const M& model, const ObservationRecord& data,
                                        const Config& cfg) {
  const EstimatorParams params = estimator_params(cfg);
  const auto theta = theta_of(model, cfg);
  const int repeats = static_cast<int>(cfg.integer("repeats", 100));
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  const int workers = workers_of(cfg);
  const LevelDistribution dist = level_distribution(cfg);
  const Stream root(seed_of(cfg));
  std::vector<long long> levels;
  if (cfg.has("levels")) {
    levels = cfg.integers("levels");
  } else {
    for (int l = 0; l <= dist.l_max(); ++l) levels.push_back(l);
  }
  std::vector<VarianceRow> rows;
  for (long long l : levels) {
    if (l < 0 || l > data.l_star()) throw LevelError("variance_sweep: level outside [0, l*]");
    const auto samples = psi_replicates(model, theta, static_cast<int>(l), data, params, repeats,
                                        root.child(1, static_cast<std::uint64_t>(l)), workers);
    VarianceRow base;
    base.kind = "level";
    base.level = static_cast<int>(l);
    base.n_particles = params.chain.n_particles;
    const double surv = l <= dist.l_max() ? dist.survival(static_cast<int>(l))
                                          : std::numeric_limits<double>::quiet_NaN();
    summarize_psi<M::param_dim>(samples, base, surv, rows);
  }
  if (cfg.has("n_list")) {
    const int level = static_cast<int>(cfg.integer("level", 0));
    for (long long n : cfg.integers("n_list")) {
      EstimatorParams pn = params;
      pn.chain.n_particles = static_cast<int>(n);
      if (n < 2) throw ConfigError("n_list entries must be >= 2");
      const auto samples = psi_replicates(model, theta, level, data, pn, repeats,
                                          root.child(2, static_cast<std::uint64_t>(n)), workers);
      VarianceRow base;
      base.kind = "ensemble";
      base.level = level;
      base.n_particles = static_cast<int>(n);
      const double surv = level <= dist.l_max() ? dist.survival(level)
                                                : std::numeric_limits<double>::quiet_NaN();
      summarize_psi<M::param_dim>(samples, base, surv, rows);
    }
  }
  return rows;
}

inline void write_variance_csv(const std::vector<VarianceRow>& rows, const std::string& path,
                               const std::string& hash) {
  CsvWriter w(path, variance_columns(), hash);
  for (const auto& r : rows) {
    w.row({r.kind, fmt(r.level), fmt(r.n_particles), fmt(r.component), fmt(r.repeats),
           fmt(r.failed), fmt(r.mean), fmt(r.variance), fmt(r.scaled_variance), fmt(r.mean_tau),
           fmt(r.mean_sweeps), fmt(r.wall_s)});
  }
}

// ---------------------------------------------------------------------------
// MSE sweep: per N, the unbiased estimator (MSE = variance) against the
// level-0 Rhee-Glynn estimator (MSE = variance + bias^2).

struct MseRow {
  std::string estimator;
  int n_particles = 0;
  int component = 0;
  int repeats = 0;
  int failed = 0;
  double mean = 0.0;
  double variance = 0.0;
  double bias_proxy = 0.0;  // 95% quantile of Psi^1 realizations
  double bias_mean = 0.0;   // plain mean of Psi^1 realizations
  double mse = 0.0;
  double mse_mean = 0.0;
  double wall_s = 0.0;
};

inline const std::vector<std::string>& mse_columns() {
  static const std::vector<std::string> cols = {
      "estimator", "n_particles", "component", "repeats", "failed",   "mean", "variance",
      "bias_p95",  "bias_mean",   "mse",       "mse_mean_bias",       "mean_wall_s"};
  return cols;
}

template <DiffusionModel M>
std::vector<MseRow> mse_sweep(const M& model, const ObservationRecord& data, const Config& cfg) {
  constexpr int dp = M::param_dim;
  const EstimatorParams params = estimator_params(cfg);
  const auto theta = theta_of(model, cfg);
  const int repeats = static_cast<int>(cfg.integer("repeats", 100));
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  const int workers = workers_of(cfg);
  const LevelDistribution dist = level_distribution(cfg);
  const EstimatorKind kind = estimator_kind(cfg);
  const Stream root(seed_of(cfg));
  const std::vector<long long> ns =
      cfg.has("n_list") ? cfg.integers("n_list")
                        : std::vector<long long>{cfg.integer("n_particles", 64)};
  const ScoreFunctional<M> f(model, theta);
  std::vector<MseRow> rows;

  for (long long n : ns) {
    if (n < 2) throw ConfigError("n_list entries must be >= 2");
    EstimatorParams pn = params;
    pn.chain.n_particles = static_cast<int>(n);
    const Stream rn = root.child(3, static_cast<std::uint64_t>(n));

    // Unbiased estimator.
    std::vector<std::optional<Vec<dp>>> ub(static_cast<std::size_t>(repeats));
    std::vector<double> ub_wall(ub.size());
    parallel_for(ub.size(), workers, [&](std::size_t r) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        ub[r] = estimate(kind, model, theta, data, dist, pn, rn.child(0, r), f).value;
      } catch (const NonMeetingError&) {
        ub[r].reset();
      }
      ub_wall[r] = detail::seconds_since(t0);
    });
    const auto rg = psi_replicates(model, theta, 0, data, pn, repeats, rn.child(1), workers);
    const auto bias = psi_replicates(model, theta, 1, data, pn, repeats, rn.child(2), workers);

    for (int i = 0; i < dp; ++i) {
      std::vector<double> u, g, b, gw;
      int ub_failed = 0;
      int rg_failed = 0;
      for (const auto& v : ub) {
        if (v) {
          u.push_back((*v)(i));
        } else {
          ++ub_failed;
        }
      }
      for (const auto& s : rg) {
        gw.push_back(s.wall_s);
        if (s.result) {
          g.push_back(s.result->value(i));
        } else {
          ++rg_failed;
        }
      }
      for (const auto& s : bias) {
        if (s.result) b.push_back(s.result->value(i));
      }
      MseRow ur;
      ur.estimator = kind == EstimatorKind::CoupledSum ? "coupled-sum" : "single-term";
      ur.n_particles = static_cast<int>(n);
      ur.component = i;
      ur.repeats = repeats;
      ur.failed = ub_failed;
      ur.mean = sample_mean(u);
      ur.variance = sample_variance(u);
      ur.bias_proxy = 0.0;
      ur.bias_mean = 0.0;
      ur.mse = ur.variance;
      ur.mse_mean = ur.variance;
      ur.wall_s = sample_mean(ub_wall);
      rows.push_back(ur);

      MseRow gr;
      gr.estimator = "rhee-glynn";
      gr.n_particles = static_cast<int>(n);
      gr.component = i;
      gr.repeats = repeats;
      gr.failed = rg_failed;
      gr.mean = sample_mean(g);
      gr.variance = sample_variance(g);
      gr.bias_proxy = quantile(b, 0.95);
      gr.bias_mean = sample_mean(b);
      gr.mse = gr.variance + gr.bias_proxy * gr.bias_proxy;
      gr.mse_mean = gr.variance + gr.bias_mean * gr.bias_mean;
      gr.wall_s = sample_mean(gw);
      rows.push_back(gr);
    }
  }
  return rows;
}

inline void write_mse_csv(const std::vector<MseRow>& rows, const std::string& path,
                          const std::string& hash) {
  CsvWriter w(path, mse_columns(), hash);
  for (const auto& r : rows) {
    w.row({r.estimator, fmt(r.n_particles), fmt(r.component), fmt(r.repeats), fmt(r.failed),
           fmt(r.mean), fmt(r.variance), fmt(r.bias_proxy), fmt(r.bias_mean), fmt(r.mse),
           fmt(r.mse_mean), fmt(r.wall_s)});
  }
}

// ---------------------------------------------------------------------------
// Score estimation: M replicates of the unbiased estimator, one row each. A
// fixed `level` replaces the level draw, giving the level-l discretized score.

template <int Df>
struct EstimateRun {
  std::vector<std::optional<ScoreEstimate<Df>>> replicates;
  Vec<Df> mean = Vec<Df>::Zero();
  int failed = 0;
};

template <DiffusionModel M>
EstimateRun<M::param_dim> estimate_score(const M& model, const ObservationRecord& data,
                                         const Config& cfg) {
  const EstimatorParams params = estimator_params(cfg);
  const auto theta = theta_of(model, cfg);
  const int replicates = static_cast<int>(cfg.integer("replicates", 1));
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  const LevelDistribution dist = cfg.has("level")
                                     ? degenerate_levels(static_cast<int>(cfg.integer("level")))
                                     : level_distribution(cfg);
  const EstimatorKind kind = estimator_kind(cfg);
  const Stream root(seed_of(cfg));
  const ScoreFunctional<M> f(model, theta);
  EstimateRun<M::param_dim> run;
  run.replicates.resize(static_cast<std::size_t>(replicates));
  parallel_for(run.replicates.size(), workers_of(cfg), [&](std::size_t r) {
    try {
      run.replicates[r] =
          estimate(kind, model, theta, data, dist, params, root.child(stream_tag::kReplicate, r), f);
    } catch (const NonMeetingError&) {
      run.replicates[r].reset();
    }
  });
  std::vector<Vec<M::param_dim>> values;
  for (const auto& r : run.replicates) {
    if (r) {
      values.push_back(r->value);
    } else {
      ++run.failed;
    }
  }
  run.mean = pairwise_mean<M::param_dim>(values);
  return run;
}

template <int Df>
void write_estimate_csv(const EstimateRun<Df>& run, const std::string& path,
                        const std::string& hash) {
  std::vector<std::string> cols = {"replicate", "level", "sweeps", "meeting_times"};
  for (int i = 0; i < Df; ++i) cols.push_back("score_" + std::to_string(i));
  cols.push_back("wall_s");
  CsvWriter w(path, cols, hash);
  for (std::size_t r = 0; r < run.replicates.size(); ++r) {
    const auto& e = run.replicates[r];
    std::vector<std::string> cells = {fmt(static_cast<long long>(r))};
    if (!e) {
      cells.insert(cells.end(), {"nan", "nan", "failed"});
      for (int i = 0; i < Df; ++i) cells.push_back("nan");
      cells.push_back("nan");
    } else {
      std::string taus;
      for (const auto& t : e->terms) {
        if (!taus.empty()) taus += ';';
        taus += std::to_string(t.level) + ":" + std::to_string(t.tau);
      }
      cells.insert(cells.end(), {fmt(e->level), fmt(e->sweeps), taus});
      for (int i = 0; i < Df; ++i) cells.push_back(fmt(e->value(i)));
      cells.push_back(fmt(e->wall_seconds));
    }
    w.row(cells);
  }
  std::vector<std::string> mean = {"mean", "", "", ""};
  for (int i = 0; i < Df; ++i) mean.push_back(fmt(run.mean(i)));
  mean.push_back("");
  w.row(mean);
}

// ---------------------------------------------------------------------------
// SGD campaign: series x restarts.

struct SgdRow {
  int series = 0;
  std::uint64_t data_seed = 0;
  int restart = 0;
  std::string theta_init;
  std::string theta_hat;
  double theta_hat_first = 0.0;
  int iterations = 0;
  bool converged = false;
  double oracle_mle = std::numeric_limits<double>::quiet_NaN();
  double wall_s = 0.0;
};

inline const std::vector<std::string>& sgd_columns() {
  static const std::vector<std::string> cols = {
      "series", "data_seed", "restart", "theta_init", "theta_hat", "iterations", "converged",
      "oracle_mle", "wall_s"};
  return cols;
}

inline SgdConfig sgd_config(const std::string& model, const Config& cfg) {
  SgdConfig s = sgd_defaults(model);
  s.alpha = cfg.real("alpha", s.alpha);
  s.beta = cfg.real("beta", s.beta);
  s.init_lo = cfg.real("init_lo", s.init_lo);
  s.init_hi = cfg.real("init_hi", s.init_hi);
  s.max_iter = static_cast<int>(cfg.integer("max_iter", s.max_iter));
  s.patience = static_cast<int>(cfg.integer("patience", s.patience));
  s.halving = static_cast<int>(cfg.integer("halving", s.halving));
  return s;
}

/// Score estimate used by one SGD iteration, chosen by the `gradient` key:
/// coupled-sum / single-term (unbiased), psi-zero (level 0 only) or oracle
/// (exact level-L_max score, OU only).
template <DiffusionModel M>
Vec<M::param_dim> sgd_gradient(const M& model, const typename M::Params& theta,
                               const ObservationRecord& data, const Config& cfg,
                               const EstimatorParams& params, const LevelDistribution& dist,
                               const Stream& stream) {
  const std::string g = cfg.str("gradient", cfg.str("estimator", "coupled-sum"));
  const ScoreFunctional<M> f(model, theta);
  if (g == "oracle") return oracle_score(model, theta, dist.l_max(), data);
  if (g == "psi-zero") return psi_zero(model, theta, data, params, stream, f).value;
  if (g == "coupled-sum") {
    return coupled_sum_estimate(model, theta, data, dist, params, stream, f).value;
  }
  if (g == "single-term") {
    return single_term_estimate(model, theta, data, dist, params, stream, f).value;
  }
  throw ConfigError("unknown gradient '" + g + "'");
}

template <DiffusionModel M>
std::vector<SgdRow> sgd_campaign(const M& base_model, const Config& cfg,
                                 std::vector<SgdResult<M::param_dim>>* results = nullptr) {
  const EstimatorParams params = estimator_params(cfg);
  const LevelDistribution dist = level_distribution(cfg);
  const SgdConfig scfg = sgd_config(std::string(M::name), cfg);
  const int series = static_cast<int>(cfg.integer("series", 1));
  const int restarts = static_cast<int>(cfg.integer("restarts", 1));
  if (series < 1 || restarts < 1) throw ConfigError("series and restarts must be >= 1");
  const Stream root(seed_of(cfg));

  std::vector<ObservationRecord> datasets;
  if (cfg.has("data")) {
    if (series != 1) throw ConfigError("a data file fixes a single series; set series=1");
    datasets.push_back(load_data(cfg));
  } else {
    const int l_star = static_cast<int>(cfg.integer("l_star", 6));
    const int horizon = static_cast<int>(cfg.integer("horizon", 10));
    const std::uint64_t data_seed =
        static_cast<std::uint64_t>(cfg.integer("data_seed", cfg.integer("seed", 1)));
    for (int s = 0; s < series; ++s) {
      Stream ss = Stream(data_seed).child(stream_tag::kData, static_cast<std::uint64_t>(s));
      datasets.push_back(
          simulate_data(base_model, base_model.theta_true, l_star, horizon, ss()).observations);
    }
  }
  for (const auto& d : datasets) detail::require_data_level(d, dist);

  const std::size_t jobs = static_cast<std::size_t>(series) * restarts;
  std::vector<SgdRow> rows(jobs);
  std::vector<SgdResult<M::param_dim>> res(jobs);
  parallel_for(jobs, workers_of(cfg), [&](std::size_t job) {
    const int s = static_cast<int>(job) / restarts;
    const int r = static_cast<int>(job) % restarts;
    const ObservationRecord& data = datasets[s];
    const M model = with_start(base_model, data);
    const Stream js = root.child(stream_tag::kSgd, static_cast<std::uint64_t>(s),
                                 static_cast<std::uint64_t>(r));
    const auto theta0 = sample_initial<M::param_dim>(model.theta_true, scfg, js.child(0));
    const auto t0 = std::chrono::steady_clock::now();
    res[job] = sgd<M::param_dim>(theta0, scfg, [&](const typename M::Params& th, int k, int attempt) {
      return sgd_gradient(model, th, data, cfg, params, dist,
                          js.child(1, static_cast<std::uint64_t>(k),
                                   static_cast<std::uint64_t>(attempt)));
    });
    SgdRow row;
    row.wall_s = detail::seconds_since(t0);
    row.series = s;
    row.data_seed = data.seed();
    row.restart = r;
    for (int i : scfg.free) {
      if (!row.theta_init.empty()) {
        row.theta_init += ';';
        row.theta_hat += ';';
      }
      row.theta_init += fmt(theta0(i));
      row.theta_hat += fmt(res[job].theta(i));
    }
    row.theta_hat_first = res[job].theta(scfg.free.front());
    row.iterations = res[job].iterations;
    row.converged = res[job].converged;
    if constexpr (std::is_same_v<M, OrnsteinUhlenbeck>) {
      row.oracle_mle = oracle_mle(model, model.theta_true, scfg.free.front(), dist.l_max(), data,
                                  1e-3, 5.0);
    }
    rows[job] = row;
  });
  if (results) *results = std::move(res);
  return rows;
}

inline void write_sgd_csv(const std::vector<SgdRow>& rows, const std::string& path,
                          const std::string& hash) {
  CsvWriter w(path, sgd_columns(), hash);
  for (const auto& r : rows) {
    w.row({fmt(r.series), fmt(r.data_seed), fmt(r.restart), r.theta_init, r.theta_hat,
           fmt(r.iterations), r.converged ? "1" : "0", fmt(r.oracle_mle), fmt(r.wall_s)});
  }
}

}  // namespace uscore::driver
