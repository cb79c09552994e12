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

#include <cmath>
#include <string_view>
#include <vector>

namespace uscore::driver {

/// Log-parameterized stochastic gradient ascent on the log-likelihood:
///   xi = log theta,  xi <- xi + alpha * phi(theta) * exp(xi),
/// with alpha halved every `halving` iterations.
struct SgdConfig {
  double alpha = 5e-2;
  double beta = 1e-3;      // stop tolerance on |theta_{k+1} - theta_k|
  int halving = 50;
  int patience = 10;       // consecutive small steps needed to stop
  int max_iter = 1000;
  double init_lo = 0.25;   // theta_init ~ U[init_lo, init_hi] per free component
  double init_hi = 1.25;
  std::vector<int> free = {0};

  void validate(int param_dim) const {
    if (alpha < 0.0) throw ConfigError("sgd: alpha must be >= 0");
    if (!(beta > 0.0)) throw ConfigError("sgd: beta must be > 0");
    if (halving < 1 || patience < 1 || max_iter < 1) {
      throw ConfigError("sgd: halving, patience and max_iter must be >= 1");
    }
    if (!(init_lo > 0.0 && init_hi >= init_lo)) {
      throw ConfigError("sgd: need 0 < init_lo <= init_hi");
    }
    if (free.empty()) throw ConfigError("sgd: no free parameters");
    for (int i : free) {
      if (i < 0 || i >= param_dim) throw ConfigError("sgd: free parameter index out of range");
    }
  }
};

/// Table defaults per model.
inline SgdConfig sgd_defaults(std::string_view model) {
  SgdConfig cfg;
  if (model == "ou") {
    cfg.alpha = 5e-2;
    cfg.beta = 1e-3;
    cfg.init_lo = 0.25;
    cfg.init_hi = 1.25;
  } else if (model == "gbm") {
    cfg.alpha = 2.5e-2;
    cfg.beta = 1e-3;
    cfg.init_lo = 0.25;
    cfg.init_hi = 1.25;
  } else if (model == "lorenz") {
    cfg.alpha = 1.5625e-3;
    cfg.beta = 0.05;
    cfg.init_lo = 0.5;
    cfg.init_hi = 3.5;
  } else {
    throw ConfigError("unknown model '" + std::string(model) + "'");
  }
  return cfg;
}

template <int Dp>
struct SgdStep {
  int k = 0;
  double alpha = 0.0;
  Vec<Dp> theta;     // iterate before the update
  Vec<Dp> gradient;
};

template <int Dp>
struct SgdResult {
  Vec<Dp> theta;
  int iterations = 0;
  bool converged = false;  // stopped by the patience rule rather than the cap
  std::vector<SgdStep<Dp>> trace;
};

template <int Dp>
Vec<Dp> sample_initial(const Vec<Dp>& base, const SgdConfig& cfg, Stream stream) {
  Vec<Dp> theta = base;
  for (int i : cfg.free) theta(i) = cfg.init_lo + (cfg.init_hi - cfg.init_lo) * stream.uniform();
  return theta;
}

/// `gradient(theta, k, attempt)` returns the score estimate used at iteration
/// k. A NonMeetingError is retried once with attempt = 1, then propagated.
template <int Dp, class Gradient>
SgdResult<Dp> sgd(const Vec<Dp>& theta0, const SgdConfig& cfg, Gradient&& gradient) {
  cfg.validate(Dp);
  for (int i : cfg.free) {
    if (!(theta0(i) > 0.0)) throw ConfigError("sgd: free parameters must start positive");
  }
  SgdResult<Dp> out;
  Vec<Dp> theta = theta0;
  double alpha = cfg.alpha;
  int calm = 0;
  int k = 0;
  while (k < cfg.max_iter) {
    if (k > 0 && k % cfg.halving == 0) alpha /= 2.0;
    Vec<Dp> g;
    try {
      g = gradient(theta, k, 0);
    } catch (const NonMeetingError&) {
      g = gradient(theta, k, 1);
    }
    out.trace.push_back({k, alpha, theta, g});
    Vec<Dp> next = theta;
    double step = 0.0;
    for (int i : cfg.free) {
      const double xi = std::log(theta(i));
      next(i) = std::exp(xi + alpha * g(i) * std::exp(xi));
      step = std::max(step, std::abs(next(i) - theta(i)));
    }
    theta = next;
    ++k;
    calm = step < cfg.beta ? calm + 1 : 0;
    if (calm >= cfg.patience) {
      out.converged = true;
      break;
    }
  }
  out.theta = theta;
  out.iterations = k;
  return out;
}

}  // namespace uscore::driver
