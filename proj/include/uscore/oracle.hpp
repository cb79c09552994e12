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

#include <cmath>
#include <functional>
#include <numbers>
#include <span>

namespace uscore {

/// The level-l Euler discretization of a scalar linear-Gaussian model:
///   X_{k+1} = a X_k + q W_k,       W_k ~ N(0, 1)
///   dY_k    = (c0 + c1 X_k) + r V_k,  V_k ~ N(0, 1)
struct LinearGaussianSSM {
  double a = 1.0;
  double q = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;
  double r = 1.0;
  double x0 = 0.0;  // known initial state

  static LinearGaussianSSM from(const OrnsteinUhlenbeck& model, const Vec<2>& theta, int level) {
    const double delta = std::ldexp(1.0, -(level + 3));
    LinearGaussianSSM ssm;
    ssm.a = 1.0 - theta(1) * delta;
    ssm.q = model.sigma * std::sqrt(delta);
    ssm.c0 = theta(0) * model.mu1 * delta;
    ssm.c1 = -theta(0) * delta;
    ssm.r = std::sqrt(delta);
    ssm.x0 = model.x_star()(0);
    return ssm;
  }

  /// Prediction-error decomposition of log p(dY_0, ..., dY_{n-1}).
  double loglik(std::span<const double> increments) const {
    double m = x0;
    double p = 0.0;
    double total = 0.0;
    for (double dy : increments) {
      const double s = c1 * c1 * p + r * r;
      const double e = dy - (c0 + c1 * m);
      total += -0.5 * (std::log(2.0 * std::numbers::pi * s) + e * e / s);
      const double gain = p * c1 / s;
      m += gain * e;
      p -= gain * c1 * p;
      m = a * m;
      p = a * a * p + q * q;
    }
    return total;
  }
};

/// Exact log-likelihood of the level-l discretized OU model given the level-l
/// increments of `data`.
inline double kalman_loglik(const OrnsteinUhlenbeck& model, const Vec<2>& theta, int level,
                            const ObservationRecord& data) {
  return LinearGaussianSSM::from(model, theta, level).loglik(data.level_data(level).increments());
}

template <DiffusionModel M>
double kalman_loglik(const M&, const typename M::Params&, int, const ObservationRecord&) {
  throw UnsupportedModel(std::string(M::name) + ": no Kalman oracle for a non-affine model");
}

/// Central finite-difference gradient of f at x.
template <int D, class Fn>
Vec<D> central_difference(Fn&& f, const Vec<D>& x, double step) {
  if (!(step > 0.0)) throw ConfigError("finite-difference step must be > 0");
  Vec<D> g;
  for (int i = 0; i < D; ++i) {
    Vec<D> up = x;
    Vec<D> dn = x;
    up(i) += step;
    dn(i) -= step;
    g(i) = (f(up) - f(dn)) / (2.0 * step);
  }
  return g;
}

/// Score of the level-l discretized model by central differences of the
/// Kalman log-likelihood.
template <DiffusionModel M>
Vec<M::param_dim> oracle_score(const M& model, const typename M::Params& theta, int level,
                               const ObservationRecord& data, double fd_step = 1e-5) {
  return central_difference<M::param_dim>(
      [&](const typename M::Params& t) { return kalman_loglik(model, t, level, data); }, theta,
      fd_step);
}

/// Golden-section search for a maximizer of a unimodal f on [lo, hi].
inline double golden_section_maximize(const std::function<double(double)>& f, double lo,
                                      double hi, double tol = 1e-8) {
  if (!(hi > lo)) throw ConfigError("golden-section bracket must satisfy lo < hi");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Maximum-likelihood estimate of parameter `index` with the others held at `theta`.
template <DiffusionModel M>
double oracle_mle(const M& model, const typename M::Params& theta, int index, int level,
                  const ObservationRecord& data, double lo, double hi, double tol = 1e-8) {
  return golden_section_maximize(
      [&](double v) {
        typename M::Params t = theta;
        t(index) = v;
        return kalman_loglik(model, t, level, data);
      },
      lo, hi, tol);
}

}  // namespace uscore
