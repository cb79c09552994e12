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

#include <array>
#include <cmath>
#include <concepts>
#include <string_view>

namespace uscore {

/// A continuous-time state-space model
///
///   dY_t = h_theta(X_t) dt + dB_t,   dX_t = b_theta(X_t) dt + sigma(X_t) dW_t
///
/// exposed through compile-time dimensions and evaluators. Gradients are laid
/// out column-per-parameter. Models are immutable value types.
template <class M>
concept DiffusionModel = requires(const M& m, const typename M::Params& theta,
                                  const typename M::State& x, typename M::State& xm) {
  requires M::state_dim >= 1;
  requires M::obs_dim >= 1;
  requires M::param_dim >= 1;
  { M::diagonal_diffusion } -> std::convertible_to<bool>;
  { m.drift(theta, x) } -> std::convertible_to<typename M::State>;
  { m.obs_drift(theta, x) } -> std::convertible_to<typename M::Obs>;
  { m.diffusion(x) } -> std::convertible_to<Mat<M::state_dim, M::state_dim>>;
  { m.grad_drift(theta, x) } -> std::convertible_to<Mat<M::state_dim, M::param_dim>>;
  { m.grad_obs_drift(theta, x) } -> std::convertible_to<Mat<M::obs_dim, M::param_dim>>;
  { m.in_domain(x) } -> std::convertible_to<bool>;
  { m.clamp_to_domain(xm) } -> std::convertible_to<bool>;
  { m.x_star() } -> std::convertible_to<typename M::State>;
};

template <int Dx, int Dy, int Dp>
struct ModelDims {
  static constexpr int state_dim = Dx;
  static constexpr int obs_dim = Dy;
  static constexpr int param_dim = Dp;
  using State = Vec<Dx>;
  using Obs = Vec<Dy>;
  using Params = Vec<Dp>;
};

/// Box constraints on theta.
template <int Dp>
struct ParamBox {
  Vec<Dp> lower = Vec<Dp>::Constant(-std::numeric_limits<double>::infinity());
  Vec<Dp> upper = Vec<Dp>::Constant(std::numeric_limits<double>::infinity());

  bool contains(const Vec<Dp>& theta) const {
    return (theta.array() >= lower.array()).all() && (theta.array() <= upper.array()).all();
  }
};

// ---------------------------------------------------------------------------
// Ornstein-Uhlenbeck: b(x) = -theta2 x, h(x) = theta1 (mu1 - x), sigma const.
// theta = (theta1, theta2).
class OrnsteinUhlenbeck : public ModelDims<1, 1, 2> {
 public:
  static constexpr bool diagonal_diffusion = true;
  static constexpr std::string_view name = "ou";

  double mu1 = 1.0;
  double sigma = 0.5;
  State start = State::Zero();
  Params theta_true = Params(0.75, 0.75);
  double initial_mean = 0.0;  // X_0 ~ N(initial_mean, initial_variance) when simulating data
  double initial_variance = 1.6e-3;

  State drift(const Params& theta, const State& x) const { return State(-theta(1) * x(0)); }
  Obs obs_drift(const Params& theta, const State& x) const { return Obs(theta(0) * (mu1 - x(0))); }
  Mat<1, 1> diffusion(const State&) const { return Mat<1, 1>::Constant(sigma); }
  State diffusion_diag(const State&) const { return State(sigma); }
  Mat<1, 2> grad_drift(const Params&, const State& x) const { return Mat<1, 2>(0.0, -x(0)); }
  Mat<1, 2> grad_obs_drift(const Params&, const State& x) const {
    return Mat<1, 2>(mu1 - x(0), 0.0);
  }
  bool in_domain(const State& x) const { return std::isfinite(x(0)); }
  bool clamp_to_domain(State&) const { return false; }
  State x_star() const { return start; }
  ParamBox<2> theta_domain() const {
    ParamBox<2> box;
    box.lower.setZero();
    return box;
  }
};

// ---------------------------------------------------------------------------
// Geometric Brownian motion: b(x) = theta2 x, h(x) = theta1 (mu1 - log x),
// sigma(x) = sigma x. theta = (theta1, theta2). State must stay positive.
class GeometricBrownian : public ModelDims<1, 1, 2> {
 public:
  static constexpr bool diagonal_diffusion = true;
  static constexpr std::string_view name = "gbm";
  static constexpr double kFloor = 1e-8;

  double mu1 = 1.0;
  double sigma = 0.05;
  State start = State(5.0);
  Params theta_true = Params(0.75, 0.05);
  double initial_mean = 5.0;
  double initial_variance = 1.6e-3;

  State drift(const Params& theta, const State& x) const {
    check(x);
    return State(theta(1) * x(0));
  }
  Obs obs_drift(const Params& theta, const State& x) const {
    check(x);
    return Obs(theta(0) * (mu1 - std::log(x(0))));
  }
  Mat<1, 1> diffusion(const State& x) const { return Mat<1, 1>::Constant(sigma * x(0)); }
  State diffusion_diag(const State& x) const { return State(sigma * x(0)); }
  Mat<1, 2> grad_drift(const Params&, const State& x) const {
    check(x);
    return Mat<1, 2>(0.0, x(0));
  }
  Mat<1, 2> grad_obs_drift(const Params&, const State& x) const {
    check(x);
    return Mat<1, 2>(mu1 - std::log(x(0)), 0.0);
  }
  bool in_domain(const State& x) const { return x(0) > 0.0 && std::isfinite(x(0)); }
  bool clamp_to_domain(State& x) const {
    if (x(0) > 0.0) return false;
    x(0) = kFloor;
    return true;
  }
  State x_star() const { return start; }
  ParamBox<2> theta_domain() const {
    ParamBox<2> box;
    box.lower.setZero();
    return box;
  }

 private:
  void check(const State& x) const {
    if (!(x(0) > 0.0)) {
      throw DomainError("gbm: state must be positive, got x = " + std::to_string(x(0)));
    }
  }
};

// ---------------------------------------------------------------------------
// Two-dimensional linear Lorenz-type system:
//   b(x) = (-S (x1 - 1), x1 - B x2), h(x) = (k x1, k x2), sigma = I.
// Only k is a parameter; S and B are frozen constants.
class Lorenz : public ModelDims<2, 2, 1> {
 public:
  static constexpr bool diagonal_diffusion = true;
  static constexpr std::string_view name = "lorenz";

  double s = 10.0;
  double b = 8.0 / 3.0;
  State start = State::Zero();
  Params theta_true = Params::Constant(2.0);
  State initial_mean = State::Zero();
  double initial_variance = 1.6e-3;

  State drift(const Params&, const State& x) const {
    return State(-s * (x(0) - 1.0), x(0) - b * x(1));
  }
  Obs obs_drift(const Params& theta, const State& x) const { return theta(0) * x; }
  Mat<2, 2> diffusion(const State&) const { return Mat<2, 2>::Identity(); }
  State diffusion_diag(const State&) const { return State::Ones(); }
  Mat<2, 1> grad_drift(const Params&, const State&) const { return Mat<2, 1>::Zero(); }
  Mat<2, 1> grad_obs_drift(const Params&, const State& x) const { return x; }
  bool in_domain(const State& x) const { return x.allFinite(); }
  bool clamp_to_domain(State&) const { return false; }
  State x_star() const { return start; }
  ParamBox<1> theta_domain() const {
    ParamBox<1> box;
    box.lower.setZero();
    return box;
  }
};

static_assert(DiffusionModel<OrnsteinUhlenbeck>);
static_assert(DiffusionModel<GeometricBrownian>);
static_assert(DiffusionModel<Lorenz>);

// ---------------------------------------------------------------------------
// Free functions mirroring the evaluators; they add the domain check for
// models whose evaluators do not check themselves.

template <DiffusionModel M>
void require_domain(const M& model, const typename M::State& x) {
  if (!model.in_domain(x)) {
    throw DomainError(std::string(M::name) + ": state outside model domain at x = " +
                      detail::format_vector(x));
  }
}

template <DiffusionModel M>
typename M::State drift(const M& model, const typename M::Params& theta,
                        const typename M::State& x) {
  require_domain(model, x);
  return model.drift(theta, x);
}

template <DiffusionModel M>
typename M::Obs obs_drift(const M& model, const typename M::Params& theta,
                          const typename M::State& x) {
  require_domain(model, x);
  return model.obs_drift(theta, x);
}

template <DiffusionModel M>
Mat<M::state_dim, M::param_dim> grad_drift(const M& model, const typename M::Params& theta,
                                           const typename M::State& x) {
  require_domain(model, x);
  return model.grad_drift(theta, x);
}

template <DiffusionModel M>
Mat<M::obs_dim, M::param_dim> grad_obs_drift(const M& model, const typename M::Params& theta,
                                             const typename M::State& x) {
  require_domain(model, x);
  return model.grad_obs_drift(theta, x);
}

/// phi_theta(x) = [grad_theta b]^T a(x)^{-1} sigma(x), with a = sigma sigma^T.
/// Computed with a general dense solve; see `phi` for the fast path.
template <DiffusionModel M>
Mat<M::param_dim, M::state_dim> phi_dense(const M& model, const typename M::Params& theta,
                                          const typename M::State& x) {
  constexpr int dx = M::state_dim;
  const Mat<dx, dx> sig = model.diffusion(x);
  const Mat<dx, dx> a = sig * sig.transpose();
  Eigen::FullPivLU<Mat<dx, dx>> lu(a);
  if (!lu.isInvertible()) {
    throw NumericalError(std::string(M::name) + ": a(x) is singular at x = " +
                         detail::format_vector(x));
  }
  const Mat<dx, dx> a_inv_sigma = lu.solve(sig);
  return grad_drift(model, theta, x).transpose() * a_inv_sigma;
}

/// phi_theta(x). For diagonal sigma this reduces to [grad b]^T sigma^{-1}.
template <DiffusionModel M>
Mat<M::param_dim, M::state_dim> phi(const M& model, const typename M::Params& theta,
                                    const typename M::State& x) {
  if constexpr (M::diagonal_diffusion) {
    const typename M::State s = model.diffusion_diag(x);
    if ((s.array() == 0.0).any() || !s.allFinite()) {
      throw NumericalError(std::string(M::name) + ": a(x) is singular at x = " +
                           detail::format_vector(x));
    }
    return grad_drift(model, theta, x).transpose() * s.cwiseInverse().asDiagonal();
  } else {
    return phi_dense(model, theta, x);
  }
}

}  // namespace uscore
