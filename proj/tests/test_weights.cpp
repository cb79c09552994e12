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

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

namespace {

using namespace uscore;

LevelData scaled(const LevelData& d, double alpha) {
  std::vector<double> inc(d.increments().begin(), d.increments().end());
  for (double& v : inc) v *= alpha;
  return LevelData(d.grid(), d.obs_dim(), std::move(inc));
}

TEST(LogG, ZeroObservationDrift) {
  const OrnsteinUhlenbeck ou;
  EXPECT_EQ(log_G(ou, test::flat_theta(), 0, Vec<1>(0.3), Vec<1>(0.2)), 0.0);
}

TEST(LogG, WorkedExample) {
  const OrnsteinUhlenbeck ou;  // h = theta1 (mu1 - x) = 1 at theta1 = 1, x = 0
  EXPECT_NEAR(log_G(ou, Vec<2>(1.0, 0.75), 0, Vec<1>(0.0), Vec<1>(0.1)), 0.0375, 1e-15);
}

TEST(LogG, SumMatchesDirectProduct) {
  const OrnsteinUhlenbeck ou;
  const auto rec = test::ou_data(0, 1, 3);
  const LevelData ld = rec.level_data(0);
  const LatticePath path = forward_path(ou, ou.theta_true, ld.grid(), Stream(1));
  double log_sum = 0.0;
  double product = 1.0;
  for (std::size_t k = 0; k < ld.grid().total_steps(); ++k) {
    const double x = path.at(k);
    const double dy = ld.increment<1>(k)(0);
    log_sum += log_G(ou, ou.theta_true, 0, Vec<1>(x), Vec<1>(dy));
    const double h = 0.75 * (1.0 - x);
    product *= std::exp(h * dy - 0.0625 * h * h);
  }
  EXPECT_NEAR(std::exp(log_sum) / product, 1.0, 1e-12);
}

TEST(UnitLogWeight, ZeroWhenAllTermsVanish) {
  const OrnsteinUhlenbeck ou;
  const auto rec = test::ou_data(1, 2, 4);
  const LatticePath path = forward_path(ou, ou.theta_true, LevelGrid(1, 2), Stream(2));
  EXPECT_EQ(unit_log_weight(ou, test::flat_theta(), 1, path.unit(1), rec.level_data(1), 1), 0.0);
}

TEST(UnitLogWeight, SingleStepEqualsLogG) {
  const OrnsteinUhlenbeck ou;
  const std::vector<double> seg = {0.2, 0.5};
  const std::vector<double> inc = {0.3};
  EXPECT_DOUBLE_EQ(unit_log_weight(ou, ou.theta_true, 1.0, seg, inc),
                   log_G(ou, ou.theta_true, 1.0, Vec<1>(0.2), Vec<1>(0.3)));
}

TEST(UnitLogWeight, MatchesDirectSummation) {
  const Lorenz lm;
  const auto rec = simulate_data(lm, lm.theta_true, 2, 2, 5).observations;
  const LevelData ld = rec.level_data(2);
  const LatticePath path = forward_path(lm, lm.theta_true, ld.grid(), Stream(3));
  const auto seg = path.unit(1);
  const auto inc = ld.unit(1);
  double direct = 0.0;
  const double k = lm.theta_true(0);
  for (int s = 0; s < ld.grid().steps_per_unit(); ++s) {
    for (int j = 0; j < 2; ++j) {
      const double h = k * seg[2 * s + j];
      direct += h * inc[2 * s + j] - 0.5 * ld.grid().delta() * h * h;
    }
  }
  EXPECT_NEAR(unit_log_weight(lm, lm.theta_true, 2, seg, ld, 1), direct, 1e-12);
}

TEST(UnitLogWeight, ShapeMismatchThrows) {
  const OrnsteinUhlenbeck ou;
  const std::vector<double> seg = {0.0, 0.1, 0.2};
  const std::vector<double> inc = {0.3};
  EXPECT_THROW(unit_log_weight(ou, ou.theta_true, 0.125, seg, inc), ShapeError);
}

TEST(Normalize, SumsToOneUnderLargeShifts) {
  const std::vector<double> lw = {1000.0, 999.0, 998.5, -1e4};
  const auto nw = normalize_log_weights(lw);
  double sum = 0.0;
  for (double w : nw.w) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_FALSE(nw.fallback);
  EXPECT_NEAR(nw.w[0] / nw.w[1], std::exp(1.0), 1e-12);
}

TEST(Normalize, DegenerateFallsBackToUniform) {
  const double ninf = -std::numeric_limits<double>::infinity();
  const auto nw = normalize_log_weights(std::vector<double>{ninf, ninf, ninf, ninf});
  EXPECT_TRUE(nw.fallback);
  for (double w : nw.w) EXPECT_EQ(w, 0.25);
}

TEST(Ess, Examples) {
  EXPECT_DOUBLE_EQ(ess(std::vector<double>(8, 0.125)), 8.0);
  EXPECT_DOUBLE_EQ(ess(std::vector<double>{1.0, 0.0, 0.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(ess(std::vector<double>{0.5, 0.5, 0.0, 0.0}), 2.0);
}

TEST(Ess, OverlapForm) {
  const std::vector<double> p = {0.5, 0.5, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(overlap_ess(p, p), 2.0);
  EXPECT_DOUBLE_EQ(overlap_ess(p, std::vector<double>{0.0, 0.0, 0.5, 0.5}), 0.0);
  const std::vector<double> q = {0.25, 0.5, 0.25, 0.0};
  // min = (0.25, 0.5, 0, 0) normalized to (1/3, 2/3) -> ESS = 1 / (1/9 + 4/9)
  EXPECT_NEAR(overlap_ess(p, q), 9.0 / 5.0, 1e-15);
}

TEST(RecoverIncrement, MatchesRecordedNoise) {
  auto check = [](const auto& model, typename std::decay_t<decltype(model)>::State x0, int level) {
    using M = std::decay_t<decltype(model)>;
    constexpr int dx = M::state_dim;
    const NoiseBlock nb = NoiseBlock::sample(level, dx, Stream(8));
    std::vector<double> seg(static_cast<std::size_t>(nb.count() + 1) * dx);
    unit_step(model, model.theta_true, x0, nb, seg);
    for (int k = 0; k < nb.count(); ++k) {
      const typename M::State x = Eigen::Map<const typename M::State>(seg.data() + k * dx);
      const typename M::State y = Eigen::Map<const typename M::State>(seg.data() + (k + 1) * dx);
      const typename M::State w = recover_increment(model, model.theta_true, level, x, y);
      for (int i = 0; i < dx; ++i) ASSERT_NEAR(w(i), nb.increment<dx>(k)(i), 1e-10);
    }
  };
  check(OrnsteinUhlenbeck{}, Vec<1>(0.4), 2);
  check(GeometricBrownian{}, Vec<1>(5.0), 1);
  check(Lorenz{}, Vec<2>(0.5, -0.5), 2);
}

TEST(ScoreLambda, ZeroWhenGradientsVanish) {
  const Lorenz lm;  // grad b = 0 and grad h = x, so a zero path has lambda = 0
  const auto rec = simulate_data(lm, lm.theta_true, 1, 2, 1).observations;
  const LatticePath zero(LevelGrid(1, 2), 2);
  EXPECT_EQ(score_lambda(lm, lm.theta_true, 1, zero, rec)(0), 0.0);
}

TEST(ScoreLambda, OuFastPathMatchesGeneric) {
  const OrnsteinUhlenbeck ou;
  const auto rec = test::ou_data(4, 3, 9);
  for (int l : {0, 2, 4}) {
    const LevelData ld = rec.level_data(l);
    const LatticePath path = forward_path(ou, ou.theta_true, ld.grid(), Stream(10 + l));
    const double delta = ld.grid().delta();
    const double t1 = ou.theta_true(0);
    const double t2 = ou.theta_true(1);
    double fast1 = 0.0;
    double fast2 = 0.0;
    for (std::size_t k = 0; k < ld.grid().total_steps(); ++k) {
      const double x = path.at(k);
      const double xn = path.at(k + 1);
      const double dy = ld.increment<1>(k)(0);
      fast1 += (ou.mu1 - x) * (dy - t1 * (ou.mu1 - x) * delta);
      const double dw = (xn - x + t2 * x * delta) / ou.sigma;
      fast2 += (-x / ou.sigma) * dw;
    }
    const Vec<2> generic = score_lambda(ou, ou.theta_true, l, path, rec);
    const Vec<2> dense = score_lambda(ou, ou.theta_true, l, path, rec, true);
    EXPECT_NEAR(generic(0), fast1, 1e-12 * std::max(1.0, std::abs(fast1)));
    EXPECT_NEAR(generic(1), fast2, 1e-12 * std::max(1.0, std::abs(fast2)));
    EXPECT_NEAR(dense(0), generic(0), 1e-12 * std::max(1.0, std::abs(fast1)));
    EXPECT_NEAR(dense(1), generic(1), 1e-12 * std::max(1.0, std::abs(fast2)));
  }
}

TEST(ScoreLambda, AffineInDataIncrements) {
  const Lorenz lm;
  const auto rec = simulate_data(lm, lm.theta_true, 2, 2, 3).observations;
  const LevelData ld = rec.level_data(2);
  const LatticePath path = forward_path(lm, lm.theta_true, ld.grid(), Stream(4));
  const double base = score_lambda(lm, lm.theta_true, 2, path, scaled(ld, 0.0))(0);
  const double one = score_lambda(lm, lm.theta_true, 2, path, ld)(0) - base;
  for (double alpha : {-2.0, 0.5, 3.0}) {
    const double v = score_lambda(lm, lm.theta_true, 2, path, scaled(ld, alpha))(0) - base;
    EXPECT_NEAR(v, alpha * one, 1e-10 * std::max(1.0, std::abs(alpha * one)));
  }
}

TEST(ScoreLambda, Errors) {
  OrnsteinUhlenbeck ou;
  const auto rec = test::ou_data(2, 1, 1);
  const LatticePath path = forward_path(ou, ou.theta_true, LevelGrid(1, 1), Stream(1));
  EXPECT_THROW(score_lambda(ou, ou.theta_true, 2, path, rec), LevelError);
  EXPECT_THROW(score_lambda(ou, ou.theta_true, 3, LatticePath(LevelGrid(3, 1), 1), rec),
               LevelError);
  ou.sigma = 0.0;
  EXPECT_THROW(score_lambda(ou, ou.theta_true, 1, path, rec), NumericalError);
  EXPECT_THROW(score_lambda(ou, ou.theta_true, 1, path, rec, true), NumericalError);
}

}  // namespace
