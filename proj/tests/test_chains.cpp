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

#include <algorithm>
#include <cmath>
#include <vector>

namespace {

using namespace uscore;

constexpr int kSweeps = 100000;

// Total variation between two samples binned on 20 pooled quantile cells.
double binned_tv(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  const int bins = 20;
  std::vector<double> edges;
  for (int j = 1; j < bins; ++j) edges.push_back(pooled[pooled.size() * j / bins]);
  auto hist = [&](const std::vector<double>& xs) {
    std::vector<double> h(bins, 0.0);
    for (double x : xs) {
      h[std::upper_bound(edges.begin(), edges.end(), x) - edges.begin()] += 1.0 / xs.size();
    }
    return h;
  };
  const auto ha = hist(a);
  const auto hb = hist(b);
  double tv = 0.0;
  for (int j = 0; j < bins; ++j) tv += std::abs(ha[j] - hb[j]);
  return 0.5 * tv;
}

double endpoint(const LatticePath& p) { return p.at(p.size() - 1); }

// Midpoint of the path; sensitive to the smoothing law in the interior.
double midpoint(const LatticePath& p) { return p.at(p.size() / 2); }

struct Fixture {
  OrnsteinUhlenbeck model;
  ObservationRecord data;
  Fixture(int l_star, int horizon, std::uint64_t seed)
      : data(test::ou_data(l_star, horizon, seed)) {
    model = with_start(OrnsteinUhlenbeck{}, data);
  }
  LatticePath prior(int level, std::uint64_t seed) const {
    return forward_path(model, model.theta_true, LevelGrid(level, data.horizon()), Stream(seed));
  }
};

ChainOptions n_particles(int n, bool always = false) {
  ChainOptions o;
  o.n_particles = n;
  o.always_resample = always;
  return o;
}

// ---------------------------------------------------------------------------
// cpf_kernel

TEST(CpfKernel, FlatWeightsPickReferenceHalfTheTime) {
  const Fixture fx(2, 3, 1);
  const LatticePath ref = fx.prior(0, 5);
  int hits = 0;
  const int n = 20000;
  for (int r = 0; r < n; ++r) {
    const auto out = cpf_kernel(fx.model, test::flat_theta(), 0, fx.data, ref, n_particles(2),
                                Stream(10).child(r));
    if (out.path == ref) {
      ++hits;
    } else {
      // The free particle descends from itself only (no resampling under flat weights).
      ASSERT_NE(out.path.at(1), ref.at(1));
    }
  }
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.5, 3.0 * std::sqrt(0.25 / n));
}

TEST(CpfKernel, Deterministic) {
  const Fixture fx(3, 4, 2);
  const LatticePath ref = fx.prior(2, 6);
  const Stream s(77);
  const auto a = cpf_kernel(fx.model, fx.model.theta_true, 2, fx.data, ref, n_particles(16), s);
  const auto b = cpf_kernel(fx.model, fx.model.theta_true, 2, fx.data, ref, n_particles(16), s);
  EXPECT_TRUE(a.path == b.path);
  EXPECT_EQ(a.value, b.value);
}

TEST(CpfKernel, Errors) {
  const Fixture fx(2, 2, 3);
  const LatticePath ref = fx.prior(1, 1);
  EXPECT_THROW(cpf_kernel(fx.model, fx.model.theta_true, 1, fx.data, ref, n_particles(1), Stream(1)),
               ConfigError);
  EXPECT_THROW(cpf_kernel(fx.model, fx.model.theta_true, 0, fx.data, ref, n_particles(4), Stream(1)),
               ShapeError);
  EXPECT_THROW(cpf_kernel(fx.model, fx.model.theta_true, 3, fx.data, fx.prior(3, 1), n_particles(4),
                          Stream(1)),
               LevelError);
}

TEST(CpfKernel, AlwaysResampleCountsEveryInterval) {
  const Fixture fx(2, 5, 4);
  const LatticePath ref = fx.prior(1, 2);
  Diagnostics diag;
  cpf_kernel(fx.model, fx.model.theta_true, 1, fx.data, ref, n_particles(8, true), Stream(3), &diag);
  EXPECT_EQ(diag.resample_events, 4u);
  Diagnostics flat;
  cpf_kernel(fx.model, test::flat_theta(), 1, fx.data, ref, n_particles(8), Stream(3), &flat);
  EXPECT_EQ(flat.resample_events, 0u);
}

TEST(CpfKernel, RaoBlackwellMatchesSelectedTrajectory) {
  // E[sum_s F(s) lambda(u_s)] = E[lambda(selected)] under one sweep.
  const Fixture fx(2, 3, 5);
  const LatticePath ref = fx.prior(0, 7);
  const LevelData ld = fx.data.level_data(0);
  std::vector<double> diff;
  for (int r = 0; r < kSweeps; ++r) {
    const auto out = cpf_kernel(fx.model, fx.model.theta_true, 0, fx.data, ref, n_particles(4),
                                Stream(20).child(r));
    const Vec<2> sel = score_lambda(fx.model, fx.model.theta_true, 0, out.path, ld);
    diff.push_back(out.value(0) - sel(0));
  }
  const auto ms = test::mean_se(diff);
  EXPECT_LE(std::abs(ms.mean), 3.0 * ms.se);
}

TEST(CpfKernel, AccumulatedFunctionalEqualsPathFunctional) {
  // With N = 2 and a single dominant particle, the RB value is the lambda of
  // the trajectory holding all the weight.
  const Fixture fx(3, 3, 6);
  const LatticePath ref = fx.prior(1, 8);
  const auto out = cpf_kernel(fx.model, fx.model.theta_true, 1, fx.data, ref, n_particles(2),
                              Stream(9));
  const LevelData ld = fx.data.level_data(1);
  const Vec<2> direct = score_lambda(fx.model, fx.model.theta_true, 1, out.path, ld);
  const Vec<2> from_cloud = evaluate_functional(ScoreFunctional(fx.model, fx.model.theta_true), ld,
                                                out.path);
  EXPECT_NEAR(direct(0), from_cloud(0), 1e-10);
  EXPECT_NEAR(direct(1), from_cloud(1), 1e-10);
}

// ---------------------------------------------------------------------------
// rao_blackwell_terminal

TEST(RaoBlackwell, IdenticalTrajectoriesUniformWeights) {
  const OrnsteinUhlenbeck ou;
  const auto data = test::ou_data(1, 2, 7);
  const LevelData ld = data.level_data(1);
  const LatticePath path = forward_path(ou, ou.theta_true, ld.grid(), Stream(3));
  const ScoreFunctional f(ou, ou.theta_true);
  ParticleCloud<1, 2> cloud(ld.grid(), 3);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 3; ++i) {
      const auto u = path.unit(k);
      std::copy(u.begin(), u.end(), cloud.segment(k, i).begin());
      cloud.ancestors(k)[i] = i;
    }
    cloud.reweight(ou, test::flat_theta(), f, ld, k, k == 0, nullptr);
  }
  const Vec<2> lam = score_lambda(ou, ou.theta_true, 1, path, ld);
  const Vec<2> rb = rao_blackwell_terminal(cloud);
  EXPECT_NEAR(rb(0), lam(0), 1e-12);
  EXPECT_NEAR(rb(1), lam(1), 1e-12);
}

TEST(RaoBlackwell, DegenerateWeightsPickFirst) {
  // Particle 0 sits at mu1 (h = 0, log G = 0); particle 1 is far off with a
  // log-weight below -1e3, so the normalized weights are (1, 0).
  OrnsteinUhlenbeck ou;
  const Vec<2> theta(1.0, 0.75);
  const LevelGrid g(0, 1);
  std::vector<double> inc(8, -1.0);
  const LevelData ld(g, 1, inc);
  const ScoreFunctional f(ou, theta);
  ParticleCloud<1, 2> cloud(g, 2);
  std::vector<double> a(9, ou.mu1), b(9, -1000.0);
  std::copy(a.begin(), a.end(), cloud.segment(0, 0).begin());
  std::copy(b.begin(), b.end(), cloud.segment(0, 1).begin());
  cloud.reweight(ou, theta, f, ld, 0, true, nullptr);
  ASSERT_EQ(cloud.weights()[0], 1.0);
  ASSERT_EQ(cloud.weights()[1], 0.0);
  const Vec<2> expect = score_lambda_unit(ou, theta, g.delta(), a, inc);
  const Vec<2> rb = rao_blackwell_terminal(cloud);
  EXPECT_DOUBLE_EQ(rb(0), expect(0));
  EXPECT_DOUBLE_EQ(rb(1), expect(1));
}

// ---------------------------------------------------------------------------
// ccpf_kernel

TEST(CcpfKernel, DiagonalIsAbsorbing) {
  const Fixture fx(2, 3, 8);
  const LatticePath x = fx.prior(1, 1);
  ChainPair<2> state{x, x, true, Vec<2>::Zero(), Vec<2>::Zero()};
  for (int k = 0; k < 20; ++k) {
    state = ccpf_kernel(fx.model, fx.model.theta_true, 1, fx.data, state, n_particles(8),
                        Stream(30).child(k));
    ASSERT_TRUE(state.met);
    ASSERT_TRUE(state.x == state.x_ring);
    ASSERT_EQ(state.value, state.value_ring);
  }
}

TEST(CcpfKernel, IdenticalReferencesMeetImmediately) {
  const Fixture fx(2, 3, 9);
  const LatticePath x = fx.prior(0, 2);
  const ChainPair<2> state{x, x, false, Vec<2>::Zero(), Vec<2>::Zero()};
  const auto out = ccpf_kernel(fx.model, test::flat_theta(), 0, fx.data, state, n_particles(4),
                               Stream(31));
  EXPECT_TRUE(out.met);
}

TEST(CcpfKernel, MarginalsAreCpfKernels) {
  const Fixture fx(2, 3, 10);
  const LatticePath x = fx.prior(0, 3);
  const LatticePath y = fx.prior(0, 4);
  const ChainPair<2> state{x, y, false, Vec<2>::Zero(), Vec<2>::Zero()};
  std::vector<double> cx, cy, sx, sy, cxm, sxm;
  for (int r = 0; r < kSweeps; ++r) {
    const auto out = ccpf_kernel(fx.model, fx.model.theta_true, 0, fx.data, state, n_particles(2),
                                 Stream(40).child(r));
    cx.push_back(endpoint(out.x));
    cy.push_back(endpoint(out.x_ring));
    cxm.push_back(midpoint(out.x));
    const auto a = cpf_kernel(fx.model, fx.model.theta_true, 0, fx.data, x, n_particles(2),
                              Stream(41).child(r));
    const auto b = cpf_kernel(fx.model, fx.model.theta_true, 0, fx.data, y, n_particles(2),
                              Stream(42).child(r));
    sx.push_back(endpoint(a.path));
    sy.push_back(endpoint(b.path));
    sxm.push_back(midpoint(a.path));
  }
  EXPECT_LE(binned_tv(cx, sx), 0.02);
  EXPECT_LE(binned_tv(cy, sy), 0.02);
  EXPECT_LE(binned_tv(cxm, sxm), 0.02);
  EXPECT_GT(test::ks_two_sample_p(cx, sx), 0.01);
  EXPECT_GT(test::ks_two_sample_p(cy, sy), 0.01);
}

TEST(CcpfKernel, MeetingIsMonotone) {
  const Fixture fx(3, 4, 11);
  auto state = init_mu_l(fx.model, fx.model.theta_true, 1, fx.data, n_particles(16), Stream(50));
  bool seen = state.met;
  for (int k = 0; k < 100; ++k) {
    state = ccpf_kernel(fx.model, fx.model.theta_true, 1, fx.data, state, n_particles(16),
                        Stream(51).child(k));
    if (seen) ASSERT_TRUE(state.met);
    seen = seen || state.met;
    ASSERT_EQ(state.met, state.x == state.x_ring);
  }
  EXPECT_TRUE(seen);
}

// ---------------------------------------------------------------------------
// ccpf_cross_level_kernel

TEST(CrossLevelKernel, LevelZeroRejected) {
  const Fixture fx(2, 2, 12);
  const LatticePath x = fx.prior(0, 1);
  EXPECT_THROW(ccpf_cross_level_kernel(fx.model, fx.model.theta_true, 0, fx.data, x, x,
                                       n_particles(4), Stream(1)),
               LevelError);
}

TEST(CrossLevelKernel, FlatWeightsCoupleIndices) {
  // Uniform weights on both levels: every resampling index pair agrees, so the
  // fine and coarse outputs are the fine/coarse coupled Euler paths of one
  // genealogy and stay within discretization error of each other.
  const Fixture fx(3, 4, 13);
  const auto [fine, coarse] =
      forward_fine_coarse(fx.model, fx.model.theta_true, LevelGrid(2, 4), Stream(60));
  for (int r = 0; r < 500; ++r) {
    const auto out = ccpf_cross_level_kernel(fx.model, test::flat_theta(), 2, fx.data, fine, coarse,
                                             n_particles(8, true), Stream(61).child(r));
    double gap = 0.0;
    for (std::size_t k = 0; k < out.coarse.size(); ++k) {
      gap = std::max(gap, std::abs(out.coarse.at(k) - out.fine.at(2 * k)));
    }
    ASSERT_LT(gap, 0.1);
  }
}

TEST(CrossLevelKernel, MarginalsAreCpfKernels) {
  const Fixture fx(2, 3, 14);
  const auto [fine, coarse] =
      forward_fine_coarse(fx.model, fx.model.theta_true, LevelGrid(1, 3), Stream(62));
  std::vector<double> cf, cc, sf, sc;
  for (int r = 0; r < kSweeps; ++r) {
    const auto out = ccpf_cross_level_kernel(fx.model, fx.model.theta_true, 1, fx.data, fine,
                                             coarse, n_particles(2), Stream(63).child(r));
    cf.push_back(endpoint(out.fine));
    cc.push_back(endpoint(out.coarse));
    sf.push_back(endpoint(cpf_kernel(fx.model, fx.model.theta_true, 1, fx.data, fine,
                                     n_particles(2), Stream(64).child(r))
                              .path));
    sc.push_back(endpoint(cpf_kernel(fx.model, fx.model.theta_true, 0, fx.data, coarse,
                                     n_particles(2), Stream(65).child(r))
                              .path));
  }
  EXPECT_LE(binned_tv(cf, sf), 0.02);
  EXPECT_LE(binned_tv(cc, sc), 0.02);
  EXPECT_GT(test::ks_two_sample_p(cf, sf), 0.01);
  EXPECT_GT(test::ks_two_sample_p(cc, sc), 0.01);
}

TEST(CrossLevelKernel, Deterministic) {
  const Fixture fx(3, 3, 15);
  const auto [fine, coarse] =
      forward_fine_coarse(fx.model, fx.model.theta_true, LevelGrid(2, 3), Stream(66));
  const auto a = ccpf_cross_level_kernel(fx.model, fx.model.theta_true, 2, fx.data, fine, coarse,
                                         n_particles(8), Stream(67));
  const auto b = ccpf_cross_level_kernel(fx.model, fx.model.theta_true, 2, fx.data, fine, coarse,
                                         n_particles(8), Stream(67));
  EXPECT_TRUE(a.fine == b.fine);
  EXPECT_TRUE(a.coarse == b.coarse);
}

// ---------------------------------------------------------------------------
// cccpf_kernel

TEST(CccpfKernel, LevelZeroRejected) {
  const Fixture fx(2, 2, 16);
  const LatticePath x = fx.prior(0, 1);
  const ChainQuad<2> q{x, x, x, x, true, true, {}, {}, {}, {}};
  EXPECT_THROW(cccpf_kernel(fx.model, fx.model.theta_true, 0, fx.data, q, n_particles(4), Stream(1)),
               LevelError);
}

TEST(CccpfKernel, PairwiseEqualitiesPreserved) {
  const Fixture fx(3, 3, 17);
  const auto [fine, coarse] =
      forward_fine_coarse(fx.model, fx.model.theta_true, LevelGrid(2, 3), Stream(70));
  ChainQuad<2> q{fine, fine, coarse, coarse, true, true, {}, {}, {}, {}};
  for (int k = 0; k < 30; ++k) {
    q = cccpf_kernel(fx.model, fx.model.theta_true, 2, fx.data, q, n_particles(8),
                     Stream(71).child(k));
    ASSERT_TRUE(q.fine == q.fine_ring);
    ASSERT_TRUE(q.coarse == q.coarse_ring);
    ASSERT_TRUE(q.met_fine && q.met_coarse);
  }
}

TEST(CccpfKernel, MetFlagsMonotone) {
  const Fixture fx(3, 4, 18);
  auto q = init_mu_l_lm1(fx.model, fx.model.theta_true, 1, fx.data, n_particles(16), Stream(72));
  bool seen_f = q.met_fine;
  bool seen_c = q.met_coarse;
  for (int k = 0; k < 100; ++k) {
    q = cccpf_kernel(fx.model, fx.model.theta_true, 1, fx.data, q, n_particles(16),
                     Stream(73).child(k));
    if (seen_f) ASSERT_TRUE(q.met_fine);
    if (seen_c) ASSERT_TRUE(q.met_coarse);
    seen_f = seen_f || q.met_fine;
    seen_c = seen_c || q.met_coarse;
  }
  EXPECT_TRUE(seen_f);
  EXPECT_TRUE(seen_c);
}

TEST(CccpfKernel, FinePairMarginalIsCcpf) {
  const Fixture fx(2, 3, 19);
  const auto [fine, coarse] =
      forward_fine_coarse(fx.model, fx.model.theta_true, LevelGrid(1, 3), Stream(74));
  const auto [fine_r, coarse_r] =
      forward_fine_coarse(fx.model, fx.model.theta_true, LevelGrid(1, 3), Stream(75));
  const ChainQuad<2> q{fine, fine_r, coarse, coarse_r, false, false, {}, {}, {}, {}};
  const ChainPair<2> pf{fine, fine_r, false, {}, {}};
  const ChainPair<2> pc{coarse, coarse_r, false, {}, {}};
  std::vector<double> qf, qfr, qc, sf, sfr, sc;
  for (int r = 0; r < kSweeps; ++r) {
    const auto out = cccpf_kernel(fx.model, fx.model.theta_true, 1, fx.data, q, n_particles(2),
                                  Stream(76).child(r));
    qf.push_back(endpoint(out.fine));
    qfr.push_back(endpoint(out.fine) - endpoint(out.fine_ring));
    qc.push_back(endpoint(out.coarse) - endpoint(out.coarse_ring));
    const auto a = ccpf_kernel(fx.model, fx.model.theta_true, 1, fx.data, pf, n_particles(2),
                               Stream(77).child(r));
    const auto b = ccpf_kernel(fx.model, fx.model.theta_true, 0, fx.data, pc, n_particles(2),
                               Stream(78).child(r));
    sf.push_back(endpoint(a.x));
    sfr.push_back(endpoint(a.x) - endpoint(a.x_ring));
    sc.push_back(endpoint(b.x) - endpoint(b.x_ring));
  }
  EXPECT_LE(binned_tv(qf, sf), 0.02);
  EXPECT_LE(binned_tv(qfr, sfr), 0.02);
  EXPECT_LE(binned_tv(qc, sc), 0.02);
  EXPECT_GT(test::ks_two_sample_p(qf, sf), 0.01);
}

// ---------------------------------------------------------------------------
// Initial distributions

TEST(InitMuL, DistinctAtStartAndPriorMarginal) {
  const Fixture fx(2, 3, 20);
  std::vector<double> ring, x, prior;
  for (int r = 0; r < 20000; ++r) {
    const auto p = init_mu_l(fx.model, fx.model.theta_true, 0, fx.data, n_particles(4),
                             Stream(80).child(r));
    ASSERT_FALSE(p.met);
    ASSERT_FALSE(p.x == p.x_ring);
    ring.push_back(endpoint(p.x_ring));
    prior.push_back(endpoint(fx.prior(0, 1000000 + r)));
  }
  EXPECT_GT(test::ks_two_sample_p(ring, prior), 0.01);
}

TEST(InitMuL, FlatWeightsBothComponentsArePrior) {
  const Fixture fx(2, 3, 21);
  std::vector<double> x, prior;
  for (int r = 0; r < 20000; ++r) {
    const auto p = init_mu_l(fx.model, test::flat_theta(), 1, fx.data, n_particles(4),
                             Stream(81).child(r));
    x.push_back(endpoint(p.x));
    prior.push_back(endpoint(
        forward_path(fx.model, test::flat_theta(), LevelGrid(1, 3), Stream(82).child(r))));
  }
  EXPECT_GT(test::ks_two_sample_p(x, prior), 0.01);
}

TEST(InitMuL, Deterministic) {
  const Fixture fx(2, 3, 22);
  const auto a = init_mu_l(fx.model, fx.model.theta_true, 1, fx.data, n_particles(8), Stream(83));
  const auto b = init_mu_l(fx.model, fx.model.theta_true, 1, fx.data, n_particles(8), Stream(83));
  EXPECT_TRUE(a.x == b.x);
  EXPECT_TRUE(a.x_ring == b.x_ring);
  EXPECT_THROW(init_mu_l(fx.model, fx.model.theta_true, 1, fx.data, n_particles(1), Stream(83)),
               ConfigError);
}

TEST(InitMuLLm1, DistinctAndCoarsePriorMarginal) {
  const Fixture fx(2, 3, 23);
  std::vector<double> coarse, coarse_ring, prior, prior2;
  for (int r = 0; r < 20000; ++r) {
    const auto q = init_mu_l_lm1(fx.model, test::flat_theta(), 1, fx.data, n_particles(4),
                                 Stream(84).child(r));
    ASSERT_FALSE(q.met_fine);
    ASSERT_FALSE(q.met_coarse);
    ASSERT_FALSE(q.fine == q.fine_ring);
    ASSERT_FALSE(q.coarse == q.coarse_ring);
    coarse.push_back(endpoint(q.coarse));
    coarse_ring.push_back(endpoint(q.coarse_ring));
    prior.push_back(endpoint(
        forward_path(fx.model, test::flat_theta(), LevelGrid(0, 3), Stream(85).child(r))));
    prior2.push_back(endpoint(
        forward_path(fx.model, test::flat_theta(), LevelGrid(0, 3), Stream(86).child(r))));
  }
  EXPECT_GT(test::ks_two_sample_p(coarse_ring, prior), 0.01);
  EXPECT_GT(test::ks_two_sample_p(coarse, prior2), 0.01);
}

TEST(InitMuLLm1, DeterministicAndLevelChecked) {
  const Fixture fx(2, 3, 24);
  const auto a = init_mu_l_lm1(fx.model, fx.model.theta_true, 2, fx.data, n_particles(8), Stream(87));
  const auto b = init_mu_l_lm1(fx.model, fx.model.theta_true, 2, fx.data, n_particles(8), Stream(87));
  EXPECT_TRUE(a.fine == b.fine && a.fine_ring == b.fine_ring);
  EXPECT_TRUE(a.coarse == b.coarse && a.coarse_ring == b.coarse_ring);
  EXPECT_THROW(init_mu_l_lm1(fx.model, fx.model.theta_true, 0, fx.data, n_particles(8), Stream(1)),
               LevelError);
}

}  // namespace
