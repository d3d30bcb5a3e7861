// Copyright 2026 The inpo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "inpo/preference.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <gtest/gtest.h>

#include "inpo/errors.h"
#include "support/gradcheck.h"
#include "support/probes.h"

namespace inpo {
namespace {

using testing::ConstantProbe;
using testing::FunctionProbe;
using testing::LinearProbe;
using testing::TinyArchitecture;

constexpr double kLn2 = std::numbers::ln2;

PreferencePair RandomPair(Rng& rng, int num_conditions) {
  PreferencePair p;
  p.condition = Condition{rng.UniformInt(0, num_conditions - 1)};
  p.winner = rng.NormalVec(2);
  p.loser = rng.NormalVec(2);
  return p;
}

DeltaStrategy StrategyByIndex(int i) {
  switch (i % 3) {
    case 0:
      return DeltaStrategy::Inversion(1 + i % 7, 0.5 * (i % 3));
    case 1:
      return DeltaStrategy::Gaussian();
    default:
      return DeltaStrategy::FixedPoint(50, 1e-10, 0.8);
  }
}

TEST(DeltaStrategyTest, ValidationAndNames) {
  EXPECT_NO_THROW(DeltaStrategy::Inversion(1).Validate());
  EXPECT_THROW(DeltaStrategy::Inversion(0).Validate(), InvalidArgument);
  EXPECT_THROW(DeltaStrategy::FixedPoint(0, 1e-8).Validate(), InvalidArgument);
  EXPECT_THROW(DeltaStrategy::FixedPoint(10, 0.0).Validate(), InvalidArgument);
  EXPECT_THROW(DeltaStrategy::FixedPoint(10, 1e-8, 0.0).Validate(), InvalidArgument);
  EXPECT_THROW(DeltaStrategy::FixedPoint(10, 1e-8, 1.5).Validate(), InvalidArgument);
  for (auto kind : {DeltaStrategy::Kind::kInversion, DeltaStrategy::Kind::kGaussian,
                    DeltaStrategy::Kind::kFixedPoint}) {
    EXPECT_EQ(ParseDeltaKind(ToString(kind)), kind);
  }
  EXPECT_THROW(ParseDeltaKind("newton"), InvalidArgument);
}

TEST(NegLogSigmoidTest, ValuesAndExtremes) {
  EXPECT_DOUBLE_EQ(NegLogSigmoid(0.0), kLn2);
  for (double x : {-30.0, -3.0, -0.2, 0.7, 5.0, 30.0}) {
    EXPECT_NEAR(NegLogSigmoid(x), std::log(1.0 + std::exp(-x)), 1e-14 * (1.0 + std::abs(x)));
  }
  EXPECT_DOUBLE_EQ(NegLogSigmoid(-1e4), 1e4);
  EXPECT_EQ(NegLogSigmoid(1e4), 0.0);
  EXPECT_TRUE(std::isfinite(NegLogSigmoid(-1e300)));
}

TEST(SftLossTest, ExactNoiseProbeGivesZero) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  Rng rng(1);
  std::vector<LabeledSample> batch;
  std::vector<int> t;
  Batch eps(5, 2);
  for (int i = 0; i < 5; ++i) {
    batch.push_back({rng.NormalVec(2), Condition{0}});
    t.push_back(rng.UniformInt(1, 1000));
    eps.row(i) = rng.NormalVec(2).transpose();
  }
  // Recovers the generating noise from the latent, given the clean sample.
  const FunctionProbe oracle(2, [&](const Vec& x, double tt, Condition) -> Vec {
    const int ti = static_cast<int>(tt);
    for (size_t i = 0; i < batch.size(); ++i) {
      const Vec cand = (x - s.SqrtAlphaBar(ti) * batch[i].x0) / s.SqrtOneMinusAlphaBar(ti);
      if ((cand - eps.row(i).transpose()).norm() < 1e-9 && t[i] == ti) return cand;
    }
    return Vec::Constant(2, 1e3);
  });
  EXPECT_LT(SftLoss(oracle, s, batch, t, eps), 1e-20);
}

TEST(SftLossTest, ZeroProbeMatchesChiSquareMean) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  Rng rng(2);
  const int n = 20000;
  std::vector<LabeledSample> batch(n, {Vec::Zero(2), Condition{0}});
  std::vector<int> t(n);
  for (int& ti : t) ti = rng.UniformInt(1, 1000);
  const Batch eps = rng.NormalBatch(n, 2);
  const double loss = SftLoss(ConstantProbe(Vec::Zero(2)), s, batch, t, eps);
  // Var of a chi-square with 2 degrees of freedom is 4.
  EXPECT_NEAR(loss, 2.0, 3.0 * 2.0 / std::sqrt(n));
}

TEST(SftLossTest, ZeroNoiseDrawsGiveNoiselessPrediction) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000, LossWeighting::kSnr);
  Eigen::MatrixXd a(2, 2);
  a << 0.3, -0.1, 0.2, 0.5;
  const auto probe = LinearProbe(a);
  Rng rng(3);
  std::vector<LabeledSample> batch;
  std::vector<int> t;
  double want = 0.0;
  for (int i = 0; i < 8; ++i) {
    batch.push_back({rng.NormalVec(2), Condition{0}});
    t.push_back(rng.UniformInt(1, 1000));
    const Vec pred = a * (s.SqrtAlphaBar(t.back()) * batch.back().x0);
    want += s.Sigma(t.back()) * s.Sigma(t.back()) * pred.squaredNorm() / 8.0;
  }
  EXPECT_NEAR(SftLoss(probe, s, batch, t, Batch::Zero(8, 2)), want, 1e-12 * want);
}

TEST(SftLossTest, RejectsEmptyOrIncongruent) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 100);
  const auto zero = ConstantProbe(Vec::Zero(2));
  EXPECT_THROW(SftLoss(zero, s, {}, {}, Batch(0, 2)), InvalidArgument);
  std::vector<LabeledSample> one = {{Vec::Zero(2), Condition{0}}};
  std::vector<int> t = {1, 2};
  EXPECT_THROW(SftLoss(zero, s, one, t, Batch::Zero(1, 2)), InvalidArgument);
}

TEST(FixedPointTest, ConstantProbeConvergesToConstant) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  Vec v(2);
  v << 0.4, -1.2;
  Rng rng(4);
  const FixedPointResult r =
      SolveDeltaFixedPoint(ConstantProbe(v), s, Vec::Ones(2), 500, Condition{0},
                           DeltaStrategy::FixedPoint(10, 1e-12), rng);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.delta, v);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.residual, 0.0);
}

TEST(FixedPointTest, ContractiveLinearProbeMatchesLinearSolve) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  Eigen::MatrixXd a(2, 2);
  a << 0.1, 0.03, -0.02, 0.08;
  const auto probe = LinearProbe(a);
  Rng rng(5);
  for (double damping : {1.0, 0.6}) {
    for (int t : {1, 300, 999}) {
      const Vec x0 = rng.NormalVec(2);
      const FixedPointResult r = SolveDeltaFixedPoint(probe, s, x0, t, Condition{0},
                                                      DeltaStrategy::FixedPoint(200, 1e-13, damping), rng);
      // delta = A (sqrt(abar) x0 + sqrt(1 - abar) delta)
      const Eigen::MatrixXd m =
          Eigen::MatrixXd::Identity(2, 2) - s.SqrtOneMinusAlphaBar(t) * a;
      const Vec exact = m.fullPivLu().solve(s.SqrtAlphaBar(t) * a * x0);
      EXPECT_TRUE(r.converged);
      EXPECT_LE(r.residual, 1e-13);
      EXPECT_LE((r.delta - exact).norm(), 1e-12);
    }
  }
}

TEST(FixedPointTest, SingleIterationReportsNotConverged) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  const auto probe = LinearProbe(0.5 * Eigen::MatrixXd::Identity(2, 2));
  Rng rng(6);
  const DeltaStrategy cfg = DeltaStrategy::FixedPoint(1, 1e-8);
  const FixedPointResult r = SolveDeltaFixedPoint(probe, s, Vec::Ones(2), 700, Condition{0}, cfg, rng);
  EXPECT_FALSE(r.converged);
  EXPECT_GT(r.residual, cfg.tol);
  EXPECT_EQ(r.iterations, 1);
}

TEST(FixedPointTest, DivergenceIsNumericError) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  const auto probe = LinearProbe(1e200 * Eigen::MatrixXd::Identity(2, 2));
  Rng rng(7);
  EXPECT_THROW(SolveDeltaFixedPoint(probe, s, Vec::Ones(2), 700, Condition{0},
                                    DeltaStrategy::FixedPoint(100, 1e-8), rng),
               NumericError);
  EXPECT_THROW(SolveDeltaFixedPoint(probe, s, Vec::Ones(2), 0, Condition{0},
                                    DeltaStrategy::FixedPoint(100, 1e-8), rng),
               InvalidArgument);
}

TEST(MakeTargetsTest, Branches) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  const auto zero = ConstantProbe(Vec::Zero(2));
  Vec x0(2);
  x0 << 1.0, -0.5;
  const int t = 400;
  Rng rng(8);

  const Targets inv = MakeTargets(zero, s, x0, t, Condition{0}, DeltaStrategy::Inversion(10), rng);
  EXPECT_LE((inv.x_t - s.SqrtAlphaBar(t) * x0).norm(), 1e-15);
  EXPECT_TRUE(inv.tau.isZero(0.0));

  Rng a(9), b(9);
  const Targets g = MakeTargets(zero, s, x0, t, Condition{0}, DeltaStrategy::Gaussian(), a);
  const Vec eps = b.NormalVec(2);
  EXPECT_EQ(g.tau, eps);
  EXPECT_EQ(g.x_t, ForwardDiffuse(s, x0, t, eps));
  EXPECT_EQ(ForwardDiffuse(s, x0, t, Vec::Zero(2)), s.SqrtAlphaBar(t) * x0);

  Eigen::MatrixXd m(2, 2);
  m << 0.1, 0.0, 0.05, 0.1;
  const auto lin = LinearProbe(m);
  const Targets fp =
      MakeTargets(lin, s, x0, t, Condition{0}, DeltaStrategy::FixedPoint(200, 1e-13), rng);
  EXPECT_LE((fp.x_t - ReconstructXt(s, x0, fp.tau, t)).norm(), 1e-15);
  EXPECT_LE((fp.tau - m * fp.x_t).norm(), 1e-12);
  EXPECT_THROW(MakeTargets(zero, s, x0, 0, Condition{0}, DeltaStrategy::Gaussian(), rng),
               InvalidArgument);
}

TEST(InpoLossTest, IdentityAtReference) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000, LossWeighting::kSnr);
  const Architecture arch = TinyArchitecture();
  Rng rng(10);
  const double betas[] = {0.0, 2000.0, 5000.0};
  for (int i = 0; i < 30; ++i) {
    const DenoiserParams p = InitDenoiser(arch, 1000 + i);
    const DenoiserParams copy = p;
    const MlpDenoiser theta(p), ref(copy);
    const PreferencePair pair = RandomPair(rng, 3);
    const LossBreakdown lb = InpoLoss(theta, ref, s, pair, rng.UniformInt(1, 1000),
                                      StrategyByIndex(i), betas[i % 3], rng);
    EXPECT_NEAR(lb.total, kLn2, 1e-9);
    EXPECT_EQ(lb.sigmoid_arg, 0.0);
    EXPECT_EQ(lb.term_w_theta, lb.term_w_ref);
    EXPECT_EQ(lb.term_l_theta, lb.term_l_ref);
  }
}

TEST(InpoLossTest, GradientAtReferenceIsFinite) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  const DenoiserParams p = InitDenoiser(TinyArchitecture(), 11);
  const MlpDenoiser ref(p);
  Rng rng(12);
  std::vector<PreferencePair> pairs = {RandomPair(rng, 3), RandomPair(rng, 3)};
  const std::vector<int> t = {100, 900};
  const PairBatchTargets tg = MakePairTargets(ref, s, pairs, t, DeltaStrategy::Inversion(10), rng);
  const BatchLoss bl = PreferenceLossAndGradient(p, ref, s, tg, 2000.0);
  EXPECT_NEAR(bl.loss.value, kLn2, 1e-9);
  EXPECT_TRUE(bl.loss.gradient.allFinite());
  EXPECT_EQ(bl.mean_sigmoid_arg, 0.0);
}

TEST(InpoLossTest, ZeroBetaIsLn2ForAnyParams) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  const DenoiserParams a = InitDenoiser(TinyArchitecture(), 13);
  const DenoiserParams b = InitDenoiser(TinyArchitecture(), 14);
  const MlpDenoiser theta(a), ref(b);
  Rng rng(15);
  for (int i = 0; i < 6; ++i) {
    const LossBreakdown lb =
        InpoLoss(theta, ref, s, RandomPair(rng, 3), 250, StrategyByIndex(i), 0.0, rng);
    EXPECT_EQ(lb.total, kLn2);
    EXPECT_NE(lb.term_w_theta, lb.term_w_ref);
  }
  EXPECT_THROW(InpoLoss(theta, ref, s, RandomPair(rng, 3), 250, DeltaStrategy::Gaussian(), -1.0, rng),
               InvalidArgument);
}

TEST(InpoLossTest, GaussianStrategyReducesToDiffusionDpo) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kLinearBeta, 1000, LossWeighting::kSnr);
  const Architecture arch = TinyArchitecture();
  Rng setup(16);
  for (int i = 0; i < 100; ++i) {
    const DenoiserParams a = InitDenoiser(arch, 2 * i);
    const DenoiserParams b = InitDenoiser(arch, 2 * i + 1);
    const MlpDenoiser theta(a), ref(b);
    const PreferencePair pair = RandomPair(setup, 3);
    const int t = setup.UniformInt(1, 1000);
    const double beta = 1.0 + 100.0 * setup.Uniform();
    Rng inpo_rng(5000 + i), dpo_rng(5000 + i);
    const LossBreakdown inpo = InpoLoss(theta, ref, s, pair, t, DeltaStrategy::Gaussian(), beta, inpo_rng);
    const Vec eps_w = dpo_rng.NormalVec(2);
    const Vec eps_l = dpo_rng.NormalVec(2);
    const LossBreakdown dpo = DpoDiffusionLoss(theta, ref, s, pair, t, eps_w, eps_l, beta);
    EXPECT_NEAR(inpo.total, dpo.total, 1e-12);
    EXPECT_EQ(inpo.sigmoid_arg, dpo.sigmoid_arg);
  }
}

TEST(DpoLossTest, SymmetricPairCancels) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  const DenoiserParams a = InitDenoiser(TinyArchitecture(), 17);
  const DenoiserParams b = InitDenoiser(TinyArchitecture(), 18);
  const MlpDenoiser theta(a), ref(b);
  Rng rng(19);
  PreferencePair pair = RandomPair(rng, 3);
  pair.loser = pair.winner;
  const Vec eps = rng.NormalVec(2);
  EXPECT_EQ(DpoDiffusionLoss(theta, ref, s, pair, 600, eps, eps, 2000.0).total, kLn2);
  EXPECT_NEAR(DpoDiffusionLoss(theta, theta, s, RandomPair(rng, 3), 600, eps, rng.NormalVec(2), 2000.0)
                  .total,
              kLn2, 1e-12);
  EXPECT_THROW(DpoDiffusionLoss(theta, ref, s, pair, 0, eps, eps, 1.0), InvalidArgument);
}

TEST(PreferenceLossTest, MonotoneInWinnerEvidence) {
  Rng rng(20);
  const Vec tau_w = rng.NormalVec(2), tau_l = rng.NormalVec(2);
  const Vec ref_w = rng.NormalVec(2), ref_l = rng.NormalVec(2);
  const Vec th_l = rng.NormalVec(2);
  Vec th_w = tau_w + Vec::Constant(2, 1.0);
  LossBreakdown prev = PreferenceLossFromPredictions(tau_w, th_w, ref_w, tau_l, th_l, ref_l, 0.7, 1.0, 5);
  for (int k = 0; k < 10; ++k) {
    th_w = tau_w + 0.8 * (th_w - tau_w);
    const LossBreakdown cur =
        PreferenceLossFromPredictions(tau_w, th_w, ref_w, tau_l, th_l, ref_l, 0.7, 1.0, 5);
    EXPECT_LT(cur.term_w_theta, prev.term_w_theta);
    EXPECT_GT(cur.sigmoid_arg, prev.sigmoid_arg);
    EXPECT_LT(cur.total, prev.total);
    EXPECT_NEAR(cur.total, std::log1p(std::exp(-cur.sigmoid_arg)), 1e-12);
    EXPECT_GT(cur.total, 0.0);
    prev = cur;
  }
}

TEST(PreferenceLossTest, StableForLargeArguments) {
  const Vec zero = Vec::Zero(2);
  const Vec one = Vec::Ones(2);
  // sigmoid_arg = -beta * (||1||^2 - 0) = -2 beta
  const LossBreakdown neg = PreferenceLossFromPredictions(zero, one, zero, zero, zero, zero, 5e3, 1.0, 1);
  EXPECT_EQ(neg.sigmoid_arg, -1e4);
  EXPECT_DOUBLE_EQ(neg.total, 1e4);
  const LossBreakdown pos = PreferenceLossFromPredictions(zero, zero, one, zero, zero, zero, 5e3, 1.0, 1);
  EXPECT_EQ(pos.sigmoid_arg, 1e4);
  EXPECT_TRUE(std::isfinite(pos.total));
  EXPECT_GE(pos.total, 0.0);
}

TEST(PreferenceLossTest, NamesNonFiniteTerm) {
  const Vec zero = Vec::Zero(2);
  Vec bad = Vec::Zero(2);
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  try {
    PreferenceLossFromPredictions(zero, zero, zero, zero, bad, zero, 1.0, 1.0, 3);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("term_l_theta"), std::string::npos) << e.what();
  }
}

TEST(ImplicitRewardTest, ZeroAtReferenceAndLinearInBeta) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  const DenoiserParams a = InitDenoiser(TinyArchitecture(), 21);
  const DenoiserParams b = InitDenoiser(TinyArchitecture(), 22);
  const MlpDenoiser theta(a), ref(b);
  Rng rng(23);
  const Vec x0 = rng.NormalVec(2);
  const std::vector<int> t = {10, 200, 750};
  for (int i = 0; i < 3; ++i) {
    const DeltaStrategy st = StrategyByIndex(i);
    EXPECT_EQ(ImplicitReward(ref, ref, s, x0, Condition{1}, t, st, 2000.0, rng), 0.0);
    Rng r1(24), r2(24);
    const double once = ImplicitReward(theta, ref, s, x0, Condition{1}, t, st, 1000.0, r1);
    const double twice = ImplicitReward(theta, ref, s, x0, Condition{1}, t, st, 2000.0, r2);
    EXPECT_NE(once, 0.0);
    EXPECT_DOUBLE_EQ(twice, 2.0 * once);
  }
  EXPECT_THROW(ImplicitReward(theta, ref, s, x0, Condition{1}, {}, DeltaStrategy::Gaussian(), 1.0, rng),
               InvalidArgument);
}

TEST(PairTargetsTest, GaussianMatchesDpoTargetsBitwise) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  const DenoiserParams p = InitDenoiser(TinyArchitecture(), 25);
  const MlpDenoiser ref(p);
  Rng setup(26);
  std::vector<PreferencePair> pairs;
  std::vector<int> t;
  for (int i = 0; i < 6; ++i) {
    pairs.push_back(RandomPair(setup, 3));
    t.push_back(setup.UniformInt(1, 1000));
  }
  Rng a(27), b(27);
  const PairBatchTargets g = MakePairTargets(ref, s, pairs, t, DeltaStrategy::Gaussian(), a);
  const PairBatchTargets d = MakeDpoPairTargets(s, pairs, t, b);
  EXPECT_EQ(g.x_t, d.x_t);
  EXPECT_EQ(g.tau, d.tau);
  EXPECT_EQ(g.t, d.t);
  EXPECT_EQ(g.c, d.c);
  EXPECT_THROW(MakeDpoPairTargets(s, pairs, std::vector<int>{1}, b), InvalidArgument);
}

TEST(PairTargetsTest, BatchedLossMatchesPerPairLoss) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000, LossWeighting::kSnr);
  const DenoiserParams a = InitDenoiser(TinyArchitecture(), 28);
  const DenoiserParams b = InitDenoiser(TinyArchitecture(), 29);
  const MlpDenoiser theta(a), ref(b);
  Rng setup(30);
  std::vector<PreferencePair> pairs;
  std::vector<int> t;
  for (int i = 0; i < 5; ++i) {
    pairs.push_back(RandomPair(setup, 3));
    t.push_back(setup.UniformInt(1, 1000));
  }
  const double beta = 3.0;
  for (int k = 0; k < 3; ++k) {
    const DeltaStrategy st = StrategyByIndex(k);
    Rng batch_rng(31), single_rng(31);
    const PairBatchTargets tg = MakePairTargets(ref, s, pairs, t, st, batch_rng);
    const BatchLoss bl = PreferenceLossAndGradient(a, ref, s, tg, beta);
    double want = 0.0, want_arg = 0.0;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const LossBreakdown lb = InpoLoss(theta, ref, s, pairs[i], t[i], st, beta, single_rng);
      want += lb.total / 5.0;
      want_arg += lb.sigmoid_arg / 5.0;
    }
    EXPECT_NEAR(bl.loss.value, want, 1e-10 * (1.0 + want)) << ToString(st.kind);
    EXPECT_NEAR(bl.mean_sigmoid_arg, want_arg, 1e-10 * (1.0 + std::abs(want_arg)));
  }
}

TEST(PairTargetsTest, NonFiniteTermNamesPairAndTimestep) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  const DenoiserParams p = InitDenoiser(TinyArchitecture(), 32);
  const MlpDenoiser ref(p);
  Rng rng(33);
  std::vector<PreferencePair> pairs = {RandomPair(rng, 3), RandomPair(rng, 3)};
  const std::vector<int> t = {40, 41};
  PairBatchTargets tg = MakeDpoPairTargets(s, pairs, t, rng);
  tg.tau(3, 0) = 1e200;
  try {
    PreferenceLossAndGradient(p, ref, s, tg, 1.0);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("pair 1 t=41"), std::string::npos) << msg;
  }
}

// Independent recomputation of each batch loss from single-row predictions.
double PreferenceObjective(const Eigen::VectorXd& v, const Architecture& arch,
                           const NoiseModel& ref, const NoiseSchedule& s,
                           const PairBatchTargets& tg, double beta) {
  const DenoiserParams q{arch, v};
  double total = 0.0;
  const Eigen::Index pairs = tg.x_t.rows() / 2;
  for (Eigen::Index i = 0; i < pairs; ++i) {
    const int t = static_cast<int>(tg.t[2 * i]);
    const Condition c = tg.c[2 * i];
    const Vec xw = tg.x_t.row(2 * i).transpose(), xl = tg.x_t.row(2 * i + 1).transpose();
    total += PreferenceLossFromPredictions(
                 tg.tau.row(2 * i).transpose(), PredictNoise(q, xw, t, c, 1.0),
                 PredictNoise(ref, xw, t, c, 1.0), tg.tau.row(2 * i + 1).transpose(),
                 PredictNoise(q, xl, t, c, 1.0), PredictNoise(ref, xl, t, c, 1.0), beta,
                 s.LossWeight(t), t)
                 .total;
  }
  return total / static_cast<double>(pairs);
}

class GradientCheck : public ::testing::TestWithParam<const char*> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  const std::string which = GetParam();
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000, LossWeighting::kSnr);
  const Architecture arch = TinyArchitecture();
  ASSERT_LE(arch.ParameterCount(), 1000);
  Rng rng(34);
  for (int draw = 0; draw < 20; ++draw) {
    const DenoiserParams theta = InitDenoiser(arch, 300 + draw);
    const DenoiserParams ref_p = InitDenoiser(arch, 400 + draw);
    const MlpDenoiser ref(ref_p);
    std::vector<PreferencePair> pairs = {RandomPair(rng, 3), RandomPair(rng, 3), RandomPair(rng, 3)};
    std::vector<int> t(3);
    // Moderate timesteps keep snr weights O(1).
    for (int& ti : t) ti = rng.UniformInt(1, 700);
    const double beta = 0.5 + rng.Uniform();

    Eigen::VectorXd analytic, fd;
    if (which == "sft") {
      Batch x0(3, 2);
      std::vector<Condition> c(3);
      for (int i = 0; i < 3; ++i) {
        x0.row(i) = pairs[i].winner.transpose();
        c[i] = pairs[i].condition;
      }
      const Batch eps = rng.NormalBatch(3, 2);
      analytic = SftLossAndGradient(theta, s, x0, t, c, eps).loss.gradient;
      std::vector<LabeledSample> batch;
      for (int i = 0; i < 3; ++i) batch.push_back({pairs[i].winner, c[i]});
      fd = testing::CentralDifference(
          [&](const Eigen::VectorXd& v) {
            const DenoiserParams q{arch, v};
            return SftLoss(MlpDenoiser(q), s, batch, t, eps);
          },
          theta.values, 1e-4);
    } else {
      const PairBatchTargets tg =
          which == "dpo" ? MakeDpoPairTargets(s, pairs, t, rng)
                         : MakePairTargets(ref, s, pairs, t, DeltaStrategy::Inversion(10), rng);
      analytic = PreferenceLossAndGradient(theta, ref, s, tg, beta).loss.gradient;
      fd = testing::CentralDifference(
          [&](const Eigen::VectorXd& v) { return PreferenceObjective(v, arch, ref, s, tg, beta); },
          theta.values, 1e-4);
    }
    EXPECT_LT(testing::GradientRelativeError(analytic, fd), 1e-4) << which << " draw " << draw;
  }
}

INSTANTIATE_TEST_SUITE_P(Losses, GradientCheck, ::testing::Values("sft", "dpo", "inpo"));

TEST(SftLossAndGradientTest, ValueMatchesSftLoss) {
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  const DenoiserParams p = InitDenoiser(TinyArchitecture(), 35);
  Rng rng(36);
  Batch x0 = rng.NormalBatch(4, 2);
  const std::vector<int> t = {1, 10, 500, 1000};
  const std::vector<Condition> c = {Condition{0}, Condition{2}, Condition::Null(), Condition{1}};
  const Batch eps = rng.NormalBatch(4, 2);
  std::vector<LabeledSample> batch;
  for (int i = 0; i < 4; ++i) batch.push_back({x0.row(i).transpose(), c[i]});
  EXPECT_NEAR(SftLossAndGradient(p, s, x0, t, c, eps).loss.value,
              SftLoss(MlpDenoiser(p), s, batch, t, eps), 1e-12);
  EXPECT_THROW(SftLossAndGradient(p, s, Batch(0, 2), {}, {}, Batch(0, 2)), InvalidArgument);
}

}  // namespace
}  // namespace inpo
