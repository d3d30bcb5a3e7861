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
#include <string>

#include "inpo/errors.h"
#include "inpo/sampler.h"

namespace inpo {
namespace {

void CheckFinite(double value, const std::string& name) {
  if (!std::isfinite(value)) throw NumericError("non-finite loss term: " + name);
}

// d/dx of -log sigmoid(x), i.e. -sigmoid(-x).
double NegLogSigmoidGrad(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(x));
}

Batch ConditionalPrediction(const NoiseModel& model, const Vec& x, int t, Condition c) {
  const Batch row = x.transpose();
  const double tt = t;
  return model.PredictRaw(row, std::span<const double>(&tt, 1), std::span<const Condition>(&c, 1));
}

Vec Predict1(const NoiseModel& model, const Vec& x, int t, Condition c) {
  return ConditionalPrediction(model, x, t, c).row(0).transpose();
}

}  // namespace

DeltaStrategy DeltaStrategy::Inversion(int n, double guidance_w_inv) {
  DeltaStrategy d;
  d.kind = Kind::kInversion;
  d.n = n;
  d.guidance_w_inv = guidance_w_inv;
  return d;
}

DeltaStrategy DeltaStrategy::Gaussian() {
  DeltaStrategy d;
  d.kind = Kind::kGaussian;
  return d;
}

DeltaStrategy DeltaStrategy::FixedPoint(int max_iters, double tol, double damping) {
  DeltaStrategy d;
  d.kind = Kind::kFixedPoint;
  d.max_iters = max_iters;
  d.tol = tol;
  d.damping = damping;
  return d;
}

void DeltaStrategy::Validate() const {
  if (n < 1) throw InvalidArgument("delta strategy: n must be >= 1");
  if (!std::isfinite(guidance_w_inv)) throw InvalidArgument("delta strategy: w_inv not finite");
  if (max_iters < 1) throw InvalidArgument("delta strategy: max_iters must be >= 1");
  if (!(tol > 0.0)) throw InvalidArgument("delta strategy: tol must be > 0");
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw InvalidArgument("delta strategy: damping must lie in (0, 1]");
  }
}

std::string_view ToString(DeltaStrategy::Kind kind) {
  switch (kind) {
    case DeltaStrategy::Kind::kInversion:
      return "inversion";
    case DeltaStrategy::Kind::kGaussian:
      return "gaussian";
    case DeltaStrategy::Kind::kFixedPoint:
      return "fixed_point";
  }
  return "unknown";
}

DeltaStrategy::Kind ParseDeltaKind(std::string_view name) {
  if (name == "inversion") return DeltaStrategy::Kind::kInversion;
  if (name == "gaussian") return DeltaStrategy::Kind::kGaussian;
  if (name == "fixed_point") return DeltaStrategy::Kind::kFixedPoint;
  throw InvalidArgument("unknown delta strategy '" + std::string(name) + "'");
}

double NegLogSigmoid(double x) {
  if (x >= 0.0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

double SftLoss(const NoiseModel& model, const NoiseSchedule& s,
               std::span<const LabeledSample> batch, std::span<const int> t_draws,
               const Batch& eps_draws) {
  if (batch.empty()) throw InvalidArgument("sft_loss: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (t_draws.size() != batch.size() || eps_draws.rows() != n || eps_draws.cols() != model.dim()) {
    throw InvalidArgument("sft_loss: draws are not congruent with the batch");
  }
  Batch x_t(n, model.dim());
  std::vector<double> t(batch.size());
  std::vector<Condition> c(batch.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec eps = eps_draws.row(i).transpose();
    x_t.row(i) = ForwardDiffuse(s, batch[i].x0, t_draws[i], eps).transpose();
    t[i] = t_draws[i];
    c[i] = batch[i].c;
  }
  const Batch pred = model.PredictRaw(x_t, t, c);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    total += s.LossWeight(t_draws[i]) * (pred.row(i) - eps_draws.row(i)).squaredNorm();
  }
  return total / static_cast<double>(n);
}

FixedPointResult SolveDeltaFixedPoint(const NoiseModel& model, const NoiseSchedule& s,
                                      const Vec& x0_t, int t, Condition c,
                                      const DeltaStrategy& cfg, Rng& rng) {
  cfg.Validate();
  s.CheckTimestep(t);
  if (t < 1) throw InvalidArgument("solve_delta_fixed_point: t must be >= 1");
  const double a = s.SqrtAlphaBar(t);
  const double b = s.SqrtOneMinusAlphaBar(t);
  FixedPointResult result;
  result.delta = rng.NormalVec(static_cast<int>(x0_t.size()));
  for (int it = 0;; ++it) {
    const Vec x_t = a * x0_t + b * result.delta;
    const Vec e = Predict1(model, x_t, t, c);
    result.residual = (result.delta - e).norm();
    if (!std::isfinite(result.residual)) {
      throw NumericError("fixed-point iterate went non-finite at iteration " +
                         std::to_string(it));
    }
    result.iterations = it;
    if (result.residual <= cfg.tol) {
      result.converged = true;
      return result;
    }
    if (it == cfg.max_iters) return result;
    result.delta = (1.0 - cfg.damping) * result.delta + cfg.damping * e;
  }
}

Targets MakeTargets(const NoiseModel& model, const NoiseSchedule& s, const Vec& x0, int t,
                    Condition c, const DeltaStrategy& strategy, Rng& rng) {
  s.CheckTimestep(t);
  if (t < 1) throw InvalidArgument("make_targets: t must be >= 1");
  switch (strategy.kind) {
    case DeltaStrategy::Kind::kInversion: {
      InversionResult inv = DdimInvert(model, s, x0, t, strategy.n, c, strategy.guidance_w_inv);
      return {std::move(inv.x_t), std::move(inv.tau_t)};
    }
    case DeltaStrategy::Kind::kGaussian: {
      Vec eps = rng.NormalVec(static_cast<int>(x0.size()));
      return {ForwardDiffuse(s, x0, t, eps), std::move(eps)};
    }
    case DeltaStrategy::Kind::kFixedPoint: {
      FixedPointResult fp = SolveDeltaFixedPoint(model, s, x0, t, c, strategy, rng);
      return {ReconstructXt(s, x0, fp.delta, t), std::move(fp.delta)};
    }
  }
  throw InvalidArgument("make_targets: unknown strategy");
}

LossBreakdown PreferenceLossFromPredictions(const Vec& tau_w, const Vec& eps_theta_w,
                                            const Vec& eps_ref_w, const Vec& tau_l,
                                            const Vec& eps_theta_l, const Vec& eps_ref_l,
                                            double beta, double weight, int t) {
  LossBreakdown out;
  out.t = t;
  out.term_w_theta = (tau_w - eps_theta_w).squaredNorm();
  out.term_w_ref = (tau_w - eps_ref_w).squaredNorm();
  out.term_l_theta = (tau_l - eps_theta_l).squaredNorm();
  out.term_l_ref = (tau_l - eps_ref_l).squaredNorm();
  CheckFinite(out.term_w_theta, "term_w_theta");
  CheckFinite(out.term_w_ref, "term_w_ref");
  CheckFinite(out.term_l_theta, "term_l_theta");
  CheckFinite(out.term_l_ref, "term_l_ref");
  out.sigmoid_arg = -beta * weight *
                    ((out.term_w_theta - out.term_w_ref) - (out.term_l_theta - out.term_l_ref));
  CheckFinite(out.sigmoid_arg, "sigmoid_arg");
  out.total = NegLogSigmoid(out.sigmoid_arg);
  return out;
}

LossBreakdown InpoLoss(const NoiseModel& theta, const NoiseModel& ref, const NoiseSchedule& s,
                       const PreferencePair& pair, int t, const DeltaStrategy& strategy,
                       double beta, Rng& rng) {
  if (!(beta >= 0.0)) throw InvalidArgument("inpo_loss: beta must be >= 0");
  strategy.Validate();
  const Targets w = MakeTargets(ref, s, pair.winner, t, pair.condition, strategy, rng);
  const Targets l = MakeTargets(ref, s, pair.loser, t, pair.condition, strategy, rng);
  return PreferenceLossFromPredictions(
      w.tau, Predict1(theta, w.x_t, t, pair.condition), Predict1(ref, w.x_t, t, pair.condition),
      l.tau, Predict1(theta, l.x_t, t, pair.condition), Predict1(ref, l.x_t, t, pair.condition),
      beta, s.LossWeight(t), t);
}

LossBreakdown DpoDiffusionLoss(const NoiseModel& theta, const NoiseModel& ref,
                               const NoiseSchedule& s, const PreferencePair& pair, int t,
                               const Vec& eps_w, const Vec& eps_l, double beta) {
  if (!(beta >= 0.0)) throw InvalidArgument("dpo_diffusion_loss: beta must be >= 0");
  s.CheckTimestep(t);
  if (t < 1) throw InvalidArgument("dpo_diffusion_loss: t must be >= 1");
  const Vec x_w = ForwardDiffuse(s, pair.winner, t, eps_w);
  const Vec x_l = ForwardDiffuse(s, pair.loser, t, eps_l);
  return PreferenceLossFromPredictions(
      eps_w, Predict1(theta, x_w, t, pair.condition), Predict1(ref, x_w, t, pair.condition),
      eps_l, Predict1(theta, x_l, t, pair.condition), Predict1(ref, x_l, t, pair.condition),
      beta, s.LossWeight(t), t);
}

double ImplicitReward(const NoiseModel& theta, const NoiseModel& ref, const NoiseSchedule& s,
                      const Vec& x0, Condition c, std::span<const int> t_draws,
                      const DeltaStrategy& strategy, double beta, Rng& rng) {
  if (t_draws.empty()) throw InvalidArgument("implicit_reward: no timestep draws");
  strategy.Validate();
  double total = 0.0;
  for (int t : t_draws) {
    const Targets tg = MakeTargets(ref, s, x0, t, c, strategy, rng);
    const double theta_term = (tg.tau - Predict1(theta, tg.x_t, t, c)).squaredNorm();
    const double ref_term = (tg.tau - Predict1(ref, tg.x_t, t, c)).squaredNorm();
    total += -beta * s.LossWeight(t) * (theta_term - ref_term);
  }
  return total / static_cast<double>(t_draws.size());
}

namespace {

PairBatchTargets AllocateTargets(std::span<const PreferencePair> pairs, std::span<const int> t) {
  if (pairs.empty()) throw InvalidArgument("pair targets: no pairs");
  if (t.size() != pairs.size()) throw InvalidArgument("pair targets: one t per pair required");
  const auto dim = pairs.front().winner.size();
  PairBatchTargets out;
  out.x_t.resize(2 * static_cast<Eigen::Index>(pairs.size()), dim);
  out.tau.resize(out.x_t.rows(), dim);
  out.t.resize(2 * pairs.size());
  out.c.resize(2 * pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    out.t[2 * i] = out.t[2 * i + 1] = t[i];
    out.c[2 * i] = out.c[2 * i + 1] = pairs[i].condition;
  }
  return out;
}

}  // namespace

PairBatchTargets MakePairTargets(const NoiseModel& ref, const NoiseSchedule& s,
                                 std::span<const PreferencePair> pairs, std::span<const int> t,
                                 const DeltaStrategy& strategy, Rng& rng) {
  strategy.Validate();
  PairBatchTargets out = AllocateTargets(pairs, t);
  if (strategy.kind == DeltaStrategy::Kind::kInversion) {
    Batch x0(out.x_t.rows(), out.x_t.cols());
    std::vector<int> rows_t(out.t.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
      x0.row(2 * i) = pairs[i].winner.transpose();
      x0.row(2 * i + 1) = pairs[i].loser.transpose();
      rows_t[2 * i] = rows_t[2 * i + 1] = t[i];
    }
    InversionBatch inv =
        DdimInvertBatch(ref, s, x0, rows_t, strategy.n, out.c, strategy.guidance_w_inv);
    out.x_t = std::move(inv.x_t);
    out.tau = std::move(inv.tau_t);
    return out;
  }
  for (size_t i = 0; i < pairs.size(); ++i) {
    const Targets w = MakeTargets(ref, s, pairs[i].winner, t[i], pairs[i].condition, strategy, rng);
    const Targets l = MakeTargets(ref, s, pairs[i].loser, t[i], pairs[i].condition, strategy, rng);
    out.x_t.row(2 * i) = w.x_t.transpose();
    out.tau.row(2 * i) = w.tau.transpose();
    out.x_t.row(2 * i + 1) = l.x_t.transpose();
    out.tau.row(2 * i + 1) = l.tau.transpose();
  }
  return out;
}

PairBatchTargets MakeDpoPairTargets(const NoiseSchedule& s, std::span<const PreferencePair> pairs,
                                    std::span<const int> t, Rng& rng) {
  PairBatchTargets out = AllocateTargets(pairs, t);
  const int dim = static_cast<int>(out.x_t.cols());
  for (size_t i = 0; i < pairs.size(); ++i) {
    const Vec eps_w = rng.NormalVec(dim);
    const Vec eps_l = rng.NormalVec(dim);
    out.x_t.row(2 * i) = ForwardDiffuse(s, pairs[i].winner, t[i], eps_w).transpose();
    out.x_t.row(2 * i + 1) = ForwardDiffuse(s, pairs[i].loser, t[i], eps_l).transpose();
    out.tau.row(2 * i) = eps_w.transpose();
    out.tau.row(2 * i + 1) = eps_l.transpose();
  }
  return out;
}

BatchLoss PreferenceLossAndGradient(const DenoiserParams& theta, const NoiseModel& ref,
                                    const NoiseSchedule& s, const PairBatchTargets& targets,
                                    double beta) {
  if (!(beta >= 0.0)) throw InvalidArgument("preference loss: beta must be >= 0");
  const Eigen::Index rows = targets.x_t.rows();
  if (rows == 0 || rows % 2 != 0 || targets.tau.rows() != rows ||
      static_cast<Eigen::Index>(targets.t.size()) != rows) {
    throw InvalidArgument("preference loss: malformed pair targets");
  }
  const Batch eps_ref = ref.PredictRaw(targets.x_t, targets.t, targets.c);
  const Eigen::Index num_pairs = rows / 2;
  double sum_arg = 0.0;

  OutputLoss loss;
  loss.inputs = targets.x_t;
  loss.t = targets.t;
  loss.c = targets.c;
  loss.evaluate = [&](const Batch& eps_theta) {
    LossEvaluation eval;
    eval.d_outputs = Batch::Zero(rows, eps_theta.cols());
    const double inv_pairs = 1.0 / static_cast<double>(num_pairs);
    sum_arg = 0.0;
    bool finite = true;
    for (Eigen::Index i = 0; i < num_pairs; ++i) {
      const Eigen::Index w = 2 * i;
      const Eigen::Index l = 2 * i + 1;
      const int t = static_cast<int>(targets.t[w]);
      const double scale = beta * s.LossWeight(t);
      const auto res_w = targets.tau.row(w) - eps_theta.row(w);
      const auto res_l = targets.tau.row(l) - eps_theta.row(l);
      const double tw_theta = res_w.squaredNorm();
      const double tw_ref = (targets.tau.row(w) - eps_ref.row(w)).squaredNorm();
      const double tl_theta = res_l.squaredNorm();
      const double tl_ref = (targets.tau.row(l) - eps_ref.row(l)).squaredNorm();
      const double arg = -scale * ((tw_theta - tw_ref) - (tl_theta - tl_ref));
      const double value = NegLogSigmoid(arg);
      if (!std::isfinite(value)) {
        finite = false;
        const std::string where = "pair " + std::to_string(i) + " t=" + std::to_string(t) + " ";
        eval.terms.emplace_back(where + "term_w_theta", tw_theta);
        eval.terms.emplace_back(where + "term_w_ref", tw_ref);
        eval.terms.emplace_back(where + "term_l_theta", tl_theta);
        eval.terms.emplace_back(where + "term_l_ref", tl_ref);
        eval.terms.emplace_back(where + "sigmoid_arg", arg);
      }
      eval.value += value * inv_pairs;
      sum_arg += arg;
      const double g = NegLogSigmoidGrad(arg) * inv_pairs;
      eval.d_outputs.row(w) = (g * 2.0 * scale) * res_w;
      eval.d_outputs.row(l) = (-g * 2.0 * scale) * res_l;
    }
    if (!finite) eval.value = std::numeric_limits<double>::quiet_NaN();
    return eval;
  };
  BatchLoss out;
  out.loss = LossGradient(theta, loss);
  out.mean_sigmoid_arg = sum_arg / static_cast<double>(num_pairs);
  return out;
}

BatchLoss SftLossAndGradient(const DenoiserParams& theta, const NoiseSchedule& s, const Batch& x0,
                             std::span<const int> t, std::span<const Condition> c,
                             const Batch& eps) {
  const Eigen::Index n = x0.rows();
  if (n == 0) throw InvalidArgument("sft loss: empty batch");
  if (static_cast<Eigen::Index>(t.size()) != n || static_cast<Eigen::Index>(c.size()) != n ||
      eps.rows() != n || eps.cols() != x0.cols()) {
    throw InvalidArgument("sft loss: draws are not congruent with the batch");
  }
  OutputLoss loss;
  loss.inputs.resize(n, x0.cols());
  loss.t.resize(t.size());
  loss.c.assign(c.begin(), c.end());
  std::vector<double> weight(t.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    s.CheckTimestep(t[i]);
    loss.inputs.row(i) = s.SqrtAlphaBar(t[i]) * x0.row(i) + s.SqrtOneMinusAlphaBar(t[i]) * eps.row(i);
    loss.t[i] = t[i];
    weight[i] = s.LossWeight(t[i]);
  }
  loss.evaluate = [&](const Batch& pred) {
    LossEvaluation eval;
    const Batch res = pred - eps;
    eval.d_outputs.resize(n, pred.cols());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      eval.value += weight[i] * res.row(i).squaredNorm() * inv_n;
      eval.d_outputs.row(i) = (2.0 * weight[i] * inv_n) * res.row(i);
    }
    if (!std::isfinite(eval.value)) eval.terms.emplace_back("denoising_mse", eval.value);
    return eval;
  };
  return {LossGradient(theta, loss), 0.0};
}

}  // namespace inpo
