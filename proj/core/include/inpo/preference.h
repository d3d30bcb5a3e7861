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

#ifndef INPO_PREFERENCE_H_
#define INPO_PREFERENCE_H_

#include <span>
#include <string_view>
#include <vector>

#include "inpo/data.h"
#include "inpo/denoiser.h"
#include "inpo/rng.h"
#include "inpo/schedule.h"
#include "inpo/types.h"

namespace inpo {

// How the noise delta_t (and with it the regression target tau_t) is
// obtained for a clean sample.
struct DeltaStrategy {
  enum class Kind { kInversion, kGaussian, kFixedPoint };

  Kind kind = Kind::kInversion;
  // kInversion
  int n = 10;
  double guidance_w_inv = 0.0;
  // kFixedPoint
  int max_iters = 100;
  double tol = 1e-8;
  double damping = 1.0;

  static DeltaStrategy Inversion(int n, double guidance_w_inv = 0.0);
  static DeltaStrategy Gaussian();
  static DeltaStrategy FixedPoint(int max_iters, double tol, double damping = 1.0);

  // Throws InvalidArgument when n < 1, max_iters < 1, tol <= 0 or damping
  // outside (0, 1].
  void Validate() const;
};

std::string_view ToString(DeltaStrategy::Kind kind);
DeltaStrategy::Kind ParseDeltaKind(std::string_view name);

struct LossBreakdown {
  double total = 0.0;
  double sigmoid_arg = 0.0;
  double term_w_theta = 0.0;
  double term_w_ref = 0.0;
  double term_l_theta = 0.0;
  double term_l_ref = 0.0;
  int t = 0;
};

// Numerically stable -log(sigmoid(x)).
double NegLogSigmoid(double x);

// Mean over the batch of w(t) * ||eps_hat(forward_diffuse(x0, t, eps), t, c) - eps||^2.
// eps_draws has one row per sample. Throws InvalidArgument on an empty or
// incongruent batch.
double SftLoss(const NoiseModel& model, const NoiseSchedule& s,
               std::span<const LabeledSample> batch, std::span<const int> t_draws,
               const Batch& eps_draws);

struct FixedPointResult {
  Vec delta;
  bool converged = false;
  double residual = 0.0;
  int iterations = 0;
};

// Damped iteration delta <- (1 - damping) * delta + damping * eps_hat(x_t(delta))
// with x_t(delta) = sqrt(abar_t) * x0_t + sqrt(1 - abar_t) * delta, from a
// standard-normal start drawn from `rng`. Conditional prediction (no
// guidance). Throws NumericError if an iterate goes non-finite.
FixedPointResult SolveDeltaFixedPoint(const NoiseModel& model, const NoiseSchedule& s,
                                      const Vec& x0_t, int t, Condition c,
                                      const DeltaStrategy& cfg, Rng& rng);

struct Targets {
  Vec x_t;
  Vec tau;
};

// inversion: ddim_invert's (x_t, tau_t); gaussian: eps ~ N(0, I) drawn from
// `rng`, giving (forward_diffuse(x0, t, eps), eps); fixed_point: solves
// delta at x0_t = x0, giving (reconstruct_xt(x0, delta, t), delta).
Targets MakeTargets(const NoiseModel& model, const NoiseSchedule& s, const Vec& x0, int t,
                    Condition c, const DeltaStrategy& strategy, Rng& rng);

// sigmoid_arg = -beta * w(t) * (||tau_w - eps_theta_w||^2 - ||tau_w - eps_ref_w||^2
//                               - ||tau_l - eps_theta_l||^2 + ||tau_l - eps_ref_l||^2)
// total = -log sigmoid(sigmoid_arg). Throws NumericError naming the first
// non-finite term.
LossBreakdown PreferenceLossFromPredictions(const Vec& tau_w, const Vec& eps_theta_w,
                                            const Vec& eps_ref_w, const Vec& tau_l,
                                            const Vec& eps_theta_l, const Vec& eps_ref_l,
                                            double beta, double weight, int t);

// Targets for winner and loser (in that order, sharing t) come from `ref`,
// which is never differentiated.
LossBreakdown InpoLoss(const NoiseModel& theta, const NoiseModel& ref, const NoiseSchedule& s,
                       const PreferencePair& pair, int t, const DeltaStrategy& strategy,
                       double beta, Rng& rng);

// Same formula with x_t = forward_diffuse(x0, t, eps) and tau = eps.
LossBreakdown DpoDiffusionLoss(const NoiseModel& theta, const NoiseModel& ref,
                               const NoiseSchedule& s, const PreferencePair& pair, int t,
                               const Vec& eps_w, const Vec& eps_l, double beta);

// Monte Carlo average over t_draws of
// -beta * w(t) * (||tau - eps_theta||^2 - ||tau - eps_ref||^2).
// Throws InvalidArgument when t_draws is empty.
double ImplicitReward(const NoiseModel& theta, const NoiseModel& ref, const NoiseSchedule& s,
                      const Vec& x0, Condition c, std::span<const int> t_draws,
                      const DeltaStrategy& strategy, double beta, Rng& rng);

// Batched targets for a set of pairs. Rows 2i and 2i + 1 hold the winner and
// loser of pair i.
struct PairBatchTargets {
  Batch x_t;
  Batch tau;
  std::vector<double> t;
  std::vector<Condition> c;
};

// Draws for the gaussian strategy are taken per pair, winner first, which is
// the same order the Diffusion-DPO path uses.
PairBatchTargets MakePairTargets(const NoiseModel& ref, const NoiseSchedule& s,
                                 std::span<const PreferencePair> pairs, std::span<const int> t,
                                 const DeltaStrategy& strategy, Rng& rng);

// Forward-process targets: eps_w then eps_l drawn per pair.
PairBatchTargets MakeDpoPairTargets(const NoiseSchedule& s, std::span<const PreferencePair> pairs,
                                    std::span<const int> t, Rng& rng);

struct BatchLoss {
  ValueAndGradient loss;
  double mean_sigmoid_arg = 0.0;
};

// Mean preference loss over the pairs in `targets` and its gradient with
// respect to theta. Throws NumericError naming the pair, t and term when a
// term is non-finite.
BatchLoss PreferenceLossAndGradient(const DenoiserParams& theta, const NoiseModel& ref,
                                    const NoiseSchedule& s, const PairBatchTargets& targets,
                                    double beta);

// Mean weighted denoising loss over rows of x0 and its gradient.
BatchLoss SftLossAndGradient(const DenoiserParams& theta, const NoiseSchedule& s, const Batch& x0,
                             std::span<const int> t, std::span<const Condition> c,
                             const Batch& eps);

}  // namespace inpo

#endif  // INPO_PREFERENCE_H_
