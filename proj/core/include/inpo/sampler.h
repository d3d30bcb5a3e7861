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

#ifndef INPO_SAMPLER_H_
#define INPO_SAMPLER_H_

#include <span>
#include <vector>

#include "inpo/denoiser.h"
#include "inpo/schedule.h"
#include "inpo/types.h"

namespace inpo {

struct SamplerConfig {
  int num_steps = 50;
  double guidance_w = 1.0;
  int t_start = 1000;
  int t_end = 0;
};

// num_steps + 1 integer grid points from `from` to `to` inclusive, rounded
// from a uniform real grid. Throws InvalidArgument unless the points are
// strictly monotone (|to - from| >= steps >= 1).
std::vector<int> UniformGrid(int from, int to, int steps);

// Deterministic DDIM from t_start down to t_end:
//   x_{t-k} = sqrt(abar_{t-k}) * x0_hat(x_t) + sqrt(1 - abar_{t-k}) * eps_hat(x_t).
// Throws InvalidArgument for a bad grid and NumericError (with the step
// index) if an iterate goes non-finite.
Batch DdimSample(const NoiseModel& model, const NoiseSchedule& s, const Batch& x_T,
                 const SamplerConfig& cfg, std::span<const Condition> c);
Vec DdimSample(const NoiseModel& model, const NoiseSchedule& s, const Vec& x_T,
               const SamplerConfig& cfg, Condition c);

// Single-step estimate x_t / sqrt(abar_t) - sigma_t * eps_hat(x_t), per row.
// Throws InvalidArgument for t == 0.
Batch InitialVariable(const NoiseModel& model, const NoiseSchedule& s, const Batch& x_t,
                      std::span<const int> t, std::span<const Condition> c, double guidance_w);
Vec InitialVariable(const NoiseModel& model, const NoiseSchedule& s, const Vec& x_t, int t,
                    Condition c, double guidance_w);

struct InversionResult {
  Vec x0_t;     // initial variable x_0(t)
  Vec delta_t;  // noise solving the fixed-point condition at x_0(t)
  Vec x_t;      // sqrt(abar) * x0_t + sqrt(1 - abar) * delta_t
  Vec tau_t;    // (x0_t - x0) / sigma_t + delta_t
  int t = 0;
  int n_steps = 0;
  double guidance_w_inv = 0.0;
};

struct InversionBatch {
  Batch x0_t;
  Batch delta_t;
  Batch x_t;
  Batch tau_t;
  std::vector<int> t;
  std::vector<int> n_steps;
  double guidance_w_inv = 0.0;
};

// Inverts clean samples to their latents at t_target by integrating the
// initial-variable ODE forward over a uniform grid of n steps from 0. Each
// row keeps a running x_0(.) and noise estimate delta; one model evaluation
// per step updates both:
//   eps      = eps_hat(sqrt(abar_next) * x0_run + sqrt(1 - abar_next) * delta)
//   x0_run  -= sigma_next * (eps - delta)
//   delta    = eps
// The starting delta is eps_hat at the clean sample lifted to the first grid
// point. When t_target < n the row uses t_target unit steps instead.
InversionBatch DdimInvertBatch(const NoiseModel& model, const NoiseSchedule& s,
                               const Batch& x0, std::span<const int> t_target, int n,
                               std::span<const Condition> c, double guidance_w_inv);
InversionResult DdimInvert(const NoiseModel& model, const NoiseSchedule& s, const Vec& x0,
                           int t_target, int n, Condition c, double guidance_w_inv);

// sqrt(abar_t) * x0_t + sqrt(1 - abar_t) * delta_t. Requires 1 <= t <= T.
Vec ReconstructXt(const NoiseSchedule& s, const Vec& x0_t, const Vec& delta_t, int t);

// (x0_t - x0) / sigma_t + delta_t. Requires 1 <= t <= T.
Vec ComputeTau(const NoiseSchedule& s, const Vec& x0_t, const Vec& delta_t, const Vec& x0,
               int t);

}  // namespace inpo

#endif  // INPO_SAMPLER_H_
