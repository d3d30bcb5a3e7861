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

#ifndef INPO_SCHEDULE_H_
#define INPO_SCHEDULE_H_

#include <span>
#include <string_view>
#include <vector>

#include "inpo/types.h"

namespace inpo {

enum class ScheduleKind { kCosine, kLinearBeta };
enum class LossWeighting { kConstant, kSnr };

std::string_view ToString(ScheduleKind kind);
std::string_view ToString(LossWeighting weighting);
// Throws InvalidArgument on unknown names.
ScheduleKind ParseScheduleKind(std::string_view name);
LossWeighting ParseLossWeighting(std::string_view name);

// Lower bound on alpha_bar for the cosine kind.
inline constexpr double kCosineAlphaBarFloor = 1e-5;
// Offset of the squared-cosine curve.
inline constexpr double kCosineOffset = 0.008;
inline constexpr double kLinearBetaStart = 1e-4;
inline constexpr double kLinearBetaEnd = 2e-2;

struct SchedulePoint {
  double alpha_bar;
  double sigma;
  double loss_weight;
};

// Discrete noise schedule over t in {0..T}. alpha_bar[0] == 1, alpha_bar is
// strictly decreasing, sigma = sqrt(1 - alpha_bar) / sqrt(alpha_bar) is
// strictly increasing from 0. Immutable after construction.
class NoiseSchedule {
 public:
  ScheduleKind kind() const { return kind_; }
  LossWeighting weighting() const { return weighting_; }
  int T() const { return T_; }

  std::span<const double> alpha_bar() const { return alpha_bar_; }
  std::span<const double> sigma() const { return sigma_; }
  std::span<const double> loss_weight() const { return loss_weight_; }

  // Checked lookup; throws InvalidArgument for t outside [0, T].
  SchedulePoint At(int t) const;
  void CheckTimestep(int t) const;

  // Unchecked accessors for inner loops; callers validate t.
  double AlphaBar(int t) const { return alpha_bar_[t]; }
  double Sigma(int t) const { return sigma_[t]; }
  double LossWeight(int t) const { return loss_weight_[t]; }
  double SqrtAlphaBar(int t) const { return sqrt_alpha_bar_[t]; }
  double SqrtOneMinusAlphaBar(int t) const { return sqrt_one_minus_[t]; }

  // Piecewise-linear interpolation of sigma over continuous time, and its
  // inverse. Exact at grid points. Used by the reference ODE integrator
  // only; the sampler works on the integer grid.
  double SigmaAt(double t) const;
  double TimeAtSigma(double sigma) const;

 private:
  friend NoiseSchedule MakeSchedule(ScheduleKind, int, LossWeighting);
  NoiseSchedule() = default;

  ScheduleKind kind_ = ScheduleKind::kCosine;
  LossWeighting weighting_ = LossWeighting::kConstant;
  int T_ = 0;
  std::vector<double> alpha_bar_;
  std::vector<double> sigma_;
  std::vector<double> loss_weight_;
  std::vector<double> sqrt_alpha_bar_;
  std::vector<double> sqrt_one_minus_;
};

// Builds the schedule. Throws InvalidArgument when T < 2.
//
// cosine: f(t) = cos^2(((t / T) + s) / (1 + s) * pi / 2), s = 0.008, and
//   alpha_bar(t) = floor + (1 - floor) * f(t) / f(0). The affine floor keeps
//   alpha_bar away from 0 while preserving strict monotonicity.
// linear_beta: beta_t linearly spaced over t = 1..T from 1e-4 to 2e-2 and
//   alpha_bar(t) = prod_{s <= t} (1 - beta_s).
//
// Loss weight is 1 everywhere for kConstant, sigma_t^2 for kSnr.
NoiseSchedule MakeSchedule(ScheduleKind kind, int T,
                           LossWeighting weighting = LossWeighting::kConstant);

// sqrt(alpha_bar[t]) * x0 + sqrt(1 - alpha_bar[t]) * eps.
Vec ForwardDiffuse(const NoiseSchedule& s, const Vec& x0, int t, const Vec& eps);

}  // namespace inpo

#endif  // INPO_SCHEDULE_H_
