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

#include "inpo/schedule.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "inpo/errors.h"

namespace inpo {

std::string_view ToString(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kCosine:
      return "cosine";
    case ScheduleKind::kLinearBeta:
      return "linear_beta";
  }
  return "unknown";
}

std::string_view ToString(LossWeighting weighting) {
  return weighting == LossWeighting::kConstant ? "constant" : "snr";
}

ScheduleKind ParseScheduleKind(std::string_view name) {
  if (name == "cosine") return ScheduleKind::kCosine;
  if (name == "linear_beta") return ScheduleKind::kLinearBeta;
  throw InvalidArgument("unknown schedule kind '" + std::string(name) + "'");
}

LossWeighting ParseLossWeighting(std::string_view name) {
  if (name == "constant") return LossWeighting::kConstant;
  if (name == "snr") return LossWeighting::kSnr;
  throw InvalidArgument("unknown loss weighting '" + std::string(name) + "'");
}

NoiseSchedule MakeSchedule(ScheduleKind kind, int T, LossWeighting weighting) {
  if (T < 2) {
    throw InvalidArgument("schedule needs T >= 2, got " + std::to_string(T));
  }
  NoiseSchedule s;
  s.kind_ = kind;
  s.weighting_ = weighting;
  s.T_ = T;
  s.alpha_bar_.resize(T + 1);

  if (kind == ScheduleKind::kCosine) {
    auto f = [T](int t) {
      const double phase = (static_cast<double>(t) / T + kCosineOffset) /
                           (1.0 + kCosineOffset) * std::numbers::pi / 2.0;
      const double c = std::cos(phase);
      return c * c;
    };
    const double f0 = f(0);
    s.alpha_bar_[0] = 1.0;
    for (int t = 1; t <= T; ++t) {
      const double ratio = std::max(0.0, f(t) / f0);
      s.alpha_bar_[t] = kCosineAlphaBarFloor + (1.0 - kCosineAlphaBarFloor) * ratio;
    }
  } else {
    s.alpha_bar_[0] = 1.0;
    double running = 1.0;
    for (int t = 1; t <= T; ++t) {
      const double beta = kLinearBetaStart + (kLinearBetaEnd - kLinearBetaStart) *
                                                 static_cast<double>(t - 1) / (T - 1);
      running *= 1.0 - beta;
      s.alpha_bar_[t] = running;
    }
  }

  s.sigma_.resize(T + 1);
  s.loss_weight_.resize(T + 1);
  s.sqrt_alpha_bar_.resize(T + 1);
  s.sqrt_one_minus_.resize(T + 1);
  for (int t = 0; t <= T; ++t) {
    const double a = s.alpha_bar_[t];
    s.sqrt_alpha_bar_[t] = std::sqrt(a);
    s.sqrt_one_minus_[t] = std::sqrt(1.0 - a);
    s.sigma_[t] = s.sqrt_one_minus_[t] / s.sqrt_alpha_bar_[t];
    s.loss_weight_[t] =
        weighting == LossWeighting::kConstant ? 1.0 : s.sigma_[t] * s.sigma_[t];
  }
  return s;
}

void NoiseSchedule::CheckTimestep(int t) const {
  if (t < 0 || t > T_) {
    throw InvalidArgument("timestep " + std::to_string(t) + " outside [0, " +
                          std::to_string(T_) + "]");
  }
}

SchedulePoint NoiseSchedule::At(int t) const {
  CheckTimestep(t);
  return {alpha_bar_[t], sigma_[t], loss_weight_[t]};
}

double NoiseSchedule::SigmaAt(double t) const {
  if (!(t >= 0.0 && t <= T_)) {
    throw InvalidArgument("continuous time " + std::to_string(t) + " outside [0, T]");
  }
  const int lo = std::min(static_cast<int>(std::floor(t)), T_ - 1);
  const double frac = t - lo;
  if (frac == 0.0) return sigma_[lo];
  if (frac == 1.0) return sigma_[lo + 1];
  return sigma_[lo] + frac * (sigma_[lo + 1] - sigma_[lo]);
}

double NoiseSchedule::TimeAtSigma(double sigma) const {
  if (!(sigma >= 0.0 && sigma <= sigma_[T_])) {
    throw InvalidArgument("sigma " + std::to_string(sigma) + " outside schedule range");
  }
  const auto it = std::lower_bound(sigma_.begin(), sigma_.end(), sigma);
  const int hi = static_cast<int>(it - sigma_.begin());
  if (*it == sigma) return hi;
  const int lo = hi - 1;
  return lo + (sigma - sigma_[lo]) / (sigma_[hi] - sigma_[lo]);
}

Vec ForwardDiffuse(const NoiseSchedule& s, const Vec& x0, int t, const Vec& eps) {
  if (x0.size() != eps.size()) {
    throw InvalidArgument("forward_diffuse: x0 has dimension " + std::to_string(x0.size()) +
                          " but eps has " + std::to_string(eps.size()));
  }
  s.CheckTimestep(t);
  return s.SqrtAlphaBar(t) * x0 + s.SqrtOneMinusAlphaBar(t) * eps;
}

}  // namespace inpo
