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

#ifndef INPO_EVAL_H_
#define INPO_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "inpo/data.h"
#include "inpo/denoiser.h"
#include "inpo/sampler.h"
#include "inpo/schedule.h"
#include "inpo/types.h"

namespace inpo {

struct TrialRecord {
  int trial = 0;
  int condition = Condition::kNullId;
  double reward_a = 0.0;
  double reward_b = 0.0;
  // 1 when a wins, 0 when b wins, 0.5 on a tie.
  double outcome = 0.0;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct RoundtripStat {
  double mean_err = 0.0;
  double std_err = 0.0;  // standard error of the mean
  double median_err = 0.0;

  friend bool operator==(const RoundtripStat&, const RoundtripStat&) = default;
};

struct EvalReport {
  double win_rate = 0.0;
  int n_trials = 0;
  double mean_reward_a = 0.0;
  double mean_reward_b = 0.0;
  double median_reward_a = 0.0;
  double median_reward_b = 0.0;
  std::vector<TrialRecord> trials;
  std::map<int, RoundtripStat> roundtrip;
  std::map<std::string, double> wall_times;  // seconds
  std::map<std::string, uint64_t> seeds;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Each trial draws a condition and one initial latent from its own stream,
// samples both models from that latent and compares the rewards. Sampling is
// batched across trials.
EvalReport WinRate(const NoiseModel& a, const NoiseModel& b, const NoiseSchedule& s,
                   const RewardSpec& spec, std::span<const Condition> conditions, int n_trials,
                   const SamplerConfig& sampler_cfg, uint64_t seed);

// For every n: mean over rows of || ddim_sample(ddim_invert(x0, t_target, n).x_t) - x0 ||,
// where both directions use the same n-step grid and guidance weight.
std::map<int, RoundtripStat> InversionRoundtrip(const NoiseModel& model, const NoiseSchedule& s,
                                                const Batch& samples, int t_target,
                                                std::span<const int> n_grid,
                                                std::span<const Condition> c,
                                                double guidance_w = 1.0);

// Classical RK4 on dxbar/dsigma = eps_hat(xbar / sqrt(1 + sigma^2), t(sigma)),
// xbar = x / sqrt(abar), over a uniform sigma grid between the endpoints.
// Reference integrator for tests; not used by the sampler. Throws
// NumericError if the state goes non-finite.
Vec OracleOdeIntegrate(const NoiseModel& model, const NoiseSchedule& s, const Vec& x, int t_from,
                       int t_to, int steps, Condition c, double guidance_w);

// Writes report.json plus
//   win_rate.csv:  trial,condition,reward_a,reward_b,outcome
//   roundtrip.csv: n,mean_err,std_err
//   timing.csv:    config_id,seconds
// Numbers are written in shortest round-trip form.
void EmitReport(const EvalReport& report, const std::filesystem::path& dir);
EvalReport ParseReport(const std::filesystem::path& dir);

double Median(std::vector<double> values);

}  // namespace inpo

#endif  // INPO_EVAL_H_
