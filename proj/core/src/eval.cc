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

#include "inpo/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "inpo/errors.h"
#include "inpo/rng.h"

namespace inpo {
namespace {

using nlohmann::json;

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

double Median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

EvalReport WinRate(const NoiseModel& a, const NoiseModel& b, const NoiseSchedule& s,
                   const RewardSpec& spec, std::span<const Condition> conditions, int n_trials,
                   const SamplerConfig& sampler_cfg, uint64_t seed) {
  if (n_trials < 1) throw InvalidArgument("win_rate: n_trials must be >= 1");
  if (conditions.empty()) throw InvalidArgument("win_rate: no conditions");
  if (a.dim() != b.dim()) throw InvalidArgument("win_rate: models differ in dimension");
  spec.Validate();
  const int dim = a.dim();
  const int last = static_cast<int>(conditions.size()) - 1;
  Batch latents(n_trials, dim);
  std::vector<Condition> c(n_trials);
  for (int i = 0; i < n_trials; ++i) {
    Rng rng(DeriveSeed(seed, static_cast<uint64_t>(i)));
    c[i] = conditions[rng.UniformInt(0, last)];
    latents.row(i) = rng.NormalVec(dim).transpose();
  }
  const Batch xa = DdimSample(a, s, latents, sampler_cfg, c);
  const Batch xb = DdimSample(b, s, latents, sampler_cfg, c);

  EvalReport report;
  report.n_trials = n_trials;
  report.seeds["win_rate"] = seed;
  std::vector<double> ra(n_trials);
  std::vector<double> rb(n_trials);
  double total = 0.0;
  for (int i = 0; i < n_trials; ++i) {
    TrialRecord rec;
    rec.trial = i;
    rec.condition = c[i].id;
    rec.reward_a = Score(spec, xa.row(i).transpose(), c[i]);
    rec.reward_b = Score(spec, xb.row(i).transpose(), c[i]);
    rec.outcome = rec.reward_a > rec.reward_b ? 1.0 : (rec.reward_a < rec.reward_b ? 0.0 : 0.5);
    total += rec.outcome;
    ra[i] = rec.reward_a;
    rb[i] = rec.reward_b;
    report.mean_reward_a += rec.reward_a / n_trials;
    report.mean_reward_b += rec.reward_b / n_trials;
    report.trials.push_back(rec);
  }
  report.win_rate = total / n_trials;
  report.median_reward_a = Median(ra);
  report.median_reward_b = Median(rb);
  return report;
}

std::map<int, RoundtripStat> InversionRoundtrip(const NoiseModel& model, const NoiseSchedule& s,
                                                const Batch& samples, int t_target,
                                                std::span<const int> n_grid,
                                                std::span<const Condition> c, double guidance_w) {
  if (samples.rows() == 0) throw InvalidArgument("inversion_roundtrip: no samples");
  if (static_cast<Eigen::Index>(c.size()) != samples.rows()) {
    throw InvalidArgument("inversion_roundtrip: one condition per sample required");
  }
  const std::vector<int> t(samples.rows(), t_target);
  std::map<int, RoundtripStat> out;
  for (int n : n_grid) {
    const InversionBatch inv = DdimInvertBatch(model, s, samples, t, n, c, guidance_w);
    SamplerConfig cfg;
    cfg.num_steps = std::min(n, t_target);
    cfg.guidance_w = guidance_w;
    cfg.t_start = t_target;
    cfg.t_end = 0;
    const Batch back = DdimSample(model, s, inv.x_t, cfg, c);
    std::vector<double> err(samples.rows());
    double mean = 0.0;
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      err[i] = (back.row(i) - samples.row(i)).norm();
      mean += err[i];
    }
    mean /= static_cast<double>(err.size());
    double var = 0.0;
    for (double e : err) var += (e - mean) * (e - mean);
    const double count = static_cast<double>(err.size());
    const double sd = err.size() > 1 ? std::sqrt(var / (count - 1.0)) : 0.0;
    out[n] = {mean, sd / std::sqrt(count), Median(err)};
  }
  return out;
}

Vec OracleOdeIntegrate(const NoiseModel& model, const NoiseSchedule& s, const Vec& x, int t_from,
                       int t_to, int steps, Condition c, double guidance_w) {
  if (steps < 1) throw InvalidArgument("oracle_ode_integrate: steps must be >= 1");
  s.CheckTimestep(t_from);
  s.CheckTimestep(t_to);
  const double sigma_from = s.Sigma(t_from);
  const double sigma_to = s.Sigma(t_to);
  const double h = (sigma_to - sigma_from) / steps;
  auto velocity = [&](const Vec& xbar, double sigma) {
    const double t = s.TimeAtSigma(sigma);
    const Vec x_t = xbar / std::sqrt(1.0 + sigma * sigma);
    return PredictNoise(model, x_t, t, c, guidance_w);
  };
  Vec xbar = x / s.SqrtAlphaBar(t_from);
  for (int k = 0; k < steps; ++k) {
    const double sg = sigma_from + k * h;
    const Vec k1 = velocity(xbar, sg);
    const Vec k2 = velocity(xbar + 0.5 * h * k1, sg + 0.5 * h);
    const Vec k3 = velocity(xbar + 0.5 * h * k2, sg + 0.5 * h);
    const Vec k4 = velocity(xbar + h * k3, k + 1 == steps ? sigma_to : sg + h);
    xbar += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!xbar.allFinite()) {
      throw NumericError("oracle_ode_integrate: state went non-finite at step " +
                         std::to_string(k));
    }
  }
  return xbar * s.SqrtAlphaBar(t_to);
}

void EmitReport(const EvalReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  json j;
  j["win_rate"] = report.win_rate;
  j["n_trials"] = report.n_trials;
  j["mean_reward_a"] = report.mean_reward_a;
  j["mean_reward_b"] = report.mean_reward_b;
  j["median_reward_a"] = report.median_reward_a;
  j["median_reward_b"] = report.median_reward_b;
  json trials = json::array();
  for (const TrialRecord& r : report.trials) {
    trials.push_back({{"trial", r.trial},
                      {"condition", r.condition},
                      {"reward_a", r.reward_a},
                      {"reward_b", r.reward_b},
                      {"outcome", r.outcome}});
  }
  j["trials"] = trials;
  json roundtrip = json::array();
  for (const auto& [n, st] : report.roundtrip) {
    roundtrip.push_back({{"n", n},
                         {"mean_err", st.mean_err},
                         {"std_err", st.std_err},
                         {"median_err", st.median_err}});
  }
  j["roundtrip"] = roundtrip;
  j["wall_times"] = json::object();
  for (const auto& [k, v] : report.wall_times) j["wall_times"][k] = v;
  j["seeds"] = json::object();
  for (const auto& [k, v] : report.seeds) j["seeds"][k] = v;
  WriteFile(dir / "report.json", j.dump(2) + "\n");

  std::string csv = "trial,condition,reward_a,reward_b,outcome\n";
  for (const TrialRecord& r : report.trials) {
    csv += fmt::format("{},{},{},{},{}\n", r.trial, r.condition, r.reward_a, r.reward_b,
                       r.outcome);
  }
  WriteFile(dir / "win_rate.csv", csv);

  csv = "n,mean_err,std_err\n";
  for (const auto& [n, st] : report.roundtrip) {
    csv += fmt::format("{},{},{}\n", n, st.mean_err, st.std_err);
  }
  WriteFile(dir / "roundtrip.csv", csv);

  csv = "config_id,seconds\n";
  for (const auto& [k, v] : report.wall_times) csv += fmt::format("{},{}\n", k, v);
  WriteFile(dir / "timing.csv", csv);
}

EvalReport ParseReport(const std::filesystem::path& dir) {
  const std::filesystem::path path = dir / "report.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  EvalReport report;
  try {
    const json j = json::parse(in);
    report.win_rate = j.at("win_rate").get<double>();
    report.n_trials = j.at("n_trials").get<int>();
    report.mean_reward_a = j.at("mean_reward_a").get<double>();
    report.mean_reward_b = j.at("mean_reward_b").get<double>();
    report.median_reward_a = j.at("median_reward_a").get<double>();
    report.median_reward_b = j.at("median_reward_b").get<double>();
    for (const json& r : j.at("trials")) {
      report.trials.push_back({r.at("trial").get<int>(), r.at("condition").get<int>(),
                               r.at("reward_a").get<double>(), r.at("reward_b").get<double>(),
                               r.at("outcome").get<double>()});
    }
    for (const json& r : j.at("roundtrip")) {
      report.roundtrip[r.at("n").get<int>()] = {r.at("mean_err").get<double>(),
                                                r.at("std_err").get<double>(),
                                                r.at("median_err").get<double>()};
    }
    for (const auto& [k, v] : j.at("wall_times").items()) report.wall_times[k] = v.get<double>();
    for (const auto& [k, v] : j.at("seeds").items()) report.seeds[k] = v.get<uint64_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what(), 0);
  }
  return report;
}

}  // namespace inpo
