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

#include "inpo/sampler.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "inpo/errors.h"

namespace inpo {
namespace {

void CheckPositiveTimestep(const NoiseSchedule& s, int t, const char* op) {
  if (t < 1 || t > s.T()) {
    throw InvalidArgument(std::string(op) + ": timestep " + std::to_string(t) +
                          " outside [1, " + std::to_string(s.T()) + "]");
  }
}

void CheckRows(const Batch& x, size_t n, const char* op) {
  if (static_cast<size_t>(x.rows()) != n) {
    throw InvalidArgument(std::string(op) + ": per-row arguments do not match the batch");
  }
}

}  // namespace

std::vector<int> UniformGrid(int from, int to, int steps) {
  if (steps < 1) throw InvalidArgument("grid needs at least one step");
  if (std::abs(to - from) < steps) {
    throw InvalidArgument("grid from " + std::to_string(from) + " to " + std::to_string(to) +
                          " cannot hold " + std::to_string(steps) + " distinct steps");
  }
  std::vector<int> grid(static_cast<size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    grid[k] = from + static_cast<int>(std::lround(static_cast<double>(to - from) * k / steps));
  }
  return grid;
}

Batch DdimSample(const NoiseModel& model, const NoiseSchedule& s, const Batch& x_T,
                 const SamplerConfig& cfg, std::span<const Condition> c) {
  if (cfg.t_start > s.T() || cfg.t_end < 0 || cfg.t_end >= cfg.t_start) {
    throw InvalidArgument("ddim_sample: need 0 <= t_end < t_start <= T");
  }
  if (x_T.cols() != model.dim()) throw InvalidArgument("ddim_sample: dimension mismatch");
  CheckRows(x_T, c.size(), "ddim_sample");
  const std::vector<int> grid = UniformGrid(cfg.t_start, cfg.t_end, cfg.num_steps);

  Batch x = x_T;
  std::vector<double> times(static_cast<size_t>(x.rows()));
  for (int k = 0; k < cfg.num_steps; ++k) {
    const int t = grid[k];
    const int next = grid[k + 1];
    std::fill(times.begin(), times.end(), static_cast<double>(t));
    const Batch eps = model.Predict(x, times, c, cfg.guidance_w);
    const Batch x0_hat = (x - s.SqrtOneMinusAlphaBar(t) * eps) / s.SqrtAlphaBar(t);
    x = s.SqrtAlphaBar(next) * x0_hat + s.SqrtOneMinusAlphaBar(next) * eps;
    if (!x.allFinite()) {
      throw NumericError("ddim_sample: non-finite iterate at step " + std::to_string(k) +
                         " (t=" + std::to_string(t) + ")");
    }
  }
  return x;
}

Vec DdimSample(const NoiseModel& model, const NoiseSchedule& s, const Vec& x_T,
               const SamplerConfig& cfg, Condition c) {
  const Condition conds[] = {c};
  return DdimSample(model, s, Batch(x_T.transpose()), cfg, conds).row(0).transpose();
}

Batch InitialVariable(const NoiseModel& model, const NoiseSchedule& s, const Batch& x_t,
                      std::span<const int> t, std::span<const Condition> c,
                      double guidance_w) {
  CheckRows(x_t, t.size(), "initial_variable");
  std::vector<double> times(t.size());
  for (size_t r = 0; r < t.size(); ++r) {
    CheckPositiveTimestep(s, t[r], "initial_variable");
    times[r] = t[r];
  }
  const Batch eps = model.Predict(x_t, times, c, guidance_w);
  Batch out(x_t.rows(), x_t.cols());
  for (Eigen::Index r = 0; r < x_t.rows(); ++r) {
    out.row(r) = x_t.row(r) / s.SqrtAlphaBar(t[r]) - s.Sigma(t[r]) * eps.row(r);
  }
  return out;
}

Vec InitialVariable(const NoiseModel& model, const NoiseSchedule& s, const Vec& x_t, int t,
                    Condition c, double guidance_w) {
  const int ts[] = {t};
  const Condition conds[] = {c};
  return InitialVariable(model, s, Batch(x_t.transpose()), ts, conds, guidance_w)
      .row(0)
      .transpose();
}

InversionBatch DdimInvertBatch(const NoiseModel& model, const NoiseSchedule& s,
                               const Batch& x0, std::span<const int> t_target, int n,
                               std::span<const Condition> c, double guidance_w_inv) {
  if (n < 1) throw InvalidArgument("ddim_invert: n must be >= 1");
  if (x0.cols() != model.dim()) throw InvalidArgument("ddim_invert: dimension mismatch");
  CheckRows(x0, t_target.size(), "ddim_invert");
  CheckRows(x0, c.size(), "ddim_invert");
  const Eigen::Index rows = x0.rows();

  InversionBatch out;
  out.t.assign(t_target.begin(), t_target.end());
  out.n_steps.resize(rows);
  out.guidance_w_inv = guidance_w_inv;
  std::vector<std::vector<int>> grids(rows);
  int max_steps = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    CheckPositiveTimestep(s, t_target[r], "ddim_invert");
    out.n_steps[r] = std::min(n, t_target[r]);
    grids[r] = UniformGrid(0, t_target[r], out.n_steps[r]);
    max_steps = std::max(max_steps, out.n_steps[r]);
  }

  Batch x0_run = x0;
  Batch delta(rows, x0.cols());
  {
    Batch lifted(rows, x0.cols());
    std::vector<double> times(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const int first = grids[r][1];
      lifted.row(r) = s.SqrtAlphaBar(first) * x0.row(r);
      times[r] = first;
    }
    delta = model.Predict(lifted, times, c, guidance_w_inv);
  }

  // Rows with fewer steps drop out of later evaluations.
  std::vector<Eigen::Index> active;
  std::vector<double> times;
  std::vector<Condition> conds;
  for (int k = 0; k < max_steps; ++k) {
    active.clear();
    times.clear();
    conds.clear();
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (k < out.n_steps[r]) {
        active.push_back(r);
        times.push_back(grids[r][k + 1]);
        conds.push_back(c[r]);
      }
    }
    Batch latent(static_cast<Eigen::Index>(active.size()), x0.cols());
    for (size_t i = 0; i < active.size(); ++i) {
      const int next = static_cast<int>(times[i]);
      const Eigen::Index r = active[i];
      latent.row(i) = s.SqrtAlphaBar(next) * x0_run.row(r) +
                      s.SqrtOneMinusAlphaBar(next) * delta.row(r);
    }
    const Batch eps = model.Predict(latent, times, conds, guidance_w_inv);
    for (size_t i = 0; i < active.size(); ++i) {
      const Eigen::Index r = active[i];
      const int next = static_cast<int>(times[i]);
      x0_run.row(r) -= s.Sigma(next) * (eps.row(i) - delta.row(r));
      delta.row(r) = eps.row(i);
    }
    if (!x0_run.allFinite() || !delta.allFinite()) {
      throw NumericError("ddim_invert: non-finite iterate at step " + std::to_string(k));
    }
  }

  out.x_t.resize(rows, x0.cols());
  out.tau_t.resize(rows, x0.cols());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int t = t_target[r];
    out.x_t.row(r) = s.SqrtAlphaBar(t) * x0_run.row(r) + s.SqrtOneMinusAlphaBar(t) * delta.row(r);
    out.tau_t.row(r) = (x0_run.row(r) - x0.row(r)) / s.Sigma(t) + delta.row(r);
  }
  out.x0_t = std::move(x0_run);
  out.delta_t = std::move(delta);
  return out;
}

InversionResult DdimInvert(const NoiseModel& model, const NoiseSchedule& s, const Vec& x0,
                           int t_target, int n, Condition c, double guidance_w_inv) {
  const int ts[] = {t_target};
  const Condition conds[] = {c};
  InversionBatch b = DdimInvertBatch(model, s, Batch(x0.transpose()), ts, n, conds,
                                     guidance_w_inv);
  return {b.x0_t.row(0).transpose(), b.delta_t.row(0).transpose(), b.x_t.row(0).transpose(),
          b.tau_t.row(0).transpose(), t_target,  b.n_steps[0], guidance_w_inv};
}

Vec ReconstructXt(const NoiseSchedule& s, const Vec& x0_t, const Vec& delta_t, int t) {
  CheckPositiveTimestep(s, t, "reconstruct_xt");
  if (x0_t.size() != delta_t.size()) throw InvalidArgument("reconstruct_xt: dimension mismatch");
  return s.SqrtAlphaBar(t) * x0_t + s.SqrtOneMinusAlphaBar(t) * delta_t;
}

Vec ComputeTau(const NoiseSchedule& s, const Vec& x0_t, const Vec& delta_t, const Vec& x0,
               int t) {
  if (t == 0) throw InvalidArgument("compute_tau: sigma_0 = 0, t must be >= 1");
  CheckPositiveTimestep(s, t, "compute_tau");
  if (x0_t.size() != delta_t.size() || x0_t.size() != x0.size()) {
    throw InvalidArgument("compute_tau: dimension mismatch");
  }
  return (x0_t - x0) / s.Sigma(t) + delta_t;
}

}  // namespace inpo
