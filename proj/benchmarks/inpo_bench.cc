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

#include <vector>

#include <benchmark/benchmark.h>

#include "inpo/data.h"
#include "inpo/denoiser.h"
#include "inpo/preference.h"
#include "inpo/rng.h"
#include "inpo/sampler.h"
#include "inpo/schedule.h"
#include "inpo/trainer.h"

namespace inpo {
namespace {

Architecture BenchArchitecture() {
  Architecture arch;
  arch.hidden_dims = {128, 128};
  arch.num_conditions = 8;
  return arch;
}

std::vector<Condition> Conditions(int rows) {
  std::vector<Condition> c(rows);
  for (int i = 0; i < rows; ++i) c[i] = Condition{i % 8};
  return c;
}

void BM_Forward(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  const DenoiserParams p = InitDenoiser(BenchArchitecture(), 1);
  Rng rng(2);
  const Batch x = rng.NormalBatch(rows, 2);
  const std::vector<double> t(rows, 500.0);
  const std::vector<Condition> c = Conditions(rows);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Forward(p, x, t, c, nullptr));
  }
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(64)->Arg(256);

void BM_ForwardBackward(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  const DenoiserParams p = InitDenoiser(BenchArchitecture(), 1);
  Rng rng(3);
  const Batch x = rng.NormalBatch(rows, 2);
  const Batch d_out = rng.NormalBatch(rows, 2);
  const std::vector<double> t(rows, 500.0);
  const std::vector<Condition> c = Conditions(rows);
  for (auto _ : state) {
    ForwardCache cache;
    Forward(p, x, t, c, &cache);
    benchmark::DoNotOptimize(Backward(p, cache, d_out));
  }
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(256);

void BM_DdimInvertBatch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DenoiserParams p = InitDenoiser(BenchArchitecture(), 1);
  const MlpDenoiser model(p);
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  Rng rng(4);
  const Batch x0 = rng.NormalBatch(128, 2);
  const std::vector<int> t(128, 800);
  const std::vector<Condition> c = Conditions(128);
  for (auto _ : state) {
    benchmark::DoNotOptimize(DdimInvertBatch(model, s, x0, t, n, c, 0.0));
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_DdimInvertBatch)->Arg(5)->Arg(10)->Arg(30)->Arg(50);

void BM_DdimSample(benchmark::State& state) {
  const DenoiserParams p = InitDenoiser(BenchArchitecture(), 1);
  const MlpDenoiser model(p);
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  Rng rng(5);
  const Batch x_T = rng.NormalBatch(128, 2);
  const std::vector<Condition> c = Conditions(128);
  SamplerConfig cfg;
  cfg.num_steps = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(DdimSample(model, s, x_T, cfg, c));
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_DdimSample)->Arg(10)->Arg(50);

std::vector<PreferencePair> BenchPairs(int count) {
  Rng rng(6);
  std::vector<PreferencePair> pairs(count);
  for (int i = 0; i < count; ++i) {
    pairs[i].condition = Condition{i % 8};
    pairs[i].winner = rng.NormalVec(2);
    pairs[i].loser = rng.NormalVec(2);
    pairs[i].reward_w = 1.0;
  }
  return pairs;
}

// One optimizer step per iteration at batch 64.
void BM_AlignStep(benchmark::State& state) {
  const DenoiserParams base = InitDenoiser(BenchArchitecture(), 1);
  const NoiseSchedule s = MakeSchedule(ScheduleKind::kCosine, 1000);
  const std::vector<PreferencePair> pairs = BenchPairs(512);
  AlignConfig cfg;
  cfg.delta = state.range(0) == 0 ? DeltaStrategy::Gaussian()
                                  : DeltaStrategy::Inversion(static_cast<int>(state.range(0)));
  TrainerState trainer = StartAlign(base, cfg);
  for (auto _ : state) {
    RunAlign(trainer, base, pairs, s, cfg, trainer.step + 1);
  }
}
BENCHMARK(BM_AlignStep)->Arg(0)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace inpo

BENCHMARK_MAIN();
