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

#ifndef INPO_TRAINER_H_
#define INPO_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "inpo/data.h"
#include "inpo/denoiser.h"
#include "inpo/preference.h"
#include "inpo/schedule.h"

namespace inpo {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  int64_t t = 0;
};

AdamState InitAdam(Eigen::Index size);
void AdamStep(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr,
              const AdamConfig& cfg, AdamState& state);

// lr * (step + 1) / warmup_steps while step < warmup_steps, lr afterwards.
double WarmupLr(double lr, int warmup_steps, int64_t step);

// One row of the training log.
struct TrainLogRow {
  int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double sigmoid_arg_mean = 0.0;
  double wall_ms = 0.0;
};
using TrainLogFn = std::function<void(const TrainLogRow&)>;

// Columns: step, lr, loss, sigmoid_arg_mean, wall_ms.
void WriteTrainLogCsv(const std::filesystem::path& path, std::span<const TrainLogRow> rows);

struct DiffusionTrainConfig {
  int steps = 20000;
  int batch_size = 256;
  double lr = 2e-3;
  int warmup_steps = 100;
  // Cosine decay from lr down to lr * min_lr_fraction over `steps`.
  double min_lr_fraction = 0.05;
  // Probability of replacing a label by the null condition.
  double cond_drop = 0.1;
  uint64_t seed = 0;
};

// Denoising-objective training from `init`. Deterministic in cfg.seed.
// Throws TrainingError with the step index if the loss goes non-finite.
DenoiserParams TrainDiffusion(const DenoiserParams& init, std::span<const LabeledSample> dataset,
                              const NoiseSchedule& s, const DiffusionTrainConfig& cfg,
                              const TrainLogFn& log = {});

// Fresh initialization from cfg.seed followed by TrainDiffusion.
DenoiserParams PretrainBase(std::span<const LabeledSample> dataset, const Architecture& arch,
                            const NoiseSchedule& s, const DiffusionTrainConfig& cfg,
                            const TrainLogFn& log = {});

// Denoising-objective training of `base` on the winners of non-tied pairs.
DenoiserParams SftRefInit(const DenoiserParams& base, std::span<const PreferencePair> pairs,
                          const NoiseSchedule& s, const DiffusionTrainConfig& cfg);

enum class AlignMethod { kInpo, kDpo, kSft };
enum class RefInit { kBase, kSftWinners };

std::string_view ToString(AlignMethod method);
std::string_view ToString(RefInit init);
AlignMethod ParseAlignMethod(std::string_view name);
RefInit ParseRefInit(std::string_view name);

struct AlignConfig {
  AlignMethod method = AlignMethod::kInpo;
  double beta = 2000.0;
  DeltaStrategy delta;
  int steps = 1000;
  int batch_pairs = 64;
  int accum_steps = 1;
  double lr = 1e-5;
  int warmup_steps = 50;
  uint64_t seed = 0;
  RefInit ref_init = RefInit::kBase;
  int t_min = 1;
  AdamConfig adam;

  // Throws InvalidArgument naming the offending field.
  void Validate(int T) const;
  // Hash of every field that affects the trajectory except `steps`, so a
  // run can be resumed with a larger step budget. Configurations that train
  // identically (dpo and inpo with gaussian delta) hash the same.
  uint64_t Fingerprint() const;
};

struct TrainerState {
  DenoiserParams params;
  AdamState adam;
  int64_t step = 0;
  uint64_t fingerprint = 0;
};

TrainerState StartAlign(const DenoiserParams& base, const AlignConfig& cfg);

// Advances `state` until it reaches `until_step` optimizer steps. Each step
// averages gradients over batch_pairs * accum_steps pair evaluations drawn
// from the non-tied pairs, every pair with its own t in {t_min..T}. The
// randomness of step k depends only on (seed, k), so resuming is exact.
// Throws ConfigError on a fingerprint mismatch and TrainingError (with the
// step, pair and t) when the loss goes non-finite.
void RunAlign(TrainerState& state, const DenoiserParams& ref,
              std::span<const PreferencePair> pairs, const NoiseSchedule& s,
              const AlignConfig& cfg, int64_t until_step, const TrainLogFn& log = {});

// StartAlign followed by RunAlign to cfg.steps.
DenoiserParams Align(const DenoiserParams& base, const DenoiserParams& ref,
                     std::span<const PreferencePair> pairs, const NoiseSchedule& s,
                     const AlignConfig& cfg, const TrainLogFn& log = {});

struct Checkpoint {
  TrainerState state;
  ScheduleKind schedule_kind = ScheduleKind::kCosine;
  int T = 1000;
};

inline constexpr uint32_t kCheckpointVersion = 1;

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws VersionError on a bad header and IoError on truncation; nothing is
// returned unless the whole file parses.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace inpo

#endif  // INPO_TRAINER_H_
