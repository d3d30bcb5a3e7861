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

#include "inpo/trainer.h"

#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "binary_io.h"
#include "inpo/errors.h"
#include "inpo/rng.h"
#include "logging.h"

namespace inpo {
namespace {

constexpr std::string_view kCheckpointMagic = "INPOTRN1";

class Fnv1a {
 public:
  void Add(uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      hash_ ^= (v >> (8 * i)) & 0xff;
      hash_ *= 0x100000001b3ULL;
    }
  }
  void Add(double v) { Add(std::bit_cast<uint64_t>(v)); }
  void Add(int v) { Add(static_cast<uint64_t>(static_cast<int64_t>(v))); }
  uint64_t value() const { return hash_; }

 private:
  uint64_t hash_ = 0xcbf29ce484222325ULL;
};

double ElapsedMs(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

double PretrainLr(const DiffusionTrainConfig& cfg, int step) {
  if (step < cfg.warmup_steps) return WarmupLr(cfg.lr, cfg.warmup_steps, step);
  const double span = std::max(1, cfg.steps - cfg.warmup_steps);
  const double progress = std::min(1.0, (step - cfg.warmup_steps) / span);
  const double floor = cfg.lr * cfg.min_lr_fraction;
  return floor + 0.5 * (cfg.lr - floor) * (1.0 + std::cos(std::numbers::pi * progress));
}

void ValidateDiffusionConfig(const DiffusionTrainConfig& cfg) {
  if (cfg.steps < 0) throw InvalidArgument("train: steps must be >= 0");
  if (cfg.batch_size < 1) throw InvalidArgument("train: batch_size must be >= 1");
  if (!(cfg.lr > 0.0)) throw InvalidArgument("train: lr must be > 0");
  if (cfg.warmup_steps < 0) throw InvalidArgument("train: warmup_steps must be >= 0");
  if (!(cfg.min_lr_fraction >= 0.0 && cfg.min_lr_fraction <= 1.0)) {
    throw InvalidArgument("train: min_lr_fraction must lie in [0, 1]");
  }
  if (!(cfg.cond_drop >= 0.0 && cfg.cond_drop <= 1.0)) {
    throw InvalidArgument("train: cond_drop must lie in [0, 1]");
  }
}

}  // namespace

AdamState InitAdam(Eigen::Index size) {
  return {Eigen::VectorXd::Zero(size), Eigen::VectorXd::Zero(size), 0};
}

void AdamStep(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr,
              const AdamConfig& cfg, AdamState& state) {
  if (grad.size() != params.size() || state.m.size() != params.size()) {
    throw InvalidArgument("adam: size mismatch");
  }
  state.t += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  if (cfg.weight_decay != 0.0) params *= (1.0 - lr * cfg.weight_decay);
  params.array() -=
      lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + cfg.eps);
}

double WarmupLr(double lr, int warmup_steps, int64_t step) {
  if (step < warmup_steps) {
    return lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  }
  return lr;
}

void WriteTrainLogCsv(const std::filesystem::path& path, std::span<const TrainLogRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "step,lr,loss,sigmoid_arg_mean,wall_ms\n";
  for (const TrainLogRow& r : rows) {
    out << fmt::format("{},{},{},{},{}\n", r.step, r.lr, r.loss, r.sigmoid_arg_mean, r.wall_ms);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

DenoiserParams TrainDiffusion(const DenoiserParams& init, std::span<const LabeledSample> dataset,
                              const NoiseSchedule& s, const DiffusionTrainConfig& cfg,
                              const TrainLogFn& log) {
  ValidateDiffusionConfig(cfg);
  if (dataset.empty()) throw InvalidArgument("train: empty dataset");
  const int dim = init.arch.input_dim;
  for (const LabeledSample& sample : dataset) {
    if (sample.x0.size() != dim) throw InvalidArgument("train: sample dimension mismatch");
    if (!sample.c.is_null() && sample.c.id >= init.arch.num_conditions) {
      throw InvalidArgument("train: condition id out of range");
    }
  }
  DenoiserParams params = init;
  AdamState adam = InitAdam(params.values.size());
  AdamConfig adam_cfg;
  Rng rng(DeriveSeed(cfg.seed, 0x9e7a));
  const int last = static_cast<int>(dataset.size()) - 1;
  Batch x0(cfg.batch_size, dim);
  std::vector<int> t(cfg.batch_size);
  std::vector<Condition> c(cfg.batch_size);
  for (int step = 0; step < cfg.steps; ++step) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < cfg.batch_size; ++i) {
      const LabeledSample& sample = dataset[rng.UniformInt(0, last)];
      x0.row(i) = sample.x0.transpose();
      t[i] = rng.UniformInt(1, s.T());
      c[i] = rng.Uniform() < cfg.cond_drop ? Condition::Null() : sample.c;
    }
    const Batch eps = rng.NormalBatch(cfg.batch_size, dim);
    BatchLoss loss;
    try {
      loss = SftLossAndGradient(params, s, x0, t, c, eps);
    } catch (const NumericError& e) {
      throw TrainingError(fmt::format("diffusion training diverged at step {}: {}", step, e.what()));
    }
    if (!loss.loss.gradient.allFinite()) {
      throw TrainingError(fmt::format("diffusion training diverged at step {}: gradient", step));
    }
    const double lr = PretrainLr(cfg, step);
    AdamStep(params.values, loss.loss.gradient, lr, adam_cfg, adam);
    if (log) log({step, lr, loss.loss.value, 0.0, ElapsedMs(start)});
    if ((step + 1) % 1000 == 0) {
      internal::Logger()->debug("train step {} loss {:.5f}", step + 1, loss.loss.value);
    }
  }
  return params;
}

DenoiserParams PretrainBase(std::span<const LabeledSample> dataset, const Architecture& arch,
                            const NoiseSchedule& s, const DiffusionTrainConfig& cfg,
                            const TrainLogFn& log) {
  if (dataset.empty()) throw InvalidArgument("pretrain_base: empty dataset");
  return TrainDiffusion(InitDenoiser(arch, cfg.seed), dataset, s, cfg, log);
}

DenoiserParams SftRefInit(const DenoiserParams& base, std::span<const PreferencePair> pairs,
                          const NoiseSchedule& s, const DiffusionTrainConfig& cfg) {
  std::vector<LabeledSample> winners;
  for (const PreferencePair& p : pairs) {
    if (!p.tie) winners.push_back({p.winner, p.condition});
  }
  if (winners.empty()) throw InvalidArgument("sft_ref_init: no non-tied pairs");
  return TrainDiffusion(base, winners, s, cfg);
}

std::string_view ToString(AlignMethod method) {
  switch (method) {
    case AlignMethod::kInpo:
      return "inpo";
    case AlignMethod::kDpo:
      return "dpo";
    case AlignMethod::kSft:
      return "sft";
  }
  return "unknown";
}

std::string_view ToString(RefInit init) {
  return init == RefInit::kBase ? "base" : "sft_winners";
}

AlignMethod ParseAlignMethod(std::string_view name) {
  if (name == "inpo") return AlignMethod::kInpo;
  if (name == "dpo") return AlignMethod::kDpo;
  if (name == "sft") return AlignMethod::kSft;
  throw InvalidArgument("unknown align method '" + std::string(name) + "'");
}

RefInit ParseRefInit(std::string_view name) {
  if (name == "base") return RefInit::kBase;
  if (name == "sft_winners") return RefInit::kSftWinners;
  throw InvalidArgument("unknown ref_init '" + std::string(name) + "'");
}

void AlignConfig::Validate(int T) const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("align.beta must be >= 0");
  if (steps < 0) throw InvalidArgument("align.steps must be >= 0");
  if (batch_pairs < 1) throw InvalidArgument("align.batch_pairs must be >= 1");
  if (accum_steps < 1) throw InvalidArgument("align.accum_steps must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("align.lr must be > 0");
  if (warmup_steps < 0) throw InvalidArgument("align.warmup_steps must be >= 0");
  if (t_min < 1 || t_min > T) throw InvalidArgument("align.t_min must lie in [1, T]");
  delta.Validate();
}

uint64_t AlignConfig::Fingerprint() const {
  Fnv1a h;
  // Gaussian-delta InPO trains exactly like DPO, and delta settings only
  // matter for the other InPO strategies.
  const bool dpo_like = method == AlignMethod::kDpo ||
                        (method == AlignMethod::kInpo && delta.kind == DeltaStrategy::Kind::kGaussian);
  h.Add(static_cast<int>(dpo_like ? AlignMethod::kDpo : method));
  h.Add(beta);
  if (method == AlignMethod::kInpo && !dpo_like) {
    h.Add(static_cast<int>(delta.kind));
    h.Add(delta.n);
    h.Add(delta.guidance_w_inv);
    h.Add(delta.max_iters);
    h.Add(delta.tol);
    h.Add(delta.damping);
  }
  h.Add(batch_pairs);
  h.Add(accum_steps);
  h.Add(lr);
  h.Add(warmup_steps);
  h.Add(seed);
  h.Add(static_cast<int>(ref_init));
  h.Add(t_min);
  h.Add(adam.beta1);
  h.Add(adam.beta2);
  h.Add(adam.eps);
  h.Add(adam.weight_decay);
  return h.value();
}

TrainerState StartAlign(const DenoiserParams& base, const AlignConfig& cfg) {
  TrainerState state;
  state.params = base;
  state.adam = InitAdam(base.values.size());
  state.fingerprint = cfg.Fingerprint();
  return state;
}

void RunAlign(TrainerState& state, const DenoiserParams& ref,
              std::span<const PreferencePair> pairs, const NoiseSchedule& s,
              const AlignConfig& cfg, int64_t until_step, const TrainLogFn& log) {
  cfg.Validate(s.T());
  if (state.fingerprint != cfg.Fingerprint()) {
    throw ConfigError("align", "checkpoint fingerprint does not match the configuration");
  }
  if (!(ref.arch == state.params.arch)) {
    throw InvalidArgument("align: reference and policy architectures differ");
  }
  std::vector<PreferencePair> pool;
  for (const PreferencePair& p : pairs) {
    if (!p.tie) pool.push_back(p);
  }
  if (until_step <= state.step) return;
  if (pool.empty()) throw InvalidArgument("align: no non-tied pairs");
  const int dim = state.params.arch.input_dim;
  for (const PreferencePair& p : pool) {
    if (p.winner.size() != dim || p.loser.size() != dim) {
      throw InvalidArgument("align: pair dimension does not match the model");
    }
  }

  const MlpDenoiser ref_model(ref);
  const int last = static_cast<int>(pool.size()) - 1;
  std::vector<PreferencePair> batch(cfg.batch_pairs);
  std::vector<int> t(cfg.batch_pairs);
  for (; state.step < until_step; ++state.step) {
    const auto start = std::chrono::steady_clock::now();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(state.params.values.size());
    double loss = 0.0;
    double arg = 0.0;
    for (int micro = 0; micro < cfg.accum_steps; ++micro) {
      Rng rng(DeriveSeed(cfg.seed, static_cast<uint64_t>(state.step), static_cast<uint64_t>(micro)));
      for (int i = 0; i < cfg.batch_pairs; ++i) {
        batch[i] = pool[rng.UniformInt(0, last)];
        t[i] = rng.UniformInt(cfg.t_min, s.T());
      }
      BatchLoss micro_loss;
      try {
        switch (cfg.method) {
          case AlignMethod::kInpo:
            micro_loss = PreferenceLossAndGradient(
                state.params, ref_model, s,
                MakePairTargets(ref_model, s, batch, t, cfg.delta, rng), cfg.beta);
            break;
          case AlignMethod::kDpo:
            micro_loss = PreferenceLossAndGradient(state.params, ref_model, s,
                                                   MakeDpoPairTargets(s, batch, t, rng), cfg.beta);
            break;
          case AlignMethod::kSft: {
            Batch x0(cfg.batch_pairs, dim);
            std::vector<Condition> c(cfg.batch_pairs);
            for (int i = 0; i < cfg.batch_pairs; ++i) {
              x0.row(i) = batch[i].winner.transpose();
              c[i] = batch[i].condition;
            }
            const Batch eps = rng.NormalBatch(cfg.batch_pairs, dim);
            micro_loss = SftLossAndGradient(state.params, s, x0, t, c, eps);
            break;
          }
        }
      } catch (const NumericError& e) {
        throw TrainingError(fmt::format("align diverged at step {} (micro-batch {}): {}",
                                        state.step, micro, e.what()));
      }
      grad += micro_loss.loss.gradient;
      loss += micro_loss.loss.value;
      arg += micro_loss.mean_sigmoid_arg;
    }
    const double inv = 1.0 / cfg.accum_steps;
    grad *= inv;
    if (!grad.allFinite()) {
      throw TrainingError(fmt::format("align produced a non-finite gradient at step {}",
                                      state.step));
    }
    const double lr = WarmupLr(cfg.lr, cfg.warmup_steps, state.step);
    AdamStep(state.params.values, grad, lr, cfg.adam, state.adam);
    if (log) log({state.step, lr, loss * inv, arg * inv, ElapsedMs(start)});
    if ((state.step + 1) % 100 == 0) {
      internal::Logger()->debug("align step {} loss {:.5f}", state.step + 1, loss * inv);
    }
  }
}

DenoiserParams Align(const DenoiserParams& base, const DenoiserParams& ref,
                     std::span<const PreferencePair> pairs, const NoiseSchedule& s,
                     const AlignConfig& cfg, const TrainLogFn& log) {
  TrainerState state = StartAlign(base, cfg);
  RunAlign(state, ref, pairs, s, cfg, cfg.steps, log);
  return state.params;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  using namespace internal;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const TrainerState& st = ckpt.state;
  WriteMagic(out, kCheckpointMagic);
  WriteU32(out, kCheckpointVersion);
  WriteU64(out, st.fingerprint);
  WriteU64(out, static_cast<uint64_t>(st.step));
  WriteU64(out, static_cast<uint64_t>(st.adam.t));
  WriteModel(out, {st.params, ckpt.schedule_kind, ckpt.T});
  WriteF64Array(out, st.adam.m);
  WriteF64Array(out, st.adam.v);
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  using namespace internal;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (ReadMagic(in, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw VersionError("not a trainer checkpoint (bad magic)");
  }
  const uint32_t version = ReadU32(in, "version");
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported trainer checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  TrainerState& st = ckpt.state;
  st.fingerprint = ReadU64(in, "fingerprint");
  st.step = static_cast<int64_t>(ReadU64(in, "step"));
  st.adam.t = static_cast<int64_t>(ReadU64(in, "adam step"));
  ModelFile model = ReadModel(in);
  st.params = std::move(model.params);
  ckpt.schedule_kind = model.schedule_kind;
  ckpt.T = model.T;
  const auto n = st.params.values.size();
  st.adam.m = ReadF64Array(in, n, "adam first moment");
  st.adam.v = ReadF64Array(in, n, "adam second moment");
  return ckpt;
}

}  // namespace inpo
