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

#include "cli.h"

#include <chrono>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "config.h"
#include "inpo/data.h"
#include "inpo/denoiser.h"
#include "inpo/errors.h"
#include "inpo/eval.h"
#include "inpo/logging.h"
#include "inpo/preference.h"
#include "inpo/rng.h"
#include "inpo/sampler.h"
#include "inpo/schedule.h"
#include "inpo/trainer.h"

namespace inpo::cli {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

// Wraps InvalidArgument from a builder into a ConfigError for `key`.
template <typename F>
auto ForKey(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(key, e.what());
  }
}

const std::string& RequirePath(const Config& cfg, const std::string& key) {
  if (!cfg.Has(key)) throw ConfigError(key, "a path is required");
  return cfg.GetString(key);
}

struct Context {
  Config cfg;
  std::filesystem::path out;
  uint64_t seed = 0;
};

ToyKind DatasetKind(const Config& cfg) {
  return ForKey("dataset", [&] { return ParseToyKind(cfg.GetString("dataset")); });
}

LossWeighting Weighting(const Config& cfg) {
  return ForKey("schedule.loss_weight",
                [&] { return ParseLossWeighting(cfg.GetString("schedule.loss_weight")); });
}

NoiseSchedule ScheduleFor(const Config& cfg, const ModelFile& model) {
  return MakeSchedule(model.schedule_kind, model.T, Weighting(cfg));
}

SamplerConfig SamplerFor(const Config& cfg, int T) {
  SamplerConfig sc;
  sc.num_steps = cfg.GetInt("sample.n_steps");
  sc.guidance_w = cfg.GetDouble("sample.guidance_w");
  sc.t_start = T;
  sc.t_end = 0;
  if (sc.num_steps < 1 || sc.num_steps > T) {
    throw ConfigError("sample.n_steps", "must lie in [1, T]");
  }
  return sc;
}

std::vector<Condition> AllConditions(const Architecture& arch) {
  std::vector<Condition> out;
  for (int i = 0; i < arch.num_conditions; ++i) out.push_back(Condition{i});
  return out;
}

Vec ParseVec(const std::string& key, const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::logic_error&) {
      throw ConfigError(key, "cannot parse '" + item + "' as a number");
    }
  }
  if (values.empty()) throw ConfigError(key, "expected a comma-separated vector");
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

RewardSpec RewardFor(const Config& cfg) {
  const std::string& kind = cfg.GetString("reward.kind");
  RewardSpec spec;
  if (kind == "mode_distance") {
    std::vector<Vec> targets;
    if (cfg.Has("reward.targets")) {
      std::stringstream ss(cfg.GetString("reward.targets"));
      std::string point;
      while (std::getline(ss, point, ';')) targets.push_back(ParseVec("reward.targets", point));
    } else if (DatasetKind(cfg) == ToyKind::kEightGaussians) {
      targets = EightGaussianCenters();
    } else {
      throw ConfigError("reward.targets", "required unless dataset = eight_gaussians");
    }
    spec = RewardSpec::ModeDistance(std::move(targets));
  } else if (kind == "ring_radius") {
    spec = RewardSpec::RingRadius(cfg.GetDouble("reward.radius"));
  } else if (kind == "linear") {
    spec = RewardSpec::Linear(ParseVec("reward.direction", cfg.GetString("reward.direction")));
  } else {
    throw ConfigError("reward.kind", "unknown reward '" + kind + "'");
  }
  ForKey("reward.kind", [&] {
    spec.Validate();
    return 0;
  });
  return spec;
}

DiffusionTrainConfig PretrainConfigFor(const Config& cfg, uint64_t seed) {
  DiffusionTrainConfig tc;
  tc.steps = cfg.GetInt("pretrain.steps");
  tc.batch_size = cfg.GetInt("pretrain.batch_size");
  tc.lr = cfg.GetDouble("pretrain.lr");
  tc.warmup_steps = cfg.GetInt("pretrain.warmup_steps");
  tc.min_lr_fraction = cfg.GetDouble("pretrain.min_lr_fraction");
  tc.cond_drop = cfg.GetDouble("pretrain.cond_drop");
  tc.seed = seed;
  return tc;
}

AlignConfig AlignConfigFor(const Config& cfg, uint64_t seed) {
  AlignConfig ac;
  ac.method = ForKey("align.method", [&] { return ParseAlignMethod(cfg.GetString("align.method")); });
  ac.beta = cfg.GetDouble("align.beta");
  ac.delta.kind = ForKey("align.delta", [&] { return ParseDeltaKind(cfg.GetString("align.delta")); });
  ac.delta.n = cfg.GetInt("align.delta.n");
  ac.delta.guidance_w_inv = cfg.GetDouble("align.delta.w_inv");
  ac.delta.max_iters = cfg.GetInt("align.delta.max_iters");
  ac.delta.tol = cfg.GetDouble("align.delta.tol");
  ac.delta.damping = cfg.GetDouble("align.delta.damping");
  ac.steps = cfg.GetInt("align.steps");
  ac.batch_pairs = cfg.GetInt("align.batch_pairs");
  ac.accum_steps = cfg.GetInt("align.accum_steps");
  ac.lr = cfg.GetDouble("align.lr");
  ac.warmup_steps = cfg.GetInt("align.warmup_steps");
  ac.ref_init = ForKey("align.ref_init", [&] { return ParseRefInit(cfg.GetString("align.ref_init")); });
  ac.t_min = cfg.GetInt("align.t_min");
  ac.seed = seed;
  return ac;
}

// Reference model and policy initialization for an alignment run.
std::pair<DenoiserParams, DenoiserParams> PrepareReference(const Config& cfg,
                                                           const DenoiserParams& base,
                                                           std::span<const PreferencePair> pairs,
                                                           const NoiseSchedule& s,
                                                           const AlignConfig& ac) {
  if (ac.ref_init == RefInit::kBase) return {base, base};
  DiffusionTrainConfig tc;
  tc.steps = cfg.GetInt("align.sft.steps");
  tc.lr = cfg.GetDouble("align.sft.lr");
  tc.batch_size = ac.batch_pairs;
  tc.warmup_steps = 0;
  tc.min_lr_fraction = 1.0;
  tc.seed = DeriveSeed(ac.seed, 0x5f7);
  LogInfo(fmt::format("sft reference init: {} steps on winners", tc.steps));
  DenoiserParams sft = SftRefInit(base, pairs, s, tc);
  return {sft, sft};
}

std::string TrainLogKey(const TrainLogRow& r) {
  return fmt::format("{},{},{},{},{}\n", r.step, r.lr, r.loss, r.sigmoid_arg_mean, r.wall_ms);
}

int RunPretrain(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const ToyKind kind = DatasetKind(cfg);
  const NoiseSchedule s = ForKey("schedule", [&] {
    return MakeSchedule(ParseScheduleKind(cfg.GetString("schedule.kind")),
                        cfg.GetInt("schedule.T"), Weighting(cfg));
  });
  Architecture arch;
  arch.input_dim = 2;
  arch.hidden_dims = cfg.GetIntList("model.hidden");
  arch.num_conditions = NumConditions(kind);
  arch.time_embed_dim = cfg.GetInt("model.time_embed_dim");
  ForKey("model.hidden", [&] {
    arch.Validate();
    return 0;
  });
  const auto data = ForKey("dataset.size", [&] {
    return GenToyDataset(kind, cfg.GetInt("dataset.size"), DeriveSeed(ctx.seed, 1));
  });
  const DiffusionTrainConfig tc = PretrainConfigFor(cfg, ctx.seed);
  LogInfo(fmt::format("pretraining {} params on {} for {} steps", arch.ParameterCount(),
                      ToString(kind), tc.steps));
  std::vector<TrainLogRow> log;
  const DenoiserParams params = ForKey("pretrain", [&] {
    return PretrainBase(data, arch, s, tc, [&](const TrainLogRow& r) { log.push_back(r); });
  });
  SaveModel(ctx.out / "base.model", {params, s.kind(), s.T()});
  WriteTrainLogCsv(ctx.out / "pretrain_log.csv", log);
  LogInfo("wrote " + (ctx.out / "base.model").string());
  return kExitOk;
}

int RunMakePrefs(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const RewardSpec spec = RewardFor(cfg);
  PairFile file;
  file.spec = spec;
  if (cfg.Has("prefs.input")) {
    const PairFile input = LoadPairs(cfg.GetString("prefs.input"));
    file.dim = input.dim;
    file.pairs = RelabelPairs(input.pairs, spec);
    LogInfo(fmt::format("relabeled {} pairs", file.pairs.size()));
  } else {
    const ModelFile model = LoadModel(RequirePath(cfg, "prefs.model"));
    const NoiseSchedule s = ScheduleFor(cfg, model);
    const MlpDenoiser net(model.params);
    const std::vector<Condition> conditions = AllConditions(model.params.arch);
    file.dim = model.params.arch.input_dim;
    file.pairs = ForKey("prefs.pairs_per_condition", [&] {
      return MakePreferencePairs(net, s, spec, conditions, cfg.GetInt("prefs.pairs_per_condition"),
                                 SamplerFor(cfg, s.T()), DeriveSeed(ctx.seed, 2));
    });
    LogInfo(fmt::format("sampled {} pairs", file.pairs.size()));
  }
  SavePairs(ctx.out / "pairs.jsonl", file);
  return kExitOk;
}

int RunAlignCmd(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const ModelFile base = LoadModel(RequirePath(cfg, "align.base"));
  const PairFile pairs = LoadPairs(RequirePath(cfg, "align.pairs"));
  const NoiseSchedule s = ScheduleFor(cfg, base);
  const AlignConfig ac = AlignConfigFor(cfg, ctx.seed);
  ForKey("align", [&] {
    ac.Validate(s.T());
    return 0;
  });
  auto [ref, init] = PrepareReference(cfg, base.params, pairs.pairs, s, ac);

  TrainerState state;
  if (cfg.Has("align.resume")) {
    Checkpoint ckpt = LoadCheckpoint(cfg.GetString("align.resume"));
    if (!(ckpt.state.params.arch == base.params.arch)) {
      throw ConfigError("align.resume", "checkpoint architecture differs from align.base");
    }
    state = std::move(ckpt.state);
    LogInfo(fmt::format("resuming at step {}", state.step));
  } else {
    state = StartAlign(init, ac);
  }
  std::string log = "step,lr,loss,sigmoid_arg_mean,wall_ms\n";
  LogInfo(fmt::format("aligning with {} for {} steps", ToString(ac.method), ac.steps));
  ForKey("align", [&] {
    RunAlign(state, ref, pairs.pairs, s, ac, ac.steps,
             [&](const TrainLogRow& r) { log += TrainLogKey(r); });
    return 0;
  });
  SaveModel(ctx.out / "aligned.model", {state.params, s.kind(), s.T()});
  SaveCheckpoint(ctx.out / "checkpoint.ckpt", {state, s.kind(), s.T()});
  WriteText(ctx.out / "train_log.csv", log);
  return kExitOk;
}

int RunEval(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const ModelFile a = LoadModel(RequirePath(cfg, "eval.model_a"));
  const ModelFile b = LoadModel(RequirePath(cfg, "eval.model_b"), &a.params.arch);
  if (a.schedule_kind != b.schedule_kind || a.T != b.T) {
    throw ConfigError("eval.model_b", "schedule differs from eval.model_a");
  }
  const NoiseSchedule s = ScheduleFor(cfg, a);
  const MlpDenoiser net_a(a.params);
  const MlpDenoiser net_b(b.params);
  const RewardSpec spec = RewardFor(cfg);
  const std::vector<Condition> conditions = AllConditions(a.params.arch);

  auto start = Clock::now();
  EvalReport report = ForKey("eval.trials", [&] {
    return WinRate(net_a, net_b, s, spec, conditions, cfg.GetInt("eval.trials"),
                   SamplerFor(cfg, s.T()), DeriveSeed(ctx.seed, 3));
  });
  report.wall_times["win_rate"] = Seconds(start);

  const std::vector<int> n_grid = cfg.GetIntList("eval.roundtrip.n");
  if (!n_grid.empty()) {
    const int m = cfg.GetInt("eval.roundtrip.samples");
    const auto data = ForKey("eval.roundtrip.samples", [&] {
      return GenToyDataset(DatasetKind(cfg), m, DeriveSeed(ctx.seed, 4));
    });
    Batch x0(m, a.params.arch.input_dim);
    std::vector<Condition> c(m);
    for (int i = 0; i < m; ++i) {
      x0.row(i) = data[i].x0.transpose();
      c[i] = data[i].c.id < a.params.arch.num_conditions ? data[i].c : Condition::Null();
    }
    start = Clock::now();
    report.roundtrip = ForKey("eval.roundtrip", [&] {
      return InversionRoundtrip(net_a, s, x0, cfg.GetInt("eval.roundtrip.t"), n_grid, c,
                                cfg.GetDouble("invert.guidance_w"));
    });
    report.wall_times["roundtrip"] = Seconds(start);
    report.seeds["roundtrip"] = DeriveSeed(ctx.seed, 4);
  }
  EmitReport(report, ctx.out);
  LogInfo(fmt::format("win_rate {:.4f} over {} trials", report.win_rate, report.n_trials));
  return kExitOk;
}

int RunInvertDemo(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const ModelFile model = LoadModel(RequirePath(cfg, "invert.model"));
  const NoiseSchedule s = ScheduleFor(cfg, model);
  const MlpDenoiser net(model.params);
  const int m = cfg.GetInt("invert.samples");
  const int t_target = cfg.GetInt("invert.t_target");
  const double w = cfg.GetDouble("invert.guidance_w");
  const auto data = ForKey("invert.samples", [&] {
    return GenToyDataset(DatasetKind(cfg), m, DeriveSeed(ctx.seed, 5));
  });
  std::string csv =
      "sample,n,condition,x0_norm,x0_t_norm,delta_t_norm,tau_t_norm,roundtrip_err\n";
  for (int n : cfg.GetIntList("invert.n_steps")) {
    for (int i = 0; i < m; ++i) {
      const Condition c = data[i].c;
      const InversionResult inv =
          ForKey("invert", [&] { return DdimInvert(net, s, data[i].x0, t_target, n, c, w); });
      SamplerConfig sc;
      sc.num_steps = inv.n_steps;
      sc.guidance_w = w;
      sc.t_start = t_target;
      sc.t_end = 0;
      const Vec back = DdimSample(net, s, inv.x_t, sc, c);
      csv += fmt::format("{},{},{},{},{},{},{},{}\n", i, n, c.id, data[i].x0.norm(),
                         inv.x0_t.norm(), inv.delta_t.norm(), inv.tau_t.norm(),
                         (back - data[i].x0).norm());
    }
  }
  WriteText(ctx.out / "invert_demo.csv", csv);
  return kExitOk;
}

int RunAblate(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const ModelFile base = LoadModel(RequirePath(cfg, "ablate.base"));
  const PairFile pairs = LoadPairs(RequirePath(cfg, "ablate.pairs"));
  const NoiseSchedule s = ScheduleFor(cfg, base);
  const RewardSpec spec = RewardFor(cfg);
  const MlpDenoiser base_net(base.params);
  const std::vector<Condition> conditions = AllConditions(base.params.arch);
  const SamplerConfig sc = SamplerFor(cfg, s.T());
  const int trials = cfg.GetInt("ablate.trials");

  AlignConfig proto = AlignConfigFor(cfg, ctx.seed);
  proto.method = AlignMethod::kInpo;
  proto.delta.kind = DeltaStrategy::Kind::kInversion;
  proto.steps = cfg.GetInt("ablate.steps");
  auto [ref, init] = PrepareReference(cfg, base.params, pairs.pairs, s, proto);

  std::string csv =
      "config_id,beta,n,w_inv,t_min,win_rate,mean_reward_aligned,mean_reward_base,final_loss,"
      "seconds\n";
  int runs = 0;
  for (double beta : cfg.GetDoubleList("ablate.beta")) {
    for (int n : cfg.GetIntList("ablate.n")) {
      for (double w_inv : cfg.GetDoubleList("ablate.w_inv")) {
        for (int t_min : cfg.GetIntList("ablate.t_min")) {
          AlignConfig ac = proto;
          ac.beta = beta;
          ac.delta.n = n;
          ac.delta.guidance_w_inv = w_inv;
          ac.t_min = t_min;
          const std::string id = fmt::format("b{}_n{}_w{}_t{}", beta, n, w_inv, t_min);
          double final_loss = 0.0;
          const auto start = Clock::now();
          const DenoiserParams aligned = ForKey("ablate", [&] {
            ac.Validate(s.T());
            return Align(init, ref, pairs.pairs, s, ac,
                         [&](const TrainLogRow& r) { final_loss = r.loss; });
          });
          const double seconds = Seconds(start);
          const MlpDenoiser net(aligned);
          const EvalReport report =
              WinRate(net, base_net, s, spec, conditions, trials, sc, DeriveSeed(ctx.seed, 6));
          csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", id, beta, n, w_inv, t_min,
                             report.win_rate, report.mean_reward_a, report.mean_reward_b,
                             final_loss, seconds);
          LogInfo(fmt::format("ablate {} win_rate {:.4f} ({:.1f}s)", id, report.win_rate,
                              seconds));
          ++runs;
        }
      }
    }
  }
  if (runs == 0) throw ConfigError("ablate", "empty grid");
  WriteText(ctx.out / "ablate.csv", csv);
  return kExitOk;
}

}  // namespace

std::string_view ToString(Subcommand cmd) {
  switch (cmd) {
    case Subcommand::kPretrain:
      return "pretrain";
    case Subcommand::kMakePrefs:
      return "make-prefs";
    case Subcommand::kAlign:
      return "align";
    case Subcommand::kEval:
      return "eval";
    case Subcommand::kInvertDemo:
      return "invert-demo";
    case Subcommand::kAblate:
      return "ablate";
  }
  return "unknown";
}

ParsedArgs ParseArgs(int argc, const char* const* argv) {
  CLI::App app{"Inversion preference optimization for toy diffusion models", "inpo"};
  app.require_subcommand(1);
  CliInvocation inv;
  std::string config;
  std::string out = ".";
  uint64_t seed = 0;
  const std::vector<std::pair<Subcommand, std::string>> commands = {
      {Subcommand::kPretrain, "Train the base denoiser on a toy dataset"},
      {Subcommand::kMakePrefs, "Sample and label preference pairs (or relabel prefs.input)"},
      {Subcommand::kAlign, "Align a base model on preference pairs"},
      {Subcommand::kEval, "Win rate and inversion round-trip report"},
      {Subcommand::kInvertDemo, "Dump inversion results per sample and step count"},
      {Subcommand::kAblate, "Grid over beta, inversion steps, inversion guidance and t_min"},
  };
  std::vector<std::pair<Subcommand, CLI::App*>> subs;
  for (const auto& [cmd, help] : commands) {
    CLI::App* sub = app.add_subcommand(std::string(ToString(cmd)), help);
    sub->add_option("--config", config, "Config file of key = value lines");
    sub->add_option("--set", inv.overrides, "Override KEY=VALUE (repeatable)");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--seed", seed, "Master seed (overrides the seed key)");
    subs.emplace_back(cmd, sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return {std::nullopt, code == 0 ? kExitOk : kExitConfig};
  }
  for (const auto& [cmd, sub] : subs) {
    if (sub->parsed()) {
      inv.subcommand = cmd;
      if (sub->count("--seed") > 0) inv.seed = seed;
    }
  }
  inv.config_path = config;
  inv.out_dir = out;
  return {inv, kExitOk};
}

int Run(const CliInvocation& invocation) {
  try {
    SetLogLevelFromEnv();
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << kLogLevelEnv << ": " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    Context ctx;
    if (!invocation.config_path.empty()) ctx.cfg.LoadFile(invocation.config_path);
    for (const std::string& o : invocation.overrides) ctx.cfg.Apply(o);
    if (invocation.seed) ctx.cfg.Set("seed", std::to_string(*invocation.seed));
    ctx.seed = ctx.cfg.GetU64("seed");
    ctx.out = invocation.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(ctx.out, ec);
    if (ec) throw IoError("cannot create " + ctx.out.string() + ": " + ec.message());
    WriteText(ctx.out / "resolved_config.txt", ctx.cfg.Dump());
    switch (invocation.subcommand) {
      case Subcommand::kPretrain:
        return RunPretrain(ctx);
      case Subcommand::kMakePrefs:
        return RunMakePrefs(ctx);
      case Subcommand::kAlign:
        return RunAlignCmd(ctx);
      case Subcommand::kEval:
        return RunEval(ctx);
      case Subcommand::kInvertDemo:
        return RunInvertDemo(ctx);
      case Subcommand::kAblate:
        return RunAblate(ctx);
    }
  } catch (const ConfigError& e) {
    LogError(fmt::format("config error: {}", e.what()));
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    LogError(fmt::format("config error: {}", e.what()));
    return kExitConfig;
  } catch (const NumericError& e) {
    LogError(fmt::format("numeric error: {}", e.what()));
    return kExitNumeric;
  } catch (const TrainingError& e) {
    LogError(fmt::format("training error: {}", e.what()));
    return kExitNumeric;
  } catch (const Error& e) {
    LogError(fmt::format("i/o error: {}", e.what()));
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace inpo::cli
