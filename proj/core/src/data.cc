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

#include "inpo/data.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "inpo/errors.h"
#include "inpo/rng.h"
#include "json_util.h"

namespace inpo {
namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

Vec Standardize(ToyKind kind, double x, double y) {
  Vec v(2);
  const double scale = StandardizationScale(kind);
  if (kind == ToyKind::kTwoMoons) {
    v << (x - 0.5) / scale, (y - 0.25) / scale;
  } else {
    v << x / scale, y / scale;
  }
  return v;
}

}  // namespace

std::string_view ToString(ToyKind kind) {
  switch (kind) {
    case ToyKind::kEightGaussians:
      return "eight_gaussians";
    case ToyKind::kTwoMoons:
      return "two_moons";
    case ToyKind::kRing:
      return "ring";
  }
  return "unknown";
}

ToyKind ParseToyKind(std::string_view name) {
  if (name == "eight_gaussians") return ToyKind::kEightGaussians;
  if (name == "two_moons") return ToyKind::kTwoMoons;
  if (name == "ring") return ToyKind::kRing;
  throw InvalidArgument("unknown dataset kind '" + std::string(name) + "'");
}

int NumConditions(ToyKind kind) {
  switch (kind) {
    case ToyKind::kEightGaussians:
      return 8;
    case ToyKind::kTwoMoons:
      return 2;
    case ToyKind::kRing:
      return 4;
  }
  return 1;
}

double StandardizationScale(ToyKind kind) {
  switch (kind) {
    case ToyKind::kEightGaussians:
      return std::sqrt(kEightGaussiansRadius * kEightGaussiansRadius / 2.0 +
                       kEightGaussiansStd * kEightGaussiansStd);
    case ToyKind::kTwoMoons: {
      const double var_x = 0.75;
      const double gap = 4.0 / kPi - 0.5;
      const double var_y = 0.5 - 4.0 / (kPi * kPi) + gap * gap / 4.0;
      return std::sqrt((var_x + var_y) / 2.0 + kMoonsNoise * kMoonsNoise);
    }
    case ToyKind::kRing:
      return std::sqrt((kRingInner * kRingInner + kRingInner * kRingOuter +
                        kRingOuter * kRingOuter) /
                       6.0);
  }
  return 1.0;
}

std::vector<Vec> EightGaussianCenters() {
  std::vector<Vec> centers;
  for (int k = 0; k < 8; ++k) {
    const double angle = k * kPi / 4.0;
    centers.push_back(Standardize(ToyKind::kEightGaussians,
                                  kEightGaussiansRadius * std::cos(angle),
                                  kEightGaussiansRadius * std::sin(angle)));
  }
  return centers;
}

double EightGaussianModeStd() {
  return kEightGaussiansStd / StandardizationScale(ToyKind::kEightGaussians);
}

std::pair<double, double> RingAnnulus() {
  const double scale = StandardizationScale(ToyKind::kRing);
  return {kRingInner / scale, kRingOuter / scale};
}

std::vector<LabeledSample> GenToyDataset(ToyKind kind, int n, uint64_t seed) {
  if (n < 1) throw InvalidArgument("gen_toy_dataset: n must be >= 1");
  Rng rng(DeriveSeed(seed, static_cast<uint64_t>(kind) + 0x7a11));
  std::vector<LabeledSample> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    switch (kind) {
      case ToyKind::kEightGaussians: {
        const int mode = rng.UniformInt(0, 7);
        const double angle = mode * kPi / 4.0;
        const double x = kEightGaussiansRadius * std::cos(angle) + kEightGaussiansStd * rng.Normal();
        const double y = kEightGaussiansRadius * std::sin(angle) + kEightGaussiansStd * rng.Normal();
        out.push_back({Standardize(kind, x, y), Condition{mode}});
        break;
      }
      case ToyKind::kTwoMoons: {
        const int moon = rng.UniformInt(0, 1);
        const double theta = kPi * rng.Uniform();
        double x = std::cos(theta);
        double y = std::sin(theta);
        if (moon == 1) {
          x = 1.0 - x;
          y = 0.5 - y;
        }
        x += kMoonsNoise * rng.Normal();
        y += kMoonsNoise * rng.Normal();
        out.push_back({Standardize(kind, x, y), Condition{moon}});
        break;
      }
      case ToyKind::kRing: {
        const double r = kRingInner + (kRingOuter - kRingInner) * rng.Uniform();
        const double angle = 2.0 * kPi * rng.Uniform();
        const int quadrant = std::min(3, static_cast<int>(angle / (kPi / 2.0)));
        out.push_back({Standardize(kind, r * std::cos(angle), r * std::sin(angle)),
                       Condition{quadrant}});
        break;
      }
    }
  }
  return out;
}

int NearestMode(const Vec& x) {
  static const std::vector<Vec> centers = EightGaussianCenters();
  int best = 0;
  double best_d = (x - centers[0]).squaredNorm();
  for (int k = 1; k < 8; ++k) {
    const double d = (x - centers[k]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

RewardSpec RewardSpec::ModeDistance(std::vector<Vec> targets) {
  RewardSpec spec;
  spec.kind = Kind::kModeDistance;
  spec.targets = std::move(targets);
  return spec;
}

RewardSpec RewardSpec::RingRadius(double radius) {
  RewardSpec spec;
  spec.kind = Kind::kRingRadius;
  spec.radius = radius;
  return spec;
}

RewardSpec RewardSpec::Linear(Vec direction) {
  RewardSpec spec;
  spec.kind = Kind::kLinear;
  spec.direction = std::move(direction);
  return spec;
}

void RewardSpec::Validate() const {
  switch (kind) {
    case Kind::kModeDistance:
      if (targets.empty()) throw InvalidArgument("mode_distance reward needs targets");
      for (const Vec& t : targets) {
        if (t.size() == 0 || !t.allFinite()) {
          throw InvalidArgument("mode_distance reward has an invalid target");
        }
      }
      break;
    case Kind::kRingRadius:
      if (!std::isfinite(radius) || radius < 0.0) {
        throw InvalidArgument("ring_radius reward needs a finite non-negative radius");
      }
      break;
    case Kind::kLinear:
      if (direction.size() == 0 || !direction.allFinite()) {
        throw InvalidArgument("linear reward needs a finite direction");
      }
      break;
  }
}

bool operator==(const RewardSpec& a, const RewardSpec& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case RewardSpec::Kind::kModeDistance:
      if (a.targets.size() != b.targets.size()) return false;
      for (size_t i = 0; i < a.targets.size(); ++i) {
        if (a.targets[i].size() != b.targets[i].size() || a.targets[i] != b.targets[i]) {
          return false;
        }
      }
      return true;
    case RewardSpec::Kind::kRingRadius:
      return a.radius == b.radius;
    case RewardSpec::Kind::kLinear:
      return a.direction.size() == b.direction.size() && a.direction == b.direction;
  }
  return false;
}

std::string_view ToString(RewardSpec::Kind kind) {
  switch (kind) {
    case RewardSpec::Kind::kModeDistance:
      return "mode_distance";
    case RewardSpec::Kind::kRingRadius:
      return "ring_radius";
    case RewardSpec::Kind::kLinear:
      return "linear";
  }
  return "unknown";
}

double Score(const RewardSpec& spec, const Vec& x0, Condition c) {
  switch (spec.kind) {
    case RewardSpec::Kind::kModeDistance: {
      if (c.is_null() || c.id < 0 || c.id >= static_cast<int>(spec.targets.size())) {
        throw InvalidArgument("score: no mode_distance target for condition " +
                              std::to_string(c.id));
      }
      const Vec& target = spec.targets[c.id];
      if (target.size() != x0.size()) throw InvalidArgument("score: dimension mismatch");
      return -(x0 - target).norm();
    }
    case RewardSpec::Kind::kRingRadius:
      return -std::abs(x0.norm() - spec.radius);
    case RewardSpec::Kind::kLinear:
      if (spec.direction.size() != x0.size()) throw InvalidArgument("score: dimension mismatch");
      return spec.direction.dot(x0);
  }
  return 0.0;
}

PreferencePair MakePair(Condition c, Vec a, Vec b, double reward_a, double reward_b,
                        uint64_t seed, PairSource source) {
  PreferencePair pair;
  pair.condition = c;
  pair.seed = seed;
  pair.source = source;
  pair.tie = reward_a == reward_b;
  if (reward_b > reward_a) {
    pair.winner = std::move(b);
    pair.loser = std::move(a);
    pair.reward_w = reward_b;
    pair.reward_l = reward_a;
  } else {
    pair.winner = std::move(a);
    pair.loser = std::move(b);
    pair.reward_w = reward_a;
    pair.reward_l = reward_b;
  }
  return pair;
}

std::vector<PreferencePair> MakePreferencePairs(const NoiseModel& model, const NoiseSchedule& s,
                                                const RewardSpec& spec,
                                                std::span<const Condition> conditions,
                                                int pairs_per_condition,
                                                const SamplerConfig& sampler_cfg, uint64_t seed) {
  spec.Validate();
  if (pairs_per_condition < 1) {
    throw InvalidArgument("make_preference_pairs: pairs_per_condition must be >= 1");
  }
  std::vector<PreferencePair> pairs;
  pairs.reserve(conditions.size() * static_cast<size_t>(pairs_per_condition));
  for (size_t ci = 0; ci < conditions.size(); ++ci) {
    const Condition c = conditions[ci];
    Rng rng(DeriveSeed(seed, ci));
    const Batch latents = rng.NormalBatch(2 * pairs_per_condition, model.dim());
    const std::vector<Condition> conds(latents.rows(), c);
    const Batch samples = DdimSample(model, s, latents, sampler_cfg, conds);
    for (int j = 0; j < pairs_per_condition; ++j) {
      Vec a = samples.row(2 * j).transpose();
      Vec b = samples.row(2 * j + 1).transpose();
      const double ra = Score(spec, a, c);
      const double rb = Score(spec, b, c);
      pairs.push_back(MakePair(c, std::move(a), std::move(b), ra, rb,
                               DeriveSeed(seed, ci, static_cast<uint64_t>(j) + 1),
                               PairSource::kModelSampled));
    }
  }
  return pairs;
}

std::vector<PreferencePair> RelabelPairs(std::span<const PreferencePair> pairs,
                                         const RewardSpec& spec) {
  if (pairs.empty()) throw InvalidArgument("relabel_pairs: no pairs");
  spec.Validate();
  std::vector<PreferencePair> out;
  out.reserve(pairs.size());
  for (const PreferencePair& p : pairs) {
    const double rw = Score(spec, p.winner, p.condition);
    const double rl = Score(spec, p.loser, p.condition);
    if (rw == p.reward_w && rl == p.reward_l) {
      out.push_back(p);
      continue;
    }
    out.push_back(MakePair(p.condition, p.winner, p.loser, rw, rl, p.seed, PairSource::kExternal));
  }
  return out;
}

void SavePairs(const std::filesystem::path& path, const PairFile& file) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  json header = {{"schema_version", file.schema_version},
                 {"reward_spec", internal::RewardSpecToJson(file.spec)},
                 {"dim", file.dim}};
  out << header.dump() << '\n';
  for (const PreferencePair& p : file.pairs) {
    json rec = {{"c", p.condition.id},
                {"w", internal::VecToJson(p.winner)},
                {"l", internal::VecToJson(p.loser)},
                {"rw", p.reward_w},
                {"rl", p.reward_l},
                {"seed", p.seed},
                {"tie", p.tie}};
    if (p.source == PairSource::kExternal) rec["src"] = "external";
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

PairFile LoadPairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  PairFile file;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed pair file: ") + e.what(), line_no);
    }
    try {
      if (!have_header) {
        file.schema_version = j.at("schema_version").get<int>();
        if (file.schema_version != kPairSchemaVersion) {
          throw VersionError("pair file schema version " + std::to_string(file.schema_version) +
                             " is not supported (expected " +
                             std::to_string(kPairSchemaVersion) + ")");
        }
        file.spec = internal::RewardSpecFromJson(j.at("reward_spec"));
        file.dim = j.at("dim").get<int>();
        have_header = true;
        continue;
      }
      PreferencePair p;
      p.condition = Condition{j.at("c").get<int>()};
      p.winner = internal::VecFromJson(j.at("w"));
      p.loser = internal::VecFromJson(j.at("l"));
      p.reward_w = j.at("rw").get<double>();
      p.reward_l = j.at("rl").get<double>();
      p.seed = j.at("seed").get<uint64_t>();
      p.tie = j.at("tie").get<bool>();
      p.source = PairSource::kModelSampled;
      if (j.contains("src")) {
        const std::string src = j.at("src").get<std::string>();
        if (src == "external") {
          p.source = PairSource::kExternal;
        } else if (src != "model_sampled") {
          throw ParseError("unknown pair source '" + src + "'", line_no);
        }
      }
      if (p.winner.size() != file.dim || p.loser.size() != file.dim) {
        throw ParseError("pair sample dimension disagrees with header", line_no);
      }
      if (p.reward_w < p.reward_l) throw ParseError("pair has reward_w < reward_l", line_no);
      file.pairs.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed pair record: ") + e.what(), line_no);
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string("malformed pair record: ") + e.what(), line_no);
    }
  }
  if (!have_header) throw ParseError("pair file has no header", line_no);
  return file;
}

}  // namespace inpo
