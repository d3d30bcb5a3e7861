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

#ifndef INPO_DATA_H_
#define INPO_DATA_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "inpo/denoiser.h"
#include "inpo/sampler.h"
#include "inpo/schedule.h"
#include "inpo/types.h"

namespace inpo {

enum class ToyKind { kEightGaussians, kTwoMoons, kRing };

std::string_view ToString(ToyKind kind);
ToyKind ParseToyKind(std::string_view name);

struct LabeledSample {
  Vec x0;
  Condition c;
};

// Raw (pre-standardization) generator constants.
inline constexpr double kEightGaussiansRadius = 2.0;
inline constexpr double kEightGaussiansStd = 0.25;
inline constexpr double kRingInner = 0.8;
inline constexpr double kRingOuter = 1.2;
inline constexpr double kMoonsNoise = 0.1;

// Number of condition labels each toy kind emits: one per mode for the
// eight Gaussians, one per moon, one per quadrant of the ring.
int NumConditions(ToyKind kind);

// Scalar that maps raw samples to unit overall scale (computed in closed
// form from the generator, so standardization is deterministic).
double StandardizationScale(ToyKind kind);

// Standardized centers of the eight Gaussian modes, indexed by condition.
std::vector<Vec> EightGaussianCenters();
// Standardized mode spread (per-coordinate standard deviation).
double EightGaussianModeStd();
// Standardized annulus of the ring dataset.
std::pair<double, double> RingAnnulus();

// Deterministic in (kind, n, seed). Throws InvalidArgument for n < 1.
std::vector<LabeledSample> GenToyDataset(ToyKind kind, int n, uint64_t seed);

// Index of the nearest eight-Gaussian mode.
int NearestMode(const Vec& x);

// Programmatic stand-in for a preference evaluator. Higher is better.
struct RewardSpec {
  enum class Kind { kModeDistance, kRingRadius, kLinear };

  Kind kind = Kind::kModeDistance;
  std::vector<Vec> targets;  // kModeDistance: one target point per condition
  double radius = 1.0;       // kRingRadius
  Vec direction;             // kLinear

  static RewardSpec ModeDistance(std::vector<Vec> targets);
  static RewardSpec RingRadius(double radius);
  static RewardSpec Linear(Vec direction);

  // Throws InvalidArgument on non-finite or missing parameters.
  void Validate() const;
  friend bool operator==(const RewardSpec&, const RewardSpec&);
};

std::string_view ToString(RewardSpec::Kind kind);

// mode_distance: -||x0 - target[c]||; ring_radius: -| ||x0|| - radius |;
// linear: direction . x0. Throws InvalidArgument when c has no target.
double Score(const RewardSpec& spec, const Vec& x0, Condition c);

enum class PairSource { kModelSampled, kExternal };

struct PreferencePair {
  Condition condition;
  Vec winner;
  Vec loser;
  double reward_w = 0.0;
  double reward_l = 0.0;
  uint64_t seed = 0;
  PairSource source = PairSource::kModelSampled;
  // Equal rewards; the original insertion order is kept and training skips it.
  bool tie = false;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

// Orders (a, b) by reward so that reward_w >= reward_l; equal rewards keep
// the given order and set the tie flag.
PreferencePair MakePair(Condition c, Vec a, Vec b, double reward_a, double reward_b,
                        uint64_t seed, PairSource source);

// For every condition, samples pairs_per_condition pairs of independent
// latents through DDIM and labels each pair with `spec`. Each condition uses
// its own stream derived from `seed`.
std::vector<PreferencePair> MakePreferencePairs(const NoiseModel& model, const NoiseSchedule& s,
                                                const RewardSpec& spec,
                                                std::span<const Condition> conditions,
                                                int pairs_per_condition,
                                                const SamplerConfig& sampler_cfg, uint64_t seed);

// Rescores both sides under `spec` and swaps where the order flips. Pairs
// whose rewards change are marked as externally labeled.
std::vector<PreferencePair> RelabelPairs(std::span<const PreferencePair> pairs,
                                         const RewardSpec& spec);

inline constexpr int kPairSchemaVersion = 1;

struct PairFile {
  int schema_version = kPairSchemaVersion;
  RewardSpec spec;
  int dim = 0;
  std::vector<PreferencePair> pairs;
};

// Line-delimited JSON: a header object {schema_version, reward_spec, dim},
// then one object per pair {c, w, l, rw, rl, seed, tie} plus an optional
// "src": "external".
void SavePairs(const std::filesystem::path& path, const PairFile& file);
// Throws ParseError with the 1-based line number for malformed lines and
// VersionError for a schema mismatch.
PairFile LoadPairs(const std::filesystem::path& path);

}  // namespace inpo

#endif  // INPO_DATA_H_
