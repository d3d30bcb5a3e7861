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

#ifndef INPO_RNG_H_
#define INPO_RNG_H_

#include <cstdint>
#include <random>

#include "inpo/types.h"

namespace inpo {

// Mixes a master seed with stream coordinates into an independent seed
// (splitmix64 finalizer applied per coordinate).
uint64_t DeriveSeed(uint64_t master, uint64_t stream, uint64_t index = 0);

// Deterministic random stream. Every draw consumes the engine in a fixed
// order, so two streams built from the same seed agree draw for draw.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double Normal() { return normal_(engine_); }
  double Uniform() { return uniform_(engine_); }
  // Uniform integer in [lo, hi].
  int UniformInt(int lo, int hi);
  Vec NormalVec(int dim);
  Batch NormalBatch(int rows, int cols);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace inpo

#endif  // INPO_RNG_H_
