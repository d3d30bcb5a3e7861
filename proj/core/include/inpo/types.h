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

#ifndef INPO_TYPES_H_
#define INPO_TYPES_H_

#include <Eigen/Core>

namespace inpo {

// A single sample, latent or noise vector.
using Vec = Eigen::VectorXd;

// A batch of samples, one per row.
using Batch = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Class label fed to the denoiser. The null condition selects the
// unconditional branch used for classifier-free guidance.
struct Condition {
  static constexpr int kNullId = -1;

  int id = kNullId;

  static constexpr Condition Null() { return Condition{kNullId}; }
  constexpr bool is_null() const { return id == kNullId; }
  friend constexpr bool operator==(Condition, Condition) = default;
};

// True when every coefficient is finite.
template <typename Derived>
bool AllFinite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace inpo

#endif  // INPO_TYPES_H_
