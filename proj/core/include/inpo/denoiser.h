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

#ifndef INPO_DENOISER_H_
#define INPO_DENOISER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "inpo/schedule.h"
#include "inpo/types.h"

namespace inpo {

// Shape of the noise-prediction MLP. The network input is the sample
// concatenated with a sinusoidal time embedding and a learned condition
// embedding, both of width time_embed_dim.
struct Architecture {
  int input_dim = 2;
  std::vector<int> hidden_dims = {64, 64};
  int num_conditions = 1;
  int time_embed_dim = 16;

  // Throws InvalidArgument on non-positive dims or an odd embedding width.
  void Validate() const;
  int64_t ParameterCount() const;
  int NetworkInputDim() const { return input_dim + 2 * time_embed_dim; }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// Flat parameter vector in declaration order:
//   condition embedding, (num_conditions + 1) x time_embed_dim, row-major;
//     the last row belongs to the null condition
//   per hidden layer: weight (out x in, row-major), bias (out)
//   output layer: weight (input_dim x last hidden, row-major), bias
struct DenoiserParams {
  static constexpr uint32_t kFormatVersion = 1;

  Architecture arch;
  Eigen::VectorXd values;
};

// Deterministic fan-in scaled initialization. Same (arch, seed) gives
// bit-identical values.
DenoiserParams InitDenoiser(const Architecture& arch, uint64_t seed);

// Anything that predicts noise for a batch of latents. Times are continuous
// so the reference ODE integrator can evaluate between grid points; the
// sampler only ever passes integers.
class NoiseModel {
 public:
  virtual ~NoiseModel() = default;

  virtual int dim() const = 0;

  // Unguided prediction for the given per-row conditions (null rows give the
  // unconditional branch).
  virtual Batch PredictRaw(const Batch& x, std::span<const double> t,
                           std::span<const Condition> c) const = 0;

  // Classifier-free guidance: w == 0 is the unconditional branch, w == 1 the
  // conditional branch, otherwise eps_u + w * (eps_c - eps_u).
  Batch Predict(const Batch& x, std::span<const double> t, std::span<const Condition> c,
                double guidance_w) const;
};

// NoiseModel view over a parameter set. Holds a reference; the params must
// outlive it.
class MlpDenoiser final : public NoiseModel {
 public:
  explicit MlpDenoiser(const DenoiserParams& params);

  int dim() const override { return params_.arch.input_dim; }
  Batch PredictRaw(const Batch& x, std::span<const double> t,
                   std::span<const Condition> c) const override;

  const DenoiserParams& params() const { return params_; }

 private:
  const DenoiserParams& params_;
};

// Single-sample convenience over MlpDenoiser.
Vec PredictNoise(const DenoiserParams& p, const Vec& x_t, double t, Condition c,
                 double guidance_w);
Vec PredictNoise(const NoiseModel& model, const Vec& x_t, double t, Condition c,
                 double guidance_w);

// Activations kept for the reverse pass.
struct ForwardCache {
  Batch input;
  std::vector<Batch> pre_activations;
  std::vector<Batch> activations;
  std::vector<int> embedding_rows;
};

// Conditional forward pass. Fills `cache` when non-null.
Batch Forward(const DenoiserParams& p, const Batch& x, std::span<const double> t,
              std::span<const Condition> c, ForwardCache* cache);

// Gradient of sum(d_out .* outputs) with respect to every parameter.
Eigen::VectorXd Backward(const DenoiserParams& p, const ForwardCache& cache,
                         const Batch& d_out);

// Result of evaluating a scalar loss on network outputs: the loss, its
// gradient with respect to the outputs, and named terms for diagnostics.
struct LossEvaluation {
  double value = 0.0;
  Batch d_outputs;
  std::vector<std::pair<std::string, double>> terms;
};

// A differentiable scalar loss over a fixed batch. `evaluate` receives the
// conditional network outputs for (inputs, t, c).
struct OutputLoss {
  Batch inputs;
  std::vector<double> t;
  std::vector<Condition> c;
  std::function<LossEvaluation(const Batch& outputs)> evaluate;
};

struct ValueAndGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

// Exact reverse-mode gradient of loss.evaluate with respect to p. Throws
// NumericError naming the first non-finite term when the loss is not finite.
ValueAndGradient LossGradient(const DenoiserParams& p, const OutputLoss& loss);

// Checkpoint file: magic, version, architecture, schedule kind and T,
// followed by the little-endian float64 parameters.
struct ModelFile {
  DenoiserParams params;
  ScheduleKind schedule_kind = ScheduleKind::kCosine;
  int T = 1000;
};

void WriteModel(std::ostream& out, const ModelFile& model);
// Throws VersionError on a bad magic/version or an architecture that does
// not match `expected` (when given), IoError on truncation.
ModelFile ReadModel(std::istream& in, const Architecture* expected = nullptr);
void SaveModel(const std::filesystem::path& path, const ModelFile& model);
ModelFile LoadModel(const std::filesystem::path& path, const Architecture* expected = nullptr);

}  // namespace inpo

#endif  // INPO_DENOISER_H_
