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

#include "inpo/denoiser.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "binary_io.h"
#include "inpo/errors.h"
#include "inpo/rng.h"

namespace inpo {
namespace {

using RowMajorMap = Eigen::Map<const Batch>;
using MutableRowMajorMap = Eigen::Map<Batch>;

constexpr std::string_view kModelMagic = "INPOMDL1";

struct Layer {
  int64_t weight_offset;
  int64_t bias_offset;
  int in;
  int out;
};

// Offsets of every block inside the flat parameter vector.
struct Layout {
  int64_t embedding_offset = 0;
  std::vector<Layer> layers;  // hidden layers followed by the output layer
  int64_t total = 0;
};

Layout MakeLayout(const Architecture& arch) {
  Layout layout;
  int64_t offset = static_cast<int64_t>(arch.num_conditions + 1) * arch.time_embed_dim;
  int in = arch.NetworkInputDim();
  auto add = [&](int out) {
    Layer layer{offset, offset + static_cast<int64_t>(out) * in, in, out};
    offset = layer.bias_offset + out;
    layout.layers.push_back(layer);
    in = out;
  };
  for (int h : arch.hidden_dims) add(h);
  add(arch.input_dim);
  layout.total = offset;
  return layout;
}

double Silu(double z) { return z / (1.0 + std::exp(-z)); }

double SiluDerivative(double z) {
  const double s = 1.0 / (1.0 + std::exp(-z));
  return s * (1.0 + z * (1.0 - s));
}

int EmbeddingRow(const Architecture& arch, Condition c) {
  if (c.is_null()) return arch.num_conditions;
  if (c.id < 0 || c.id >= arch.num_conditions) {
    throw InvalidArgument("condition id " + std::to_string(c.id) + " outside [0, " +
                          std::to_string(arch.num_conditions) + ")");
  }
  return c.id;
}

void WriteTimeEmbedding(double t, int width, double* out) {
  const int half = width / 2;
  for (int k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * k / half);
    out[k] = std::sin(t * freq);
    out[half + k] = std::cos(t * freq);
  }
}

void CheckBatch(const Architecture& arch, const Batch& x, std::span<const double> t,
                std::span<const Condition> c) {
  if (x.cols() != arch.input_dim) {
    throw InvalidArgument("denoiser input has dimension " + std::to_string(x.cols()) +
                          ", expected " + std::to_string(arch.input_dim));
  }
  if (static_cast<Eigen::Index>(t.size()) != x.rows() ||
      static_cast<Eigen::Index>(c.size()) != x.rows()) {
    throw InvalidArgument("denoiser batch: timestep/condition count does not match rows");
  }
  if (!x.allFinite()) throw NumericError("denoiser input contains non-finite values");
  for (double ti : t) {
    if (!std::isfinite(ti) || ti < 0.0) {
      throw NumericError("denoiser timestep " + std::to_string(ti) + " is invalid");
    }
  }
}

}  // namespace

void Architecture::Validate() const {
  if (input_dim <= 0) throw InvalidArgument("architecture: input_dim must be positive");
  if (num_conditions < 1) throw InvalidArgument("architecture: num_conditions must be >= 1");
  if (time_embed_dim <= 0 || time_embed_dim % 2 != 0) {
    throw InvalidArgument("architecture: time_embed_dim must be positive and even");
  }
  if (hidden_dims.empty()) throw InvalidArgument("architecture: need at least one hidden layer");
  for (int h : hidden_dims) {
    if (h <= 0) throw InvalidArgument("architecture: hidden dims must be positive");
  }
}

int64_t Architecture::ParameterCount() const { return MakeLayout(*this).total; }

DenoiserParams InitDenoiser(const Architecture& arch, uint64_t seed) {
  arch.Validate();
  const Layout layout = MakeLayout(arch);
  DenoiserParams p{arch, Eigen::VectorXd::Zero(layout.total)};
  Rng rng(DeriveSeed(seed, 0x1d17));
  for (int64_t i = 0; i < layout.layers.front().weight_offset; ++i) p.values[i] = rng.Normal();
  for (const Layer& layer : layout.layers) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (int64_t i = 0; i < static_cast<int64_t>(layer.in) * layer.out; ++i) {
      p.values[layer.weight_offset + i] = scale * rng.Normal();
    }
  }
  return p;
}

Batch NoiseModel::Predict(const Batch& x, std::span<const double> t,
                          std::span<const Condition> c, double guidance_w) const {
  if (!std::isfinite(guidance_w)) throw NumericError("guidance weight is not finite");
  if (guidance_w == 0.0) {
    const std::vector<Condition> null(static_cast<size_t>(x.rows()), Condition::Null());
    return PredictRaw(x, t, null);
  }
  Batch conditional = PredictRaw(x, t, c);
  if (guidance_w == 1.0) return conditional;
  const std::vector<Condition> null(static_cast<size_t>(x.rows()), Condition::Null());
  const Batch unconditional = PredictRaw(x, t, null);
  return unconditional + guidance_w * (conditional - unconditional);
}

MlpDenoiser::MlpDenoiser(const DenoiserParams& params) : params_(params) {
  params_.arch.Validate();
  if (params_.values.size() != params_.arch.ParameterCount()) {
    throw InvalidArgument("denoiser parameter vector does not match its architecture");
  }
}

Batch MlpDenoiser::PredictRaw(const Batch& x, std::span<const double> t,
                              std::span<const Condition> c) const {
  return Forward(params_, x, t, c, nullptr);
}

Vec PredictNoise(const NoiseModel& model, const Vec& x_t, double t, Condition c,
                 double guidance_w) {
  if (x_t.size() != model.dim()) {
    throw InvalidArgument("predict_noise: sample has dimension " + std::to_string(x_t.size()) +
                          ", expected " + std::to_string(model.dim()));
  }
  const Batch x = x_t.transpose();
  const double times[] = {t};
  const Condition conds[] = {c};
  return model.Predict(x, times, conds, guidance_w).row(0).transpose();
}

Vec PredictNoise(const DenoiserParams& p, const Vec& x_t, double t, Condition c,
                 double guidance_w) {
  return PredictNoise(MlpDenoiser(p), x_t, t, c, guidance_w);
}

Batch Forward(const DenoiserParams& p, const Batch& x, std::span<const double> t,
              std::span<const Condition> c, ForwardCache* cache) {
  const Architecture& arch = p.arch;
  CheckBatch(arch, x, t, c);
  const Layout layout = MakeLayout(arch);
  const Eigen::Index rows = x.rows();
  const int width = arch.time_embed_dim;

  Batch input(rows, arch.NetworkInputDim());
  input.leftCols(arch.input_dim) = x;
  const RowMajorMap embedding(p.values.data() + layout.embedding_offset,
                              arch.num_conditions + 1, width);
  std::vector<int> embedding_rows(static_cast<size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) {
    WriteTimeEmbedding(t[r], width, input.row(r).data() + arch.input_dim);
    embedding_rows[r] = EmbeddingRow(arch, c[r]);
    input.row(r).segment(arch.input_dim + width, width) = embedding.row(embedding_rows[r]);
  }

  Batch h = input;
  if (cache != nullptr) {
    cache->pre_activations.clear();
    cache->activations.clear();
  }
  const size_t hidden = arch.hidden_dims.size();
  for (size_t l = 0; l < layout.layers.size(); ++l) {
    const Layer& layer = layout.layers[l];
    const RowMajorMap w(p.values.data() + layer.weight_offset, layer.out, layer.in);
    const Eigen::Map<const Eigen::RowVectorXd> b(p.values.data() + layer.bias_offset, layer.out);
    Batch z = h * w.transpose();
    z.rowwise() += b;
    if (l == hidden) {
      h = std::move(z);
      break;
    }
    Batch a = z.unaryExpr([](double v) { return Silu(v); });
    if (cache != nullptr) {
      cache->pre_activations.push_back(std::move(z));
      cache->activations.push_back(a);
    }
    h = std::move(a);
  }
  if (cache != nullptr) {
    cache->input = std::move(input);
    cache->embedding_rows = std::move(embedding_rows);
  }
  return h;
}

Eigen::VectorXd Backward(const DenoiserParams& p, const ForwardCache& cache,
                         const Batch& d_out) {
  const Architecture& arch = p.arch;
  const Layout layout = MakeLayout(arch);
  const size_t hidden = arch.hidden_dims.size();
  if (cache.activations.size() != hidden || d_out.rows() != cache.input.rows() ||
      d_out.cols() != arch.input_dim) {
    throw InvalidArgument("backward: cache or upstream gradient has the wrong shape");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(layout.total);

  Batch upstream = d_out;
  for (size_t l = layout.layers.size(); l-- > 0;) {
    const Layer& layer = layout.layers[l];
    if (l < hidden) {
      upstream = upstream.cwiseProduct(
          cache.pre_activations[l].unaryExpr([](double v) { return SiluDerivative(v); }));
    }
    const Batch& below = l == 0 ? cache.input : cache.activations[l - 1];
    MutableRowMajorMap gw(grad.data() + layer.weight_offset, layer.out, layer.in);
    gw.noalias() = upstream.transpose() * below;
    Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + layer.bias_offset, layer.out);
    gb = upstream.colwise().sum();
    const RowMajorMap w(p.values.data() + layer.weight_offset, layer.out, layer.in);
    Batch next = upstream * w;
    upstream = std::move(next);
  }

  const int width = arch.time_embed_dim;
  MutableRowMajorMap g_embedding(grad.data() + layout.embedding_offset, arch.num_conditions + 1,
                                 width);
  for (Eigen::Index r = 0; r < upstream.rows(); ++r) {
    g_embedding.row(cache.embedding_rows[r]) +=
        upstream.row(r).segment(arch.input_dim + width, width);
  }
  return grad;
}

ValueAndGradient LossGradient(const DenoiserParams& p, const OutputLoss& loss) {
  ForwardCache cache;
  const Batch outputs = Forward(p, loss.inputs, loss.t, loss.c, &cache);
  LossEvaluation eval = loss.evaluate(outputs);
  if (!std::isfinite(eval.value)) {
    std::string culprit = "total";
    for (const auto& [name, value] : eval.terms) {
      if (!std::isfinite(value)) {
        culprit = name;
        break;
      }
    }
    throw NumericError("loss is non-finite; offending term: " + culprit);
  }
  if (eval.d_outputs.rows() != outputs.rows() || eval.d_outputs.cols() != outputs.cols()) {
    throw InvalidArgument("loss gradient has the wrong shape");
  }
  return {eval.value, Backward(p, cache, eval.d_outputs)};
}

void WriteModel(std::ostream& out, const ModelFile& model) {
  using namespace internal;
  const Architecture& arch = model.params.arch;
  WriteMagic(out, kModelMagic);
  WriteU32(out, DenoiserParams::kFormatVersion);
  WriteU32(out, static_cast<uint32_t>(arch.input_dim));
  WriteU32(out, static_cast<uint32_t>(arch.hidden_dims.size()));
  for (int h : arch.hidden_dims) WriteU32(out, static_cast<uint32_t>(h));
  WriteU32(out, static_cast<uint32_t>(arch.num_conditions));
  WriteU32(out, static_cast<uint32_t>(arch.time_embed_dim));
  WriteU32(out, static_cast<uint32_t>(model.schedule_kind));
  WriteU32(out, static_cast<uint32_t>(model.T));
  WriteU64(out, static_cast<uint64_t>(model.params.values.size()));
  WriteF64Array(out, model.params.values);
}

ModelFile ReadModel(std::istream& in, const Architecture* expected) {
  using namespace internal;
  if (ReadMagic(in, kModelMagic.size()) != kModelMagic) {
    throw VersionError("not a model checkpoint (bad magic)");
  }
  const uint32_t version = ReadU32(in, "version");
  if (version != DenoiserParams::kFormatVersion) {
    throw VersionError("unsupported model checkpoint version " + std::to_string(version));
  }
  ModelFile model;
  Architecture& arch = model.params.arch;
  arch.input_dim = static_cast<int>(ReadU32(in, "input_dim"));
  const uint32_t layers = ReadU32(in, "hidden layer count");
  if (layers == 0 || layers > 64) throw VersionError("corrupt header: hidden layer count");
  arch.hidden_dims.resize(layers);
  for (auto& h : arch.hidden_dims) h = static_cast<int>(ReadU32(in, "hidden dim"));
  arch.num_conditions = static_cast<int>(ReadU32(in, "num_conditions"));
  arch.time_embed_dim = static_cast<int>(ReadU32(in, "time_embed_dim"));
  const uint32_t kind = ReadU32(in, "schedule kind");
  if (kind > static_cast<uint32_t>(ScheduleKind::kLinearBeta)) {
    throw VersionError("corrupt header: schedule kind");
  }
  model.schedule_kind = static_cast<ScheduleKind>(kind);
  model.T = static_cast<int>(ReadU32(in, "T"));
  try {
    arch.Validate();
  } catch (const InvalidArgument& e) {
    throw VersionError(std::string("corrupt header: ") + e.what());
  }
  if (expected != nullptr && !(*expected == arch)) {
    throw VersionError("checkpoint architecture does not match the expected one");
  }
  const uint64_t count = ReadU64(in, "parameter count");
  if (count != static_cast<uint64_t>(arch.ParameterCount())) {
    throw VersionError("corrupt header: parameter count disagrees with architecture");
  }
  model.params.values = ReadF64Array(in, static_cast<int64_t>(count), "parameters");
  return model;
}

void SaveModel(const std::filesystem::path& path, const ModelFile& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  WriteModel(out, model);
  if (!out) throw IoError("failed writing " + path.string());
}

ModelFile LoadModel(const std::filesystem::path& path, const Architecture* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return ReadModel(in, expected);
}

}  // namespace inpo
