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

#include "config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "inpo/errors.h"

namespace inpo::cli {
namespace {

std::string Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> SplitList(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(key, "cannot parse '" + text + "' as a number");
  }
  return value;
}

}  // namespace

const std::map<std::string, std::string>& Config::Defaults() {
  static const std::map<std::string, std::string> defaults = {
      {"seed", "0"},
      {"dataset", "eight_gaussians"},
      {"dataset.size", "20000"},
      {"schedule.kind", "cosine"},
      {"schedule.T", "1000"},
      {"schedule.loss_weight", "constant"},
      {"model.hidden", "128,128"},
      {"model.time_embed_dim", "16"},
      {"pretrain.steps", "20000"},
      {"pretrain.batch_size", "256"},
      {"pretrain.lr", "0.002"},
      {"pretrain.warmup_steps", "100"},
      {"pretrain.min_lr_fraction", "0.05"},
      {"pretrain.cond_drop", "0.1"},
      {"sample.n_steps", "50"},
      {"sample.guidance_w", "1"},
      {"reward.kind", "mode_distance"},
      {"reward.targets", ""},
      {"reward.radius", "1"},
      {"reward.direction", "1,0"},
      {"prefs.model", ""},
      {"prefs.input", ""},
      {"prefs.pairs_per_condition", "256"},
      {"align.base", ""},
      {"align.pairs", ""},
      {"align.resume", ""},
      {"align.method", "inpo"},
      {"align.beta", "2000"},
      {"align.delta", "inversion"},
      {"align.delta.n", "10"},
      {"align.delta.w_inv", "0"},
      {"align.delta.max_iters", "100"},
      {"align.delta.tol", "1e-8"},
      {"align.delta.damping", "1"},
      {"align.steps", "1000"},
      {"align.batch_pairs", "64"},
      {"align.accum_steps", "1"},
      {"align.lr", "1e-5"},
      {"align.warmup_steps", "50"},
      {"align.ref_init", "base"},
      {"align.t_min", "1"},
      {"align.sft.steps", "500"},
      {"align.sft.lr", "0.001"},
      {"eval.model_a", ""},
      {"eval.model_b", ""},
      {"eval.trials", "512"},
      {"eval.roundtrip.n", "5,10,25,50"},
      {"eval.roundtrip.t", "800"},
      {"eval.roundtrip.samples", "256"},
      {"invert.model", ""},
      {"invert.samples", "8"},
      {"invert.t_target", "800"},
      {"invert.n_steps", "5,10,25,50"},
      {"invert.guidance_w", "0"},
      {"ablate.base", ""},
      {"ablate.pairs", ""},
      {"ablate.beta", "2000,3000,4000,5000"},
      {"ablate.n", "3,5,10,30"},
      {"ablate.w_inv", "0,1,5,7.5"},
      {"ablate.t_min", "1"},
      {"ablate.steps", "100"},
      {"ablate.trials", "256"},
  };
  return defaults;
}

Config::Config() : values_(Defaults()) {}

void Config::LoadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string trimmed = Trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no), "expected key = value");
    }
    Set(Trim(trimmed.substr(0, eq)), Trim(trimmed.substr(eq + 1)));
  }
}

void Config::Apply(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(std::string(assignment), "expected KEY=VALUE");
  }
  Set(Trim(assignment.substr(0, eq)), Trim(assignment.substr(eq + 1)));
}

void Config::Set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown key");
  it->second = value;
}

bool Config::Has(const std::string& key) const {
  auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

const std::string& Config::GetString(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown key");
  return it->second;
}

int Config::GetInt(const std::string& key) const {
  return ParseNumber<int>(key, GetString(key));
}

uint64_t Config::GetU64(const std::string& key) const {
  return ParseNumber<uint64_t>(key, GetString(key));
}

double Config::GetDouble(const std::string& key) const {
  return ParseNumber<double>(key, GetString(key));
}

std::vector<int> Config::GetIntList(const std::string& key) const {
  std::vector<int> out;
  for (const std::string& item : SplitList(GetString(key))) {
    out.push_back(ParseNumber<int>(key, item));
  }
  return out;
}

std::vector<double> Config::GetDoubleList(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : SplitList(GetString(key))) {
    out.push_back(ParseNumber<double>(key, item));
  }
  return out;
}

std::string Config::Dump() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

}  // namespace inpo::cli
