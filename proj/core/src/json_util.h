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

#ifndef INPO_SRC_JSON_UTIL_H_
#define INPO_SRC_JSON_UTIL_H_

#include <nlohmann/json.hpp>

#include "inpo/data.h"
#include "inpo/types.h"

namespace inpo::internal {

inline nlohmann::json VecToJson(const Vec& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Vec VecFromJson(const nlohmann::json& j) {
  if (!j.is_array()) throw InvalidArgument("expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidArgument("expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline nlohmann::json RewardSpecToJson(const RewardSpec& spec) {
  nlohmann::json j = {{"kind", std::string(ToString(spec.kind))}};
  switch (spec.kind) {
    case RewardSpec::Kind::kModeDistance: {
      nlohmann::json targets = nlohmann::json::array();
      for (const Vec& t : spec.targets) targets.push_back(VecToJson(t));
      j["targets"] = targets;
      break;
    }
    case RewardSpec::Kind::kRingRadius:
      j["radius"] = spec.radius;
      break;
    case RewardSpec::Kind::kLinear:
      j["direction"] = VecToJson(spec.direction);
      break;
  }
  return j;
}

inline RewardSpec RewardSpecFromJson(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  RewardSpec spec;
  if (kind == "mode_distance") {
    std::vector<Vec> targets;
    for (const auto& t : j.at("targets")) targets.push_back(VecFromJson(t));
    spec = RewardSpec::ModeDistance(std::move(targets));
  } else if (kind == "ring_radius") {
    spec = RewardSpec::RingRadius(j.at("radius").get<double>());
  } else if (kind == "linear") {
    spec = RewardSpec::Linear(VecFromJson(j.at("direction")));
  } else {
    throw InvalidArgument("unknown reward kind '" + kind + "'");
  }
  spec.Validate();
  return spec;
}

}  // namespace inpo::internal

#endif  // INPO_SRC_JSON_UTIL_H_
