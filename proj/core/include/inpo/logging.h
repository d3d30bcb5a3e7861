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

#ifndef INPO_LOGGING_H_
#define INPO_LOGGING_H_

#include <string_view>

namespace inpo {

inline constexpr const char* kLogLevelEnv = "INPO_LOG_LEVEL";

// Accepts "error", "info" or "debug". Throws InvalidArgument otherwise.
void SetLogLevel(std::string_view level);
// Reads INPO_LOG_LEVEL when set; defaults to info.
void SetLogLevelFromEnv();

void LogError(std::string_view message);
void LogInfo(std::string_view message);
void LogDebug(std::string_view message);

}  // namespace inpo

#endif  // INPO_LOGGING_H_
