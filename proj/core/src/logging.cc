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

#include "logging.h"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "inpo/errors.h"
#include "inpo/logging.h"

namespace inpo {
namespace internal {

spdlog::logger* Logger() {
  static const std::shared_ptr<spdlog::logger> logger = [] {
    auto l = std::make_shared<spdlog::logger>(
        "inpo", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%H:%M:%S.%e] [%l] %v");
    l->set_level(spdlog::level::info);
    return l;
  }();
  return logger.get();
}

}  // namespace internal

void SetLogLevel(std::string_view level) {
  if (level == "error") {
    internal::Logger()->set_level(spdlog::level::err);
  } else if (level == "info") {
    internal::Logger()->set_level(spdlog::level::info);
  } else if (level == "debug") {
    internal::Logger()->set_level(spdlog::level::debug);
  } else {
    throw InvalidArgument("unknown log level '" + std::string(level) +
                          "' (expected error, info or debug)");
  }
}

void SetLogLevelFromEnv() {
  const char* value = std::getenv(kLogLevelEnv);
  SetLogLevel(value != nullptr && *value != '\0' ? value : "info");
}

void LogError(std::string_view message) { internal::Logger()->error("{}", message); }
void LogInfo(std::string_view message) { internal::Logger()->info("{}", message); }
void LogDebug(std::string_view message) { internal::Logger()->debug("{}", message); }

}  // namespace inpo
