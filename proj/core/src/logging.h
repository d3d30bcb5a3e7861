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

#ifndef INPO_SRC_LOGGING_H_
#define INPO_SRC_LOGGING_H_

#include <memory>

#include <spdlog/logger.h>

namespace inpo::internal {

// Shared stderr logger named "inpo".
spdlog::logger* Logger();

}  // namespace inpo::internal

#endif  // INPO_SRC_LOGGING_H_
