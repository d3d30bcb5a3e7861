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

#ifndef INPO_TOOLS_CLI_H_
#define INPO_TOOLS_CLI_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace inpo::cli {

enum class Subcommand { kPretrain, kMakePrefs, kAlign, kEval, kInvertDemo, kAblate };

std::string_view ToString(Subcommand cmd);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

struct CliInvocation {
  Subcommand subcommand = Subcommand::kPretrain;
  std::filesystem::path config_path;  // empty: defaults only
  std::vector<std::string> overrides;  // KEY=VALUE, applied after the file
  std::filesystem::path out_dir = ".";
  std::optional<uint64_t> seed;
};

// Returns the invocation, or an exit code when parsing fails or help was
// requested (messages go to stdout/stderr).
struct ParsedArgs {
  std::optional<CliInvocation> invocation;
  int exit_code = kExitOk;
};
ParsedArgs ParseArgs(int argc, const char* const* argv);

// Runs the subcommand and maps library errors onto exit codes:
// config → 2, numeric/training → 3, I/O → 4.
int Run(const CliInvocation& invocation);

}  // namespace inpo::cli

#endif  // INPO_TOOLS_CLI_H_
