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

#ifndef INPO_TOOLS_CONFIG_H_
#define INPO_TOOLS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace inpo::cli {

// Flat key-value configuration with a fixed set of known keys. Files hold
// one `key = value` per line; `#` starts a comment.
class Config {
 public:
  Config();

  // Throws ConfigError for unknown keys and malformed lines, IoError when the
  // file cannot be read.
  void LoadFile(const std::filesystem::path& path);
  // Parses "key=value".
  void Apply(std::string_view assignment);
  void Set(const std::string& key, const std::string& value);

  bool Has(const std::string& key) const;
  const std::string& GetString(const std::string& key) const;
  int GetInt(const std::string& key) const;
  uint64_t GetU64(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  std::vector<int> GetIntList(const std::string& key) const;
  std::vector<double> GetDoubleList(const std::string& key) const;

  // Every key with its resolved value, sorted, one `key = value` per line.
  std::string Dump() const;

  static const std::map<std::string, std::string>& Defaults();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace inpo::cli

#endif  // INPO_TOOLS_CONFIG_H_
