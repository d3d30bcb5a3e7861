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

#ifndef INPO_SRC_BINARY_IO_H_
#define INPO_SRC_BINARY_IO_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "inpo/types.h"

namespace inpo::internal {

// Little-endian fixed-width encoding independent of host byte order.
void WriteU32(std::ostream& out, uint32_t v);
void WriteU64(std::ostream& out, uint64_t v);
void WriteF64(std::ostream& out, double v);
void WriteF64Array(std::ostream& out, const Eigen::VectorXd& v);
void WriteMagic(std::ostream& out, std::string_view magic);

// Readers throw IoError on a short read; `what` names the field.
uint32_t ReadU32(std::istream& in, const char* what);
uint64_t ReadU64(std::istream& in, const char* what);
double ReadF64(std::istream& in, const char* what);
Eigen::VectorXd ReadF64Array(std::istream& in, int64_t count, const char* what);
std::string ReadMagic(std::istream& in, size_t size);

}  // namespace inpo::internal

#endif  // INPO_SRC_BINARY_IO_H_
