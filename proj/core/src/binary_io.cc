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

#include "binary_io.h"

#include <array>
#include <bit>
#include <istream>
#include <ostream>

#include "inpo/errors.h"

namespace inpo::internal {
namespace {

template <size_t N>
void WriteLe(std::ostream& out, uint64_t v) {
  std::array<char, N> bytes;
  for (size_t i = 0; i < N; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), N);
}

template <size_t N>
uint64_t ReadLe(std::istream& in, const char* what) {
  std::array<unsigned char, N> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), N);
  if (in.gcount() != static_cast<std::streamsize>(N)) {
    throw IoError(std::string("unexpected end of file reading ") + what);
  }
  uint64_t v = 0;
  for (size_t i = 0; i < N; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void WriteU32(std::ostream& out, uint32_t v) { WriteLe<4>(out, v); }
void WriteU64(std::ostream& out, uint64_t v) { WriteLe<8>(out, v); }
void WriteF64(std::ostream& out, double v) { WriteLe<8>(out, std::bit_cast<uint64_t>(v)); }

void WriteF64Array(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) WriteF64(out, v[i]);
}

void WriteMagic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

uint32_t ReadU32(std::istream& in, const char* what) {
  return static_cast<uint32_t>(ReadLe<4>(in, what));
}
uint64_t ReadU64(std::istream& in, const char* what) { return ReadLe<8>(in, what); }
double ReadF64(std::istream& in, const char* what) {
  return std::bit_cast<double>(ReadLe<8>(in, what));
}

Eigen::VectorXd ReadF64Array(std::istream& in, int64_t count, const char* what) {
  Eigen::VectorXd v(count);
  for (int64_t i = 0; i < count; ++i) v[i] = ReadF64(in, what);
  return v;
}

std::string ReadMagic(std::istream& in, size_t size) {
  std::string magic(size, '\0');
  in.read(magic.data(), static_cast<std::streamsize>(size));
  magic.resize(static_cast<size_t>(in.gcount()));
  return magic;
}

}  // namespace inpo::internal
