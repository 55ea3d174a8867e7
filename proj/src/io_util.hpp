// Copyright 2026  The sfv developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SFV_IO_UTIL_HPP_
#define SFV_IO_UTIL_HPP_

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "error.hpp"

namespace sfv {

// All binary formats are little-endian regardless of host byte order.

inline void put_u32le(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64le(std::ostream& os, uint64_t v) {
  put_u32le(os, static_cast<uint32_t>(v));
  put_u32le(os, static_cast<uint32_t>(v >> 32));
}

inline void put_f32le(std::ostream& os, float v) {
  put_u32le(os, std::bit_cast<uint32_t>(v));
}

inline bool get_u32le(std::istream& is, uint32_t* out) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  *out = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
  return true;
}

inline bool get_u64le(std::istream& is, uint64_t* out) {
  uint32_t lo = 0, hi = 0;
  if (!get_u32le(is, &lo) || !get_u32le(is, &hi)) return false;
  *out = static_cast<uint64_t>(lo) | (static_cast<uint64_t>(hi) << 32);
  return true;
}

inline bool get_f32le(std::istream& is, float* out) {
  uint32_t bits = 0;
  if (!get_u32le(is, &bits)) return false;
  *out = std::bit_cast<float>(bits);
  return true;
}

inline std::ofstream open_out(const std::string& path, bool binary = true) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw_io("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path, bool binary = true) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw_io("cannot open for reading: " + path);
  return is;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream is = open_in(path);
  std::string data((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return data;
}

// Scores and similarities are printed with 9 significant digits everywhere.
inline std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// Identifiers travel through comma-separated text formats, so they must not
// contain separators.
inline void validate_id(const std::string& id, const std::string& context) {
  if (id.empty()) throw_invalid(context + ": empty id");
  if (id.find(',') != std::string::npos ||
      id.find('\n') != std::string::npos ||
      id.find('\r') != std::string::npos) {
    throw_invalid(context + ": id contains a separator character: " + id);
  }
}

}  // namespace sfv

#endif  // SFV_IO_UTIL_HPP_
