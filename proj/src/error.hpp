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

#ifndef SFV_ERROR_HPP_
#define SFV_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace sfv {

// Error categories. Values match the sfv_status codes of the public C API
// (see include/sfv/sfv.h); 0 is reserved for success.
enum class ErrorCode : int {
  kIo = 1,
  kFormat = 2,
  kInvalidArgument = 3,
  kDimensionMismatch = 4,
  kNumeric = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorCode::kIo, msg);
}
[[noreturn]] inline void throw_format(const std::string& msg) {
  throw Error(ErrorCode::kFormat, msg);
}
[[noreturn]] inline void throw_invalid(const std::string& msg) {
  throw Error(ErrorCode::kInvalidArgument, msg);
}
[[noreturn]] inline void throw_dim(const std::string& msg) {
  throw Error(ErrorCode::kDimensionMismatch, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(ErrorCode::kNumeric, msg);
}

}  // namespace sfv

#endif  // SFV_ERROR_HPP_
