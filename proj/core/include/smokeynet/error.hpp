/* Copyright 2026 The SmokeyNet Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smokeynet {

enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kDataError,
  kShapeMismatch,
  kNumeric,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library is an Error; the code lets the CLI
// emit a machine-readable status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

// Rethrows `e` with `context` prepended, preserving the error code.
[[noreturn]] void rethrow_with_context(const Error& e, std::string_view context);

}  // namespace smokeynet
