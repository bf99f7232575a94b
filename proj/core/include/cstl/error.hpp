// Copyright 2026 The cstl Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cstl {

// Broad failure categories. The CLI maps each to a distinct exit code.
enum class ErrorKind {
  kInvalidArgument = 2,  // precondition on caller-supplied values
  kParse = 3,            // malformed input file
  kIo = 4,               // unreadable / unwritable path
  kVersion = 5,          // persisted artifact with an unsupported version
  kNumeric = 6,          // solver failure, non-finite values, degeneracy
  kConfig = 7,           // bad configuration key or value
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& module() const { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

// Row-level parse failure. `row` is the 1-based line number in the file.
class ParseError : public Error {
 public:
  enum class Reason { kColumnCount, kNonNumeric, kNonFinite, kUnknownClass, kHeader, kBadField };

  ParseError(Reason reason, std::size_t row, const std::string& what)
      : Error(ErrorKind::kParse, "dataset", "row " + std::to_string(row) + ": " + what),
        reason_(reason),
        row_(row) {}

  Reason reason() const { return reason_; }
  std::size_t row() const { return row_; }

 private:
  Reason reason_;
  std::size_t row_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kVersion: return "version";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace cstl
