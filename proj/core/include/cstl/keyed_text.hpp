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

// Versioned keyed-text artifact format shared by every persisted object.
//
//   cstl-artifact <kind> <version>
//   <key> <token> <token> ...
//   ...
//   end
//
// One record per line, tokens separated by single spaces. Reals are written in
// shortest round-trip form (std::to_chars), so load(save(x)) is bit-exact.
// Readers consume records strictly in order and reject unexpected keys.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cstl {

std::string format_double(double value);

// Parses a full token as a double. Returns false on any trailing garbage.
bool try_parse_double(std::string_view token, double& out);
bool try_parse_int(std::string_view token, long long& out);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

class KeyedWriter {
 public:
  KeyedWriter(std::ostream& out, std::string_view kind, int version);

  void put(std::string_view key, std::string_view value);
  void put(std::string_view key, double value);
  void put(std::string_view key, long long value);
  void put(std::string_view key, int value) { put(key, static_cast<long long>(value)); }
  void put(std::string_view key, std::uint64_t value);
  void put(std::string_view key, std::span<const double> values);
  void put(std::string_view key, std::span<const int> values);
  void put_tokens(std::string_view key, std::span<const std::string> tokens);
  void end();

 private:
  std::ostream& out_;
};

struct KeyedLine {
  std::string key;
  std::vector<std::string> tokens;
  std::size_t line_no = 0;

  const std::string& token(std::size_t i) const;
  double real(std::size_t i = 0) const;
  long long integer(std::size_t i = 0) const;
  std::uint64_t unsigned_integer(std::size_t i = 0) const;
  std::vector<double> reals() const;
  std::vector<int> integers() const;
  void expect_count(std::size_t n) const;
};

class KeyedReader {
 public:
  // Throws Error(kVersion) when the header's kind matches but its version
  // differs from `version`; Error(kParse) on any other header mismatch.
  KeyedReader(std::istream& in, std::string_view kind, int version);

  KeyedLine next(std::string_view key);
  // Next record without checking its key.
  KeyedLine next_any();
  void expect_end();

 private:
  std::istream& in_;
  std::string kind_;
  std::size_t line_no_ = 0;
};

// Reads the kind named in an artifact header without consuming a stream twice.
std::string peek_artifact_kind(const std::string& first_line);

}  // namespace cstl
