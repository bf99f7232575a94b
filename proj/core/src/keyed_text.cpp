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

#include "cstl/keyed_text.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "cstl/error.hpp"

namespace cstl {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

bool try_parse_double(std::string_view token, double& out) {
  if (token.empty()) return false;
  // from_chars rejects a leading '+', which hand-edited files may contain.
  if (token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

bool try_parse_int(std::string_view token, long long& out) {
  if (token.empty()) return false;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

// ---------------------------------------------------------------------------

KeyedWriter::KeyedWriter(std::ostream& out, std::string_view kind, int version) : out_(out) {
  out_ << "cstl-artifact " << kind << ' ' << version << '\n';
}

void KeyedWriter::put(std::string_view key, std::string_view value) { out_ << key << ' ' << value << '\n'; }

void KeyedWriter::put(std::string_view key, double value) { out_ << key << ' ' << format_double(value) << '\n'; }

void KeyedWriter::put(std::string_view key, long long value) { out_ << key << ' ' << value << '\n'; }

void KeyedWriter::put(std::string_view key, std::uint64_t value) { out_ << key << ' ' << value << '\n'; }

void KeyedWriter::put(std::string_view key, std::span<const double> values) {
  out_ << key;
  for (double v : values) out_ << ' ' << format_double(v);
  out_ << '\n';
}

void KeyedWriter::put(std::string_view key, std::span<const int> values) {
  out_ << key;
  for (int v : values) out_ << ' ' << v;
  out_ << '\n';
}

void KeyedWriter::put_tokens(std::string_view key, std::span<const std::string> tokens) {
  out_ << key;
  for (const auto& t : tokens) out_ << ' ' << t;
  out_ << '\n';
}

void KeyedWriter::end() { out_ << "end\n"; }

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw Error(ErrorKind::kParse, "artifact", "line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

const std::string& KeyedLine::token(std::size_t i) const {
  if (i >= tokens.size()) fail(line_no, "record '" + key + "' is missing field " + std::to_string(i));
  return tokens[i];
}

double KeyedLine::real(std::size_t i) const {
  double v;
  if (!try_parse_double(token(i), v)) fail(line_no, "record '" + key + "': not a real: " + tokens[i]);
  return v;
}

long long KeyedLine::integer(std::size_t i) const {
  long long v;
  if (!try_parse_int(token(i), v)) fail(line_no, "record '" + key + "': not an integer: " + tokens[i]);
  return v;
}

std::uint64_t KeyedLine::unsigned_integer(std::size_t i) const {
  const auto& t = token(i);
  std::uint64_t v;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) fail(line_no, "record '" + key + "': not unsigned: " + t);
  return v;
}

std::vector<double> KeyedLine::reals() const {
  std::vector<double> out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) out[i] = real(i);
  return out;
}

std::vector<int> KeyedLine::integers() const {
  std::vector<int> out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) out[i] = static_cast<int>(integer(i));
  return out;
}

void KeyedLine::expect_count(std::size_t n) const {
  if (tokens.size() != n) {
    fail(line_no, "record '" + key + "' has " + std::to_string(tokens.size()) + " fields, expected " +
                      std::to_string(n));
  }
}

KeyedReader::KeyedReader(std::istream& in, std::string_view kind, int version) : in_(in), kind_(kind) {
  std::string header;
  if (!std::getline(in_, header)) fail(1, "empty artifact");
  ++line_no_;
  auto parts = split(trim(header), ' ');
  if (parts.size() != 3 || parts[0] != "cstl-artifact") fail(1, "missing 'cstl-artifact' header");
  if (parts[1] != kind) {
    fail(1, "expected artifact kind '" + std::string(kind) + "', found '" + std::string(parts[1]) + "'");
  }
  long long v = 0;
  if (!try_parse_int(parts[2], v)) fail(1, "bad version field");
  if (v != version) {
    throw Error(ErrorKind::kVersion, "artifact",
                std::string(kind) + " format version " + std::to_string(v) + " is not supported (expected " +
                    std::to_string(version) + ")");
  }
}

KeyedLine KeyedReader::next_any() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    auto t = trim(line);
    if (t.empty()) continue;
    auto parts = split(t, ' ');
    KeyedLine out;
    out.key = std::string(parts[0]);
    out.line_no = line_no_;
    for (std::size_t i = 1; i < parts.size(); ++i) out.tokens.emplace_back(parts[i]);
    return out;
  }
  fail(line_no_, "unexpected end of " + kind_ + " artifact");
}

KeyedLine KeyedReader::next(std::string_view key) {
  auto line = next_any();
  if (line.key != key) fail(line.line_no, "expected record '" + std::string(key) + "', found '" + line.key + "'");
  return line;
}

void KeyedReader::expect_end() {
  auto line = next_any();
  if (line.key != "end" || !line.tokens.empty()) fail(line.line_no, "expected 'end'");
}

std::string peek_artifact_kind(const std::string& first_line) {
  auto parts = split(trim(first_line), ' ');
  if (parts.size() != 3 || parts[0] != "cstl-artifact") return {};
  return std::string(parts[1]);
}

}  // namespace cstl
