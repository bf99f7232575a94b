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

// Flat `key = value` configuration. `#` starts a comment; lists are
// comma-separated. Unknown keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cstl/dataset.hpp"
#include "cstl/gmm.hpp"
#include "cstl/svm.hpp"
#include "cstl/transfer.hpp"

namespace cstl {

enum class Task { kUnweighted, kDetection, kChildlock, kAirbag };
std::string_view to_string(Task task);
Task parse_task(std::string_view s);
bool is_weighted(Task task);

struct PipelineConfig {
  // Reduction.
  int k = 50;  // clamped to the feature width
  double eps = 1.0;

  GmmOptions gmm{};
  TransferConfig transfer{};
  // "auto": paper-sec4-example on the four superclasses, all-zero otherwise;
  // else a builtin name or a CSV path.
  std::string transfer_costs = "auto";

  // Classification.
  ParamGrid grid = ParamGrid::defaults();
  int folds = 5;

  // Protocol.
  Task task = Task::kUnweighted;
  bool collapse_unweighted = false;  // unweighted task on the four superclasses
  int runs = 10;
  std::uint64_t seed = 1;
  double test_fraction = 0.5;
  int target = 0;              // index into `data`
  std::vector<int> sources;    // empty: every other domain
  unsigned threads = 0;        // 0: hardware concurrency

  std::vector<std::string> data;  // one CSV per domain
  std::string out_dir = ".";

  SynthConfig synth{};

  void validate() const;
};

PipelineConfig parse_config(std::istream& in);
PipelineConfig load_config(const std::filesystem::path& path);
// Writes every key, so parse_config(write_config(c)) == c.
void write_config(std::ostream& out, const PipelineConfig& cfg);

}  // namespace cstl
