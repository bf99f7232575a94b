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

// Save / load of pipeline artifacts in the keyed-text format.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cstl/reduce.hpp"
#include "cstl/svm.hpp"
#include "cstl/transfer.hpp"

namespace cstl {

inline constexpr int kProjectionVersion = 1;
inline constexpr int kGmmBanksVersion = 1;
inline constexpr int kModelVersion = 1;

void write_projection(std::ostream& out, const Projection& p);
Projection read_projection(std::istream& in);

// Both mixture banks of a source/target pair plus the class names they index.
struct GmmArtifact {
  TransferBanks banks;
  std::vector<std::string> class_names;

  bool operator==(const GmmArtifact& o) const {
    return banks.source == o.banks.source && banks.target == o.banks.target && class_names == o.class_names;
  }
};
void write_gmm_banks(std::ostream& out, const GmmArtifact& a);
GmmArtifact read_gmm_banks(std::istream& in);

void write_model(std::ostream& out, const MulticlassModel& m);
MulticlassModel read_model(std::istream& in);

// File wrappers. Loading a missing file throws Error(kIo) naming the path.
void save_projection(const std::filesystem::path& path, const Projection& p);
Projection load_projection(const std::filesystem::path& path);
void save_gmm_banks(const std::filesystem::path& path, const GmmArtifact& a);
GmmArtifact load_gmm_banks(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const MulticlassModel& m);
MulticlassModel load_model(const std::filesystem::path& path);

}  // namespace cstl
