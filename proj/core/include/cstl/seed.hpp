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

#include <cstdint>
#include <random>

namespace cstl {

using Rng = std::mt19937_64;

// Derives an independent sub-seed from a parent seed and a tag (splitmix64
// finalizer). Every stage of the pipeline draws its seed through this so a
// staged run and a monolithic run see identical random streams.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  std::uint64_t z = parent + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stage tags.
namespace seed_tag {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kSourceGmm = 2;
inline constexpr std::uint64_t kTargetGmm = 3;
inline constexpr std::uint64_t kGridSearch = 4;
inline constexpr std::uint64_t kSourceBase = 1000;  // + source domain id
}  // namespace seed_tag

}  // namespace cstl
