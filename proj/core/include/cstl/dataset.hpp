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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cstl {

// Samples are stored one per row.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Labeled feature matrix. Each row carries a class index, an opaque group
// identifier (one occupant) and a domain tag (one seat).
struct FeatureSet {
  FeatureMatrix features;
  std::vector<int> labels;
  std::vector<std::string> groups;
  std::vector<int> domains;
  std::vector<std::string> class_names;

  std::size_t size() const { return labels.size(); }
  std::size_t dims() const { return static_cast<std::size_t>(features.cols()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  // Throws Error(kInvalidArgument) when any invariant is broken: mismatched
  // row counts, labels out of range, N < 2, D < 1, non-finite values.
  void validate() const;

  FeatureSet subset(std::span<const std::size_t> rows) const;
  std::vector<std::size_t> rows_of_class(int c) const;
  std::vector<std::size_t> class_counts() const;
  std::vector<std::string> distinct_groups() const;

  // Same rows with `features` swapped for `replacement` (equal row count).
  FeatureSet with_features(FeatureMatrix replacement) const;

  bool operator==(const FeatureSet&) const = default;
};

// Row-wise concatenation. Both sets must share class_names and dims.
FeatureSet concat(const FeatureSet& a, const FeatureSet& b);

// Re-indexes `fs` onto `class_names`; throws if `fs` names a class not in the list.
FeatureSet reindex_classes(const FeatureSet& fs, const std::vector<std::string>& class_names);

// Class list built from first appearance across all sets, then each set reindexed onto it.
void align_class_spaces(std::vector<FeatureSet>& sets);

// Collapses the eight occupant classes onto the four task superclasses
// {empty, adult, small, large}. Names already in the four-class space map to
// themselves; any other name is an error.
FeatureSet collapse_to_superclasses(const FeatureSet& fs);
const std::vector<std::string>& superclass_names();

// ---------------------------------------------------------------------------
// CSV I/O. Header `label,group,domain,f0,...,f{D-1}`.

enum class FeatureFormat { kCsv };

// When `class_list` is given, labels are indexed by it and an unlisted label is
// an error; otherwise classes are numbered in order of first appearance.
FeatureSet read_features(std::istream& in, const std::optional<std::vector<std::string>>& class_list = {});
FeatureSet load_features(const std::filesystem::path& path, FeatureFormat format = FeatureFormat::kCsv,
                         const std::optional<std::vector<std::string>>& class_list = {});

// Values are written in shortest round-trip form, so a reload is bit-exact.
void write_features(std::ostream& out, const FeatureSet& fs);
void save_features(const std::filesystem::path& path, const FeatureSet& fs);

// ---------------------------------------------------------------------------
// Group-aware splitting.

struct SplitPlan {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::uint64_t seed = 0;

  bool operator==(const SplitPlan&) const = default;
};

// Partitions groups (not rows) so that no group straddles train and test.
// Groups are visited in a seeded random order; a group joins the test side
// only if doing so moves the test row count closer to the target. Both sides
// are guaranteed non-empty.
SplitPlan split_group_aware(const FeatureSet& fs, double test_fraction, std::uint64_t seed);

// Assigns each group to one of `folds` folds, balancing row counts. Returns a
// per-row fold index.
// Group-aware split done separately inside each class stratum (a group belongs
// to the class of its first row), so every class with at least two groups
// appears on both sides. Single-group classes stay in train.
SplitPlan split_stratified_groups(const FeatureSet& fs, double test_fraction, std::uint64_t seed);

std::vector<int> group_folds(std::span<const std::string> groups, int folds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic multi-domain benchmark.

struct DomainShift {
  double rotation = 0.3;     // radians per domain step, applied in planes (0,1), (2,3), ...
  double scale = 1.1;        // domain d is scaled by scale^d
  double translation = 3.0;  // domain d is offset by translation along a random unit direction
};

struct SynthConfig {
  int n_classes = 8;
  int dims = 10;
  int n_domains = 4;
  int per_class_modes = 2;
  DomainShift shift{};
  double noise_sigma = 3.0;
  int samples_per_class_per_domain = 50;
  int group_size = 10;            // contiguous samples per synthetic occupant
  double class_separation = 3.0;  // std of class anchors around the origin
  double mode_spread = 1.0;       // std of mode centers around their class anchor
  std::uint64_t seed = 1;

  void validate() const;
};

// Class names used for a given class count: the eight occupant classes for 8,
// the four superclasses for 4, otherwise c0..c{N-1}.
std::vector<std::string> default_class_names(int n_classes);

std::vector<FeatureSet> generate_synthetic(const SynthConfig& cfg);

// Expected per-class means in each domain (noise-free), one N x D matrix per
// domain, accounting for how many samples each mode receives.
std::vector<FeatureMatrix> synthetic_class_means(const SynthConfig& cfg);

}  // namespace cstl
