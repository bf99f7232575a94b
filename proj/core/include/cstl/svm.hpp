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

// RBF-kernel support vector machines.
//
// Binary machines solve the weighted soft-margin dual
//
//   min  1/2 a^T Q a - e^T a,   0 <= a_i <= c * weight_i,   y^T a = 0,
//
// with Q_ij = y_i y_j exp(-gamma ||x_i - x_j||^2), by SMO with second-order
// working-set selection. Multi-class models combine pairwise machines by
// voting; the cost-sensitive variant (CSOVO) trains every pair (u, v) on all
// examples with weight |Phi(y, u) - Phi(y, v)| and label toward the cheaper
// class.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cstl/cost_matrix.hpp"
#include "cstl/dataset.hpp"

namespace cstl {

struct KernelParams {
  double gamma = 1.0;
  double c = 1.0;

  void validate() const;
  bool operator==(const KernelParams&) const = default;
};

struct SmoOptions {
  double tol = 1e-3;       // stop when max KKT violation m(a) - M(a) falls below
  long long max_iter = 0;  // 0: max(10^7, 100 n)
};

struct BinarySvm {
  FeatureMatrix support_vectors;
  Vector coef;  // alpha_i * y_i per support vector
  double bias = 0.0;
  KernelParams params;
  std::vector<int> sv_indices;  // rows of the training matrix

  double decision(const Eigen::Ref<const Vector>& x) const;
  bool operator==(const BinarySvm& o) const {
    return support_vectors == o.support_vectors && coef == o.coef && bias == o.bias && params == o.params &&
           sv_indices == o.sv_indices;
  }
};

struct SmoStats {
  long long iterations = 0;
  double kkt_gap = 0.0;  // m(a) - M(a) at termination
};

Eigen::MatrixXd rbf_gram(const FeatureMatrix& a, const FeatureMatrix& b, double gamma);

// labels are +1 / -1. Examples with weight 0 are ignored.
BinarySvm train_binary(const FeatureMatrix& features, std::span<const int> labels, std::span<const double> weights,
                       const KernelParams& params, const SmoOptions& opts = {}, SmoStats* stats = nullptr);

// Maximal KKT violation m(a) - M(a) of `svm` on its training data, recomputed from scratch.
double kkt_violation(const BinarySvm& svm, const FeatureMatrix& features, std::span<const int> labels,
                     std::span<const double> weights);

enum class MulticlassMode { kOvo, kCsovo };
std::string_view to_string(MulticlassMode mode);
MulticlassMode parse_mode(std::string_view s);

struct PairMachine {
  int u = 0;  // positive side
  int v = 0;  // negative side
  BinarySvm svm;

  bool operator==(const PairMachine&) const = default;
};

struct MulticlassModel {
  MulticlassMode mode = MulticlassMode::kOvo;
  KernelParams params;
  std::vector<PairMachine> pairs;
  std::optional<CostMatrix> phi;
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  bool operator==(const MulticlassModel&) const = default;
};

// Examples used by the (u, v) machine: row indices, +1/-1 labels and weights.
struct PairProblem {
  std::vector<std::size_t> rows;
  std::vector<int> labels;
  std::vector<double> weights;
};
PairProblem pair_problem(std::span<const int> labels, int u, int v, MulticlassMode mode, const CostMatrix* phi);

// Trains one machine per class pair. In CSOVO mode a pair whose either side is
// empty after weighting is skipped; a model with no machines is an error.
MulticlassModel train_multiclass(const FeatureSet& fs, MulticlassMode mode, const std::optional<CostMatrix>& phi,
                                 const KernelParams& params, unsigned threads = 1);

// Majority vote over pairwise machines; ties go to the lowest class index.
int predict(const MulticlassModel& model, const Eigen::Ref<const Vector>& f);
std::vector<int> predict_all(const MulticlassModel& model, const FeatureMatrix& features);

struct ParamGrid {
  std::vector<double> gamma;
  std::vector<double> c;

  // gamma in {2^-7 .. 2^3}, c in {2^-3 .. 2^7}.
  static ParamGrid defaults();
};

struct GridCell {
  KernelParams params;
  double score = 0.0;
  int failed_folds = 0;
};

struct GridSearchResult {
  KernelParams best;
  std::vector<GridCell> cells;
};

// Group-aware k-fold cross-validation over the grid. Scores are mean held-out
// accuracy (zero-cost decision rate when `phi` is given); a fold that cannot be
// trained scores 0. Ties go to smaller c, then smaller gamma, then grid order.
GridSearchResult grid_search_detailed(const FeatureSet& fs, const ParamGrid& grid, int folds, std::uint64_t seed,
                                      MulticlassMode mode = MulticlassMode::kOvo,
                                      const std::optional<CostMatrix>& phi = {}, unsigned threads = 1);

KernelParams grid_search(const FeatureSet& fs, const ParamGrid& grid, int folds, std::uint64_t seed,
                         MulticlassMode mode = MulticlassMode::kOvo, const std::optional<CostMatrix>& phi = {},
                         unsigned threads = 1);

}  // namespace cstl
