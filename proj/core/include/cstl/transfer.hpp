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

// Cost-weighted feature transfer.
//
// Every source feature f with label l is described by its responsibility
// matrix under the source class mixtures, F_src(f) (N x G). A transferred
// feature g is sought whose cost-weighted responsibility matrix under the
// target mixtures, F_tar(g), matches it:
//
//   F_src(f)_ij  ∝ w_ij P(f | src_ij)
//   F_tar(g)_ij  ∝ Psi(Phi(i, l)) w_ij P(g | tar_ij)
//   T(g) = sum_ij |F_src(f)_ij - F_tar(g)_ij|^p
//
// Both matrices are normalized jointly over all (class, component) pairs.
// Normalizing each class row separately would cancel the Psi factor and make
// the cost matrix inert. T is minimized by Nelder-Mead starting from
// f + tau * u_l, where u_l is the class's Fisher-vector displacement.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "cstl/cost_matrix.hpp"
#include "cstl/dataset.hpp"
#include "cstl/gmm.hpp"

namespace cstl {

enum class Psi { kExp, kIdentityPlusOne };
std::string_view to_string(Psi psi);
Psi parse_psi(std::string_view s);

// tau is either solved per class (centroid matching) or fixed.
struct TauMode {
  bool centroid_match = true;
  double fixed = 0.0;

  static TauMode centroid() { return {}; }
  static TauMode constant(double tau) { return {false, tau}; }
  bool operator==(const TauMode&) const = default;
};

struct TransferConfig {
  Psi psi = Psi::kExp;
  TauMode tau{};
  double norm_power = 3.0;
  int max_eval_factor = 200;  // evaluation budget per feature = factor * k
  double spread_tol = 1e-8;
  double init_step_frac = 0.05;  // simplex step as a fraction of the target-class std

  void validate() const;
};

// Flattened mixture bank with precomputed normalizers, for fast repeated
// evaluation of responsibility matrices.
class BankEvaluator {
 public:
  explicit BankEvaluator(const ClassGmmBank& bank);

  int num_classes() const { return n_classes_; }
  int components() const { return components_; }
  Eigen::Index dims() const { return means_.cols(); }

  // Unnormalized log terms log(w_ij) + log P(f | ij), laid out row-major (i, j).
  void log_terms(const Eigen::Ref<const Vector>& f, Eigen::Ref<Vector> out) const;

  // Responsibilities normalized jointly over all (i, j); optional per-class
  // log-offsets are added before normalization. Output is N x G.
  Eigen::MatrixXd responsibilities(const Eigen::Ref<const Vector>& f, const Vector* class_log_offsets = nullptr) const;

 private:
  int n_classes_;
  int components_;
  Eigen::MatrixXd means_;    // NG x k
  Eigen::MatrixXd inv_var_;  // NG x k
  Vector log_const_;         // NG
};

// Per-class log Psi(Phi(i, label)) minus its minimum over i. Shifting by a
// constant leaves the joint normalization unchanged, and a constant column
// yields exact zeros.
Vector cost_log_offsets(const CostMatrix& phi, int label, Psi psi);

Eigen::MatrixXd responsibilities(const ClassGmmBank& bank, const Eigen::Ref<const Vector>& f);
Eigen::MatrixXd weighted_responsibilities(const ClassGmmBank& bank, const Eigen::Ref<const Vector>& f, int label,
                                          const CostMatrix& phi, Psi psi);

// sum_ij |a_ij - b_ij|^p, a monotone transform of the L^p distance.
double transfer_objective(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double norm_power);

// tau for one class. Centroid matching minimizes
// ||(mean_src + tau u) - mean_tar|| using the banks' class means; zero when ||u|| < 1e-12.
double embedding_scale(const Vector& u, int label, const TauMode& mode, const ClassGmmBank& src_bank,
                       const ClassGmmBank& tar_bank);

Vector initial_embedding(const Vector& f, int label, const std::vector<Vector>& u_by_class, const TauMode& mode,
                         const ClassGmmBank& src_bank, const ClassGmmBank& tar_bank);

struct FeatureTransfer {
  Vector transferred;
  double before = 0.0;  // objective at the initial embedding
  double after = 0.0;
  int evals = 0;
  std::vector<double> best_trace;
};

// Minimizes T starting from `start` (normally the initial embedding of f).
FeatureTransfer transfer_feature(const Vector& f, const Vector& start, int label, const ClassGmmBank& src_bank,
                                 const ClassGmmBank& tar_bank, const CostMatrix& phi, const TransferConfig& cfg);

struct TransferBanks {
  ClassGmmBank source;
  ClassGmmBank target;
};

// Source bank seeded with derive_seed(seed, kSourceGmm), target with kTargetGmm.
TransferBanks fit_transfer_banks(const FeatureSet& src, const FeatureSet& tar, const GmmOptions& gmm,
                                 std::uint64_t seed);

struct TransferResult {
  FeatureSet transferred;
  std::vector<double> objective_before;
  std::vector<double> objective_after;
  std::vector<int> eval_counts;
  std::vector<Vector> displacement;  // u per class
  std::vector<double> tau;           // tau per class

  bool operator==(const TransferResult&) const = default;
};

// Transfers every source feature with fixed banks. Features are independent;
// `threads` workers (0 = hardware concurrency) share them without affecting
// the result.
TransferResult transfer_with_banks(const FeatureSet& src, const TransferBanks& banks, const CostMatrix& phi,
                                   const TransferConfig& cfg, unsigned threads = 1);

TransferResult transfer_all(const FeatureSet& src, const FeatureSet& tar, const CostMatrix& phi,
                            const TransferConfig& cfg, const GmmOptions& gmm, std::uint64_t seed,
                            unsigned threads = 1);

// Mean over rows of the unweighted responsibility mass on each row's own class.
double mean_own_class_mass(const ClassGmmBank& bank, const FeatureSet& fs);

}  // namespace cstl
