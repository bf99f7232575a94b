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

// Per-class diagonal-covariance Gaussian mixtures fitted by EM, and the
// Fisher-vector mean gradient used to seed feature transfer.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cstl/dataset.hpp"

namespace cstl {

struct GaussianComponent {
  Vector mean;
  Vector var;  // per-dimension variances, >= var_floor
  double weight = 1.0;

  bool operator==(const GaussianComponent& o) const {
    return mean == o.mean && var == o.var && weight == o.weight;
  }
};

enum class DomainTag { kSource, kTarget };
std::string_view to_string(DomainTag tag);

struct ClassGmmBank {
  std::vector<std::vector<GaussianComponent>> per_class;  // N lists of G components
  DomainTag domain = DomainTag::kSource;
  int components = 0;  // G

  int num_classes() const { return static_cast<int>(per_class.size()); }
  Eigen::Index dims() const { return per_class.empty() ? 0 : per_class.front().front().mean.size(); }

  Vector class_mean(int c) const;
  // Per-dimension variance of the whole class mixture.
  Vector class_variance(int c) const;

  bool operator==(const ClassGmmBank&) const = default;
};

struct GmmOptions {
  int components = 3;
  int max_iter = 100;
  double tol = 1e-6;  // stop when mean per-sample log-likelihood improves by less
  double var_floor = 1e-6;
};

// Log-likelihood history of one class fit. A component reseed restarts the
// history, since reseeding is not an EM step.
struct EmTrace {
  std::vector<double> loglik;
  int reseeds = 0;
  int iterations = 0;
};

// EM for one sample matrix, k-means++ style initialization.
std::vector<GaussianComponent> fit_gmm(const FeatureMatrix& samples, const GmmOptions& opts, std::uint64_t seed,
                                       EmTrace* trace = nullptr);

// One mixture per class; class c is fitted with derive_seed(seed, c).
ClassGmmBank fit_class_gmms(const FeatureSet& fs, const GmmOptions& opts, std::uint64_t seed,
                            DomainTag domain = DomainTag::kSource, std::vector<EmTrace>* traces = nullptr);

// log N(f; mean, diag(var)).
double component_loglik(const GaussianComponent& c, const Eigen::Ref<const Vector>& f);

// Posterior over the components of one class for sample f.
Vector component_posteriors(std::span<const GaussianComponent> comps, const Eigen::Ref<const Vector>& f);

// Class-level displacement from the mean component of the Fisher vector:
//   g_j = 1 / (S sqrt(w_j)) * sum_k gamma_j(f_k) (f_k - mu_j) / sigma_j,   u = -sum_j g_j,
// with S the number of source rows given. The sign is flipped so that u points
// from the source samples toward the target class.
Vector fisher_displacement(const ClassGmmBank& target_bank, int c, const FeatureMatrix& source_class_samples);

}  // namespace cstl
