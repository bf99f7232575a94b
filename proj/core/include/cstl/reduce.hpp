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

// Shared-subspace reduction for a labeled source/target pair.
//
// With X the D x n matrix of centered source-then-target samples, the basis
// columns a solve
//
//   (X M X^T + eps I) a = lambda (X H X^T + eps I) a,   M = M0 + sum_c Mc,
//
// for the k smallest lambda. M0 measures the marginal mean discrepancy between
// domains, Mc the discrepancy of class c, H is the centering matrix. Target
// labels are known, so the class terms use them directly.

#pragma once

#include <vector>

#include <Eigen/Core>

#include "cstl/dataset.hpp"

namespace cstl {

struct MmdMatrices {
  Eigen::MatrixXd m0;               // n x n marginal coefficients
  std::vector<Eigen::MatrixXd> mc;  // one n x n matrix per class
  Eigen::MatrixXd h;                // n x n centering matrix
};

// Rows are ordered source first, then target. Throws if a class is missing
// from either domain or the class spaces differ.
MmdMatrices build_mmd(const FeatureSet& source, const FeatureSet& target);

// Left- and right-hand matrices of the generalized eigenproblem (D x D).
struct ReductionSystem {
  Eigen::MatrixXd lhs;
  Eigen::MatrixXd rhs;
  Vector mean;  // combined-data mean subtracted before fitting
};

// Built from class-mean differences and the scatter matrix, never forming the
// n x n matrices; equal to X (M0 + sum Mc) X^T + eps I and X H X^T + eps I.
ReductionSystem build_reduction_system(const FeatureSet& source, const FeatureSet& target, double eps);

struct Projection {
  Eigen::MatrixXd basis;  // D x k
  Vector eigenvalues;     // k, ascending
  Vector mean;            // D
  double eps = 1.0;

  Eigen::Index input_dims() const { return basis.rows(); }
  Eigen::Index k() const { return basis.cols(); }

  bool operator==(const Projection& o) const {
    return basis == o.basis && eigenvalues == o.eigenvalues && mean == o.mean && eps == o.eps;
  }
};

// Projection with the given basis and a zero mean.
Projection make_projection(Eigen::MatrixXd basis);

Projection fit_projection(const FeatureSet& source, const FeatureSet& target, int k, double eps);

// Relative residual ||lhs a - lambda rhs a|| / (||a|| (||lhs|| + |lambda| ||rhs||)) per basis column.
Vector eigen_residuals(const ReductionSystem& sys, const Projection& p);

// Output features are (x - mean) * basis; labels, groups and domains are kept.
FeatureSet project(const Projection& p, const FeatureSet& fs);

// Maps reduced-space displacements back into input space with the minimum-norm
// lift: returns x + B (B^T B)^-1 (f_new - f_old) for each row, so projecting the
// result reproduces `moved` exactly (up to rounding).
FeatureMatrix lift_displacement(const Projection& p, const FeatureMatrix& original_inputs,
                                const FeatureMatrix& original_reduced, const FeatureMatrix& moved);

// Squared distance between the domain means of the projected data (x^T M0 x summed over columns).
double projected_marginal_mmd(const Eigen::MatrixXd& basis, const FeatureSet& source, const FeatureSet& target);

}  // namespace cstl
