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

#include "cstl/reduce.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "cstl/error.hpp"

namespace cstl {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::kInvalidArgument, "reduce", what); }

void check_pair(const FeatureSet& source, const FeatureSet& target) {
  if (source.class_names != target.class_names) invalid("source and target class spaces differ");
  if (source.dims() != target.dims()) invalid("source and target feature widths differ");
  const auto sc = source.class_counts();
  const auto tc = target.class_counts();
  for (std::size_t c = 0; c < sc.size(); ++c) {
    if (sc[c] == 0 || tc[c] == 0) {
      invalid("class '" + source.class_names[c] + "' is absent from the " + (sc[c] == 0 ? "source" : "target") +
              " domain");
    }
  }
}

Vector mean_of(const FeatureMatrix& m, const std::vector<std::size_t>& rows) {
  Vector out = Vector::Zero(m.cols());
  for (auto r : rows) out += m.row(static_cast<Eigen::Index>(r)).transpose();
  return out / static_cast<double>(rows.size());
}

}  // namespace

MmdMatrices build_mmd(const FeatureSet& source, const FeatureSet& target) {
  check_pair(source, target);
  const auto ns = static_cast<Eigen::Index>(source.size());
  const auto nt = static_cast<Eigen::Index>(target.size());
  const auto n = ns + nt;

  MmdMatrices out;
  // Coefficient vector e: 1/ns on source rows, -1/nt on target rows; M0 = e e^T.
  Vector e(n);
  e.head(ns).setConstant(1.0 / static_cast<double>(ns));
  e.tail(nt).setConstant(-1.0 / static_cast<double>(nt));
  out.m0 = e * e.transpose();

  for (int c = 0; c < source.num_classes(); ++c) {
    const auto src_rows = source.rows_of_class(c);
    const auto tar_rows = target.rows_of_class(c);
    Vector ec = Vector::Zero(n);
    for (auto r : src_rows) ec[static_cast<Eigen::Index>(r)] = 1.0 / static_cast<double>(src_rows.size());
    for (auto r : tar_rows) ec[ns + static_cast<Eigen::Index>(r)] = -1.0 / static_cast<double>(tar_rows.size());
    out.mc.push_back(ec * ec.transpose());
  }

  out.h = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  return out;
}

ReductionSystem build_reduction_system(const FeatureSet& source, const FeatureSet& target, double eps) {
  check_pair(source, target);
  if (!(eps > 0.0)) invalid("regularizer eps must be > 0");
  const auto D = static_cast<Eigen::Index>(source.dims());
  const double n = static_cast<double>(source.size() + target.size());

  ReductionSystem sys;
  sys.mean = (source.features.colwise().sum() + target.features.colwise().sum()).transpose() / n;

  // X M0 X^T = d d^T with d the difference of domain means (centering cancels).
  std::vector<std::size_t> all_src(source.size()), all_tar(target.size());
  for (std::size_t i = 0; i < all_src.size(); ++i) all_src[i] = i;
  for (std::size_t i = 0; i < all_tar.size(); ++i) all_tar[i] = i;
  Vector d = mean_of(source.features, all_src) - mean_of(target.features, all_tar);
  sys.lhs = d * d.transpose();
  for (int c = 0; c < source.num_classes(); ++c) {
    Vector dc = mean_of(source.features, source.rows_of_class(c)) - mean_of(target.features, target.rows_of_class(c));
    sys.lhs.noalias() += dc * dc.transpose();
  }
  sys.lhs += eps * Eigen::MatrixXd::Identity(D, D);

  // X H X^T is the scatter of the centered combined data.
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(D, D);
  for (const auto* fs : {&source, &target}) {
    Eigen::MatrixXd centered = fs->features.rowwise() - sys.mean.transpose();
    scatter.noalias() += centered.transpose() * centered;
  }
  sys.rhs = scatter + eps * Eigen::MatrixXd::Identity(D, D);
  return sys;
}

Projection make_projection(Eigen::MatrixXd basis) {
  Projection p;
  p.mean = Vector::Zero(basis.rows());
  p.eigenvalues = Vector::Zero(basis.cols());
  p.basis = std::move(basis);
  return p;
}

Projection fit_projection(const FeatureSet& source, const FeatureSet& target, int k, double eps) {
  if (k < 1 || static_cast<std::size_t>(k) > source.dims()) {
    invalid("k = " + std::to_string(k) + " must lie in [1, " + std::to_string(source.dims()) + "]");
  }
  const auto sys = build_reduction_system(source, target, eps);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(sys.lhs, sys.rhs,
                                                                   Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumeric, "reduce", "generalized eigensolver failed to converge");
  }

  Projection p;
  p.eps = eps;
  p.mean = sys.mean;
  p.eigenvalues = solver.eigenvalues().head(k);
  p.basis = solver.eigenvectors().leftCols(k);
  // Fix each column's sign so the largest-magnitude entry is positive.
  for (Eigen::Index j = 0; j < p.basis.cols(); ++j) {
    Eigen::Index arg;
    p.basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (p.basis(arg, j) < 0.0) p.basis.col(j) *= -1.0;
  }

  const Vector residuals = eigen_residuals(sys, p);
  for (Eigen::Index j = 0; j < residuals.size(); ++j) {
    if (!(residuals[j] <= 1e-8)) {
      throw Error(ErrorKind::kNumeric, "reduce",
                  "eigenpair " + std::to_string(j) + " residual " + std::to_string(residuals[j]) + " exceeds 1e-8");
    }
  }
  return p;
}

Vector eigen_residuals(const ReductionSystem& sys, const Projection& p) {
  const double lhs_norm = sys.lhs.norm();
  const double rhs_norm = sys.rhs.norm();
  Vector out(p.basis.cols());
  for (Eigen::Index j = 0; j < p.basis.cols(); ++j) {
    const auto a = p.basis.col(j);
    const double lambda = p.eigenvalues[j];
    const double r = (sys.lhs * a - lambda * (sys.rhs * a)).norm();
    out[j] = r / (a.norm() * (lhs_norm + std::abs(lambda) * rhs_norm));
  }
  return out;
}

FeatureSet project(const Projection& p, const FeatureSet& fs) {
  if (static_cast<Eigen::Index>(fs.dims()) != p.input_dims()) {
    invalid("feature width " + std::to_string(fs.dims()) + " does not match projection input " +
            std::to_string(p.input_dims()));
  }
  FeatureMatrix centered = fs.features.rowwise() - p.mean.transpose();
  return fs.with_features(centered * p.basis);
}

FeatureMatrix lift_displacement(const Projection& p, const FeatureMatrix& original_inputs,
                                const FeatureMatrix& original_reduced, const FeatureMatrix& moved) {
  if (original_inputs.rows() != moved.rows() || original_reduced.rows() != moved.rows() ||
      moved.cols() != p.k() || original_inputs.cols() != p.input_dims()) {
    invalid("lift_displacement shape mismatch");
  }
  // B (B^T B)^-1, D x k.
  const Eigen::MatrixXd gram = p.basis.transpose() * p.basis;
  const Eigen::MatrixXd lift = p.basis * gram.ldlt().solve(Eigen::MatrixXd::Identity(p.k(), p.k()));
  FeatureMatrix delta = moved - original_reduced;
  return original_inputs + delta * lift.transpose();
}

double projected_marginal_mmd(const Eigen::MatrixXd& basis, const FeatureSet& source, const FeatureSet& target) {
  Vector d = (source.features.colwise().mean() - target.features.colwise().mean()).transpose();
  return (basis.transpose() * d).squaredNorm();
}

}  // namespace cstl
