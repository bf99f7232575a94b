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

#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <Eigen/QR>

#include "cstl/error.hpp"
#include "cstl/reduce.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cstl;
using cstl::testing::blobs;
using cstl::testing::make_set;
using cstl::testing::random_matrix;

namespace {

// Source and target with the same class centers; target shifted by `shift`.
std::pair<FeatureSet, FeatureSet> pair_of(Eigen::Index dims, const Vector& shift, std::uint64_t seed) {
  Eigen::MatrixXd centers = random_matrix(3, dims, seed) * 3.0;
  auto src = blobs(centers, 20, 0.7, seed + 1, 0);
  auto tar = blobs(centers, 15, 0.7, seed + 2, 1);
  tar.features.rowwise() += shift.transpose();
  return {src, tar};
}

// X stacked column-wise (D x n), source first.
Eigen::MatrixXd stacked(const FeatureSet& s, const FeatureSet& t) {
  Eigen::MatrixXd x(s.dims(), s.size() + t.size());
  x << s.features.transpose(), t.features.transpose();
  return x;
}

Eigen::MatrixXd constraint(const ReductionSystem& sys, const Projection& p) {
  return p.basis.transpose() * sys.rhs * p.basis;
}

}  // namespace

TEST_CASE("mmd matrices at n_s = n_t = 1") {
  const auto s = make_set(FeatureMatrix::Constant(1, 1, 2.0), {0}, 1);
  const auto t = make_set(FeatureMatrix::Constant(1, 1, 5.0), {0}, 1, 1);
  const auto m = build_mmd(s, t);
  Eigen::MatrixXd expected(2, 2);
  expected << 1, -1, -1, 1;
  CHECK(m.m0 == expected);
}

TEST_CASE("mmd matrices: invariants and single-class degeneracy") {
  const auto s = make_set(random_matrix(4, 2, 1), {0, 0, 0, 0}, 1);
  const auto t = make_set(random_matrix(3, 2, 2), {0, 0, 0}, 1, 1);
  const auto m = build_mmd(s, t);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(7, 7);
  for (const auto& mc : m.mc) sum += mc;
  CHECK((sum - m.m0).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((m.m0 - m.m0.transpose()).norm() == 0.0);
  CHECK(m.h.rowwise().sum().cwiseAbs().maxCoeff() < 1e-15);
  CHECK(m.m0(0, 1) == doctest::Approx(1.0 / 16));
  CHECK(m.m0(4, 5) == doctest::Approx(1.0 / 9));
  CHECK(m.m0(0, 4) == doctest::Approx(-1.0 / 12));
}

TEST_CASE("mmd quadratic form equals the squared difference of domain means") {
  const auto x = random_matrix(6, 1, 17);
  const auto s = make_set(x.topRows(3), {0, 1, 0}, 2);
  const auto t = make_set(x.bottomRows(3), {1, 0, 1}, 2, 1);
  const auto m = build_mmd(s, t);
  const Vector v = x.col(0);
  double ms = 0, mt = 0;
  for (int i = 0; i < 3; ++i) ms += v[i] / 3.0;
  for (int i = 3; i < 6; ++i) mt += v[i] / 3.0;
  CHECK(v.dot(m.m0 * v) == doctest::Approx((ms - mt) * (ms - mt)).epsilon(1e-12));
  // Class 0: source rows {0, 2}, target row {4}.
  const double d0 = (v[0] + v[2]) / 2.0 - v[4];
  CHECK(v.dot(m.mc[0] * v) == doctest::Approx(d0 * d0).epsilon(1e-12));
}

TEST_CASE("mmd rejects a class missing from one domain") {
  const auto s = make_set(random_matrix(3, 2, 1), {0, 1, 0}, 2);
  const auto t = make_set(random_matrix(3, 2, 2), {0, 0, 0}, 2, 1);
  CHECK_THROWS_AS(build_mmd(s, t), Error);
  CHECK_THROWS_AS(fit_projection(s, t, 1, 1.0), Error);
}

TEST_CASE("reduction system matches the explicit matrix products") {
  auto [s, t] = pair_of(4, Vector::Constant(4, 1.5), 3);
  const auto sys = build_reduction_system(s, t, 0.5);
  const auto m = build_mmd(s, t);
  const Eigen::MatrixXd x = stacked(s, t);
  Eigen::MatrixXd mm = m.m0;
  for (const auto& mc : m.mc) mm += mc;
  const Eigen::MatrixXd lhs = x * mm * x.transpose() + 0.5 * Eigen::MatrixXd::Identity(4, 4);
  const Eigen::MatrixXd rhs = x * m.h * x.transpose() + 0.5 * Eigen::MatrixXd::Identity(4, 4);
  CHECK((lhs - sys.lhs).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((rhs - sys.rhs).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fit_projection: residuals, constraint, ascending eigenvalues") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto [s, t] = pair_of(6, random_matrix(6, 1, seed + 50).col(0), seed);
    const auto sys = build_reduction_system(s, t, 1.0);
    const auto full = fit_projection(s, t, 6, 1.0);
    const auto p = fit_projection(s, t, 3, 1.0);
    CHECK(eigen_residuals(sys, p).maxCoeff() <= 1e-8);
    CHECK((constraint(sys, p) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-6);
    for (Eigen::Index j = 1; j < full.eigenvalues.size(); ++j) CHECK(full.eigenvalues[j - 1] <= full.eigenvalues[j]);
    CHECK((p.eigenvalues - full.eigenvalues.head(3)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(p.mean.isApprox(sys.mean));
  }
}

TEST_CASE("fit_projection: identical domains give zero projected mmd") {
  auto [s, t] = pair_of(5, Vector::Zero(5), 4);
  t = s.with_features(s.features);
  const auto p = fit_projection(s, t, 3, 1.0);
  CHECK(projected_marginal_mmd(p.basis, s, t) <= 1e-10);
  // No orthonormal frame does better.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(5, 3, 100 + seed));
    const Eigen::MatrixXd frame = qr.householderQ() * Eigen::MatrixXd::Identity(5, 3);
    CHECK(projected_marginal_mmd(p.basis, s, t) <= projected_marginal_mmd(frame, s, t) + 1e-12);
  }
}

TEST_CASE("fit_projection: k = D spans the input space") {
  auto [s, t] = pair_of(4, Vector::Constant(4, 1.0), 5);
  const auto p = fit_projection(s, t, 4, 1.0);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(p.basis);
  CHECK(lu.rank() == 4);
  CHECK_THROWS_AS(fit_projection(s, t, 5, 1.0), Error);
  CHECK_THROWS_AS(fit_projection(s, t, 0, 1.0), Error);
  CHECK_THROWS_AS(fit_projection(s, t, 2, 0.0), Error);
}

TEST_CASE("fit_projection: 2-D toy agrees with a 1-degree direction search") {
  // Classes split along axis 0, domains split along axis 1.
  Eigen::MatrixXd centers(2, 2);
  centers << -3, 0, 3, 0;
  auto s = blobs(centers, 40, 0.5, 21, 0);
  auto t = blobs(centers, 40, 0.5, 22, 1);
  t.features.col(1).array() += 2.0;
  const auto sys = build_reduction_system(s, t, 1.0);

  double best_angle = 0, best_value = 1e300;
  for (int deg = 0; deg < 180; ++deg) {
    const double th = deg * std::numbers::pi / 180.0;
    Vector a(2);
    a << std::cos(th), std::sin(th);
    const double value = a.dot(sys.lhs * a) / a.dot(sys.rhs * a);
    if (value < best_value) best_value = value, best_angle = th;
  }
  const auto p = fit_projection(s, t, 1, 1.0);
  const Vector a = p.basis.col(0).normalized();
  CHECK(std::abs(a[0]) > std::abs(a[1]));
  double angle = std::atan2(a[1], a[0]);
  if (angle < 0) angle += std::numbers::pi;
  double diff = std::abs(angle - best_angle);
  diff = std::min(diff, std::numbers::pi - diff);
  CHECK(diff <= std::numbers::pi / 180.0);
}

TEST_CASE("project: identity, zeros, composition, mismatch") {
  const auto fs = make_set(random_matrix(5, 3, 8), {0, 1, 0, 1, 1}, 2);
  CHECK(project(make_projection(Eigen::MatrixXd::Identity(3, 3)), fs).features == fs.features);
  const auto zeros = fs.with_features(FeatureMatrix::Zero(5, 3));
  CHECK(project(make_projection(random_matrix(3, 2, 1)), zeros).features.isZero(0.0));

  const Eigen::MatrixXd a = random_matrix(3, 3, 2), b = random_matrix(3, 2, 3);
  const auto twice = project(make_projection(b), project(make_projection(a), fs));
  const auto once = project(make_projection(a * b), fs);
  CHECK((twice.features - once.features).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(twice.labels == fs.labels);
  CHECK(twice.groups == fs.groups);
  CHECK_THROWS_AS(project(make_projection(random_matrix(4, 2, 1)), fs), Error);
}

TEST_CASE("lifted displacement projects back onto the moved points") {
  auto [s, t] = pair_of(5, Vector::Constant(5, 0.5), 9);
  for (int k : {2, 5}) {
    const auto p = fit_projection(s, t, k, 1.0);
    const auto reduced = project(p, s);
    FeatureMatrix moved = reduced.features + random_matrix(reduced.features.rows(), k, 4);
    const auto lifted = lift_displacement(p, s.features, reduced.features, moved);
    const auto again = project(p, s.with_features(lifted));
    CHECK((again.features - moved).cwiseAbs().maxCoeff() < 1e-9);
  }
}
