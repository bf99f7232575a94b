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
#include <random>

#include "cstl/error.hpp"
#include "cstl/gmm.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cstl;
using cstl::testing::make_set;
using cstl::testing::random_matrix;

namespace {

GaussianComponent component(std::initializer_list<double> mean, std::initializer_list<double> var, double w = 1.0) {
  GaussianComponent c;
  c.mean = Eigen::Map<const Vector>(mean.begin(), static_cast<Eigen::Index>(mean.size()));
  c.var = Eigen::Map<const Vector>(var.begin(), static_cast<Eigen::Index>(var.size()));
  c.weight = w;
  return c;
}

ClassGmmBank single_bank(std::vector<std::vector<GaussianComponent>> per_class) {
  ClassGmmBank b;
  b.components = static_cast<int>(per_class.front().size());
  b.per_class = std::move(per_class);
  b.domain = DomainTag::kTarget;
  return b;
}

FeatureMatrix two_clusters(int per_cluster, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  FeatureMatrix x(2 * per_cluster, 1);
  for (int i = 0; i < per_cluster; ++i) {
    x(i, 0) = -5.0 + n01(rng);
    x(per_cluster + i, 0) = 5.0 + n01(rng);
  }
  return x;
}

}  // namespace

TEST_CASE("G = 1 reaches the closed-form fixed point") {
  const auto x = random_matrix(50, 3, 4);
  GmmOptions opts;
  opts.components = 1;
  const auto comps = fit_gmm(x, opts, 1);
  REQUIRE(comps.size() == 1);
  const Vector mean = x.colwise().mean().transpose();
  const Vector var = ((x.rowwise() - mean.transpose()).array().square().colwise().sum() / 50.0).transpose();
  CHECK((comps[0].mean - mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((comps[0].var - var).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(comps[0].weight == doctest::Approx(1.0));
}

TEST_CASE("variance floor applies to degenerate dimensions") {
  FeatureMatrix x = random_matrix(20, 2, 3);
  x.col(1).setConstant(4.0);
  GmmOptions opts;
  opts.components = 1;
  opts.var_floor = 1e-4;
  const auto comps = fit_gmm(x, opts, 1);
  CHECK(comps[0].var[1] == 1e-4);
}

TEST_CASE("two clusters at +-5 are recovered for 10 seeds") {
  GmmOptions opts;
  opts.components = 2;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto comps = fit_gmm(two_clusters(500, seed), opts, seed);
    const auto& lo = comps[0].mean[0] < comps[1].mean[0] ? comps[0] : comps[1];
    const auto& hi = comps[0].mean[0] < comps[1].mean[0] ? comps[1] : comps[0];
    CHECK(std::abs(lo.mean[0] + 5.0) <= 0.2);
    CHECK(std::abs(hi.mean[0] - 5.0) <= 0.2);
    CHECK(std::abs(lo.weight - 0.5) <= 0.05);
    CHECK(std::abs(hi.weight - 0.5) <= 0.05);
  }
}

TEST_CASE("duplicating every sample leaves the fit unchanged") {
  const auto x = random_matrix(40, 2, 8);
  FeatureMatrix doubled(80, 2);
  for (Eigen::Index i = 0; i < 40; ++i) doubled.row(2 * i) = doubled.row(2 * i + 1) = x.row(i);
  GmmOptions opts;
  opts.components = 3;
  const auto a = fit_gmm(x, opts, 5);
  const auto b = fit_gmm(doubled, opts, 5);
  for (std::size_t j = 0; j < a.size(); ++j) {
    CHECK((a[j].mean - b[j].mean).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((a[j].var - b[j].var).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(a[j].weight - b[j].weight) < 1e-9);
  }
}

TEST_CASE("EM log-likelihood never decreases over 100 random fits") {
  std::mt19937_64 rng(99);
  for (int fit = 0; fit < 100; ++fit) {
    const int k = 1 + fit % 4;
    const int n = 30 + 7 * (fit % 10);
    GmmOptions opts;
    opts.components = 1 + fit % 3;
    FeatureMatrix x = random_matrix(n, k, 1000 + static_cast<std::uint64_t>(fit));
    for (Eigen::Index i = 0; i < n / 2; ++i) x.row(i).array() += 3.0;
    EmTrace trace;
    const auto comps = fit_gmm(x, opts, rng(), &trace);
    for (std::size_t i = 1; i < trace.loglik.size(); ++i) {
      CHECK((trace.loglik[i] - trace.loglik[i - 1]) / n >= -1e-9);
    }
    double w = 0;
    for (const auto& c : comps) {
      w += c.weight;
      CHECK(c.var.minCoeff() >= opts.var_floor);
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("fit is deterministic for a fixed seed") {
  const auto x = random_matrix(60, 3, 6);
  GmmOptions opts;
  CHECK(fit_gmm(x, opts, 11) == fit_gmm(x, opts, 11));
}

TEST_CASE("class banks: shape, weights, preconditions") {
  auto fs = make_set(random_matrix(12, 2, 3), {0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1}, 2);
  GmmOptions opts;
  opts.components = 2;
  std::vector<EmTrace> traces;
  const auto bank = fit_class_gmms(fs, opts, 7, DomainTag::kSource, &traces);
  CHECK(bank.num_classes() == 2);
  CHECK(bank.dims() == 2);
  CHECK(traces.size() == 2);
  for (const auto& comps : bank.per_class) {
    CHECK(comps.size() == 2);
    double w = 0;
    for (const auto& c : comps) w += c.weight;
    CHECK(w == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(bank == fit_class_gmms(fs, opts, 7, DomainTag::kSource));
  opts.components = 7;
  CHECK_THROWS_AS(fit_class_gmms(fs, opts, 7), Error);
}

TEST_CASE("component log-likelihood") {
  CHECK(component_loglik(component({0.0}, {1.0}), Vector::Zero(1)) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
  CHECK(component_loglik(component({0.0}, {1.0}), Vector::Zero(1)) == doctest::Approx(-0.9189).epsilon(1e-4));

  const auto c = component({0.3, -1.2}, {0.5, 2.0});
  Vector f(2);
  f << 1.1, 0.4;
  // Direct product of two univariate densities.
  double direct = 1.0;
  for (int d = 0; d < 2; ++d) {
    const double diff = f[d] - c.mean[d];
    direct *= std::exp(-diff * diff / (2 * c.var[d])) / std::sqrt(2 * std::numbers::pi * c.var[d]);
  }
  CHECK(component_loglik(c, f) == doctest::Approx(std::log(direct)).epsilon(1e-12));

  auto shifted = c;
  Vector delta(2);
  delta << 10.0, -3.0;
  shifted.mean += delta;
  CHECK(component_loglik(shifted, f + delta) == doctest::Approx(component_loglik(c, f)).epsilon(1e-12));
  CHECK_THROWS_AS(component_loglik(c, Vector::Zero(3)), Error);
}

TEST_CASE("component posteriors sum to one") {
  std::vector<GaussianComponent> comps{component({0.0}, {1.0}, 0.3), component({2.0}, {0.5}, 0.7)};
  for (double x : {-3.0, 0.0, 1.0, 5.0}) {
    const Vector g = component_posteriors(comps, Vector::Constant(1, x));
    CHECK(g.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("fisher displacement: hand-evaluated cases") {
  const auto bank = single_bank({{component({2.0}, {1.0})}});
  const FeatureMatrix at_zero = FeatureMatrix::Zero(1, 1);
  CHECK(fisher_displacement(bank, 0, at_zero)[0] == doctest::Approx(2.0));

  const FeatureMatrix at_mean = FeatureMatrix::Constant(3, 1, 2.0);
  CHECK(fisher_displacement(bank, 0, at_mean).isZero(0.0));

  // sigma doubled (variance x4) halves |u|.
  const auto wide = single_bank({{component({2.0}, {4.0})}});
  CHECK(fisher_displacement(wide, 0, at_zero)[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(fisher_displacement(bank, 1, at_zero), Error);
  CHECK_THROWS_AS(fisher_displacement(bank, 0, FeatureMatrix(0, 1)), Error);
}

TEST_CASE("fisher displacement with G = 1 equals the negated mean standardized residual") {
  const auto bank = single_bank({{component({0.5, -1.0, 2.0}, {0.25, 4.0, 1.5})}});
  const auto samples = random_matrix(9, 3, 12);
  Vector expected = Vector::Zero(3);
  for (Eigen::Index i = 0; i < 9; ++i) {
    for (int d = 0; d < 3; ++d) {
      expected[d] -= (samples(i, d) - bank.per_class[0][0].mean[d]) / std::sqrt(bank.per_class[0][0].var[d]) / 9.0;
    }
  }
  CHECK((fisher_displacement(bank, 0, samples) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("class mixture moments") {
  const auto bank = single_bank({{component({0.0}, {1.0}, 0.5), component({4.0}, {1.0}, 0.5)}});
  CHECK(bank.class_mean(0)[0] == doctest::Approx(2.0));
  // Law of total variance: 1 + 4.
  CHECK(bank.class_variance(0)[0] == doctest::Approx(5.0));
}
