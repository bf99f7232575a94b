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

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "cstl/cost_matrix.hpp"
#include "cstl/error.hpp"
#include "cstl/svm.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cstl;
using cstl::testing::blobs;
using cstl::testing::class_list;
using cstl::testing::make_set;
using cstl::testing::random_matrix;

namespace {

Eigen::MatrixXd square_centers() {
  Eigen::MatrixXd c(4, 2);
  c << 0, 0, 6, 0, 0, 6, 6, 6;
  return c;
}

// Overlapping 2-class problem with +-1 labels.
struct Binary {
  FeatureMatrix x;
  std::vector<int> y;
};

Binary overlapping(int n, std::uint64_t seed) {
  Binary b;
  b.x = random_matrix(n, 2, seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = i % 2 == 0 ? 1 : -1;
    b.x(i, 0) += 0.8 * label;
    b.y.push_back(label);
  }
  return b;
}

}  // namespace

TEST_CASE("binary svm: symmetric two-point problem") {
  FeatureMatrix x(2, 1);
  x << -1, 1;
  const std::vector<int> y{-1, 1};
  const std::vector<double> w{1.0, 1.0};
  const auto svm = train_binary(x, y, w, {1.0, 10.0});
  const double alpha = 1.0 / (1.0 - std::exp(-4.0));
  CHECK(std::abs(svm.bias) < 1e-6);
  REQUIRE(svm.coef.size() == 2);
  CHECK(std::abs(std::abs(svm.coef[0]) - alpha) < 1e-3);
  CHECK(std::abs(svm.coef[0] + svm.coef[1]) < 1e-9);
  for (double t : {0.1, 0.5, 2.0}) {
    CHECK(svm.decision(Vector::Constant(1, t)) == doctest::Approx(-svm.decision(Vector::Constant(1, -t))));
    CHECK(svm.decision(Vector::Constant(1, t)) > 0.0);
  }
  CHECK(std::abs(svm.decision(Vector::Zero(1))) < 1e-6);
  CHECK(svm.decision(Vector::Constant(1, 1.0)) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("binary svm: KKT conditions and box constraints") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uw(0.2, 3.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto b = overlapping(60, seed);
    std::vector<double> w(60);
    for (auto& v : w) v = uw(rng);
    const KernelParams params{0.5, 2.0};
    SmoStats stats;
    const auto svm = train_binary(b.x, b.y, w, params, {}, &stats);
    CHECK(stats.kkt_gap <= 1e-3);
    CHECK(kkt_violation(svm, b.x, b.y, w) <= 1e-3 + 1e-9);
    for (Eigen::Index j = 0; j < svm.coef.size(); ++j) {
      const auto row = static_cast<std::size_t>(svm.sv_indices[static_cast<std::size_t>(j)]);
      CHECK(std::abs(svm.coef[j]) <= params.c * w[row] + 1e-12);
      CHECK(svm.coef[j] * b.y[row] > 0.0);
    }
  }
}

TEST_CASE("binary svm: doubling weights with halved c gives the same machine") {
  const auto b = overlapping(50, 9);
  const std::vector<double> ones(50, 1.0), twos(50, 2.0);
  const auto a = train_binary(b.x, b.y, ones, {0.7, 4.0});
  const auto d = train_binary(b.x, b.y, twos, {0.7, 2.0});
  const auto probe = random_matrix(30, 2, 77);
  for (Eigen::Index i = 0; i < probe.rows(); ++i) {
    CHECK(std::abs(a.decision(probe.row(i).transpose()) - d.decision(probe.row(i).transpose())) < 1e-9);
  }
}

TEST_CASE("binary svm: zero weights are ignored, invalid input rejected") {
  auto b = overlapping(40, 3);
  std::vector<double> w(40, 1.0);
  FeatureMatrix extra(41, 2);
  extra << b.x, Eigen::RowVector2d(100.0, 100.0);
  auto y = b.y;
  y.push_back(1);
  auto w2 = w;
  w2.push_back(0.0);
  const auto a = train_binary(b.x, b.y, w, {1.0, 1.0});
  const auto z = train_binary(extra, y, w2, {1.0, 1.0});
  CHECK(a.coef == z.coef);
  CHECK(a.bias == z.bias);

  CHECK_THROWS_AS(train_binary(b.x, std::vector<int>(40, 1), w, {1.0, 1.0}), Error);
  CHECK_THROWS_AS(train_binary(b.x, b.y, w, {0.0, 1.0}), Error);
  CHECK_THROWS_AS(train_binary(b.x, b.y, w, {1.0, -1.0}), Error);
  w[3] = -1.0;
  CHECK_THROWS_AS(train_binary(b.x, b.y, w, {1.0, 1.0}), Error);
}

TEST_CASE("multiclass ovo: separable blobs are fit exactly") {
  const auto fs = blobs(square_centers(), 25, 0.6, 4);
  const auto model = train_multiclass(fs, MulticlassMode::kOvo, std::nullopt, {0.5, 10.0});
  CHECK(model.pairs.size() == 6);
  CHECK(predict_all(model, fs.features) == fs.labels);
  for (int c = 0; c < 4; ++c) CHECK(predict(model, square_centers().row(c).transpose()) == c);
}

TEST_CASE("multiclass: two classes give one machine") {
  Eigen::MatrixXd centers(2, 2);
  centers << 0, 0, 4, 4;
  const auto fs = blobs(centers, 20, 0.5, 8);
  const auto model = train_multiclass(fs, MulticlassMode::kOvo, std::nullopt, {1.0, 1.0});
  REQUIRE(model.pairs.size() == 1);
  CHECK(model.pairs[0].u == 0);
  CHECK(model.pairs[0].v == 1);
}

TEST_CASE("multiclass: vote is invariant to machine order, ties go low") {
  const auto fs = blobs(square_centers(), 20, 1.5, 6);
  auto model = train_multiclass(fs, MulticlassMode::kOvo, std::nullopt, {0.3, 2.0});
  const FeatureMatrix probe = random_matrix(200, 2, 13) * 4.0;
  const auto before = predict_all(model, probe);
  std::reverse(model.pairs.begin(), model.pairs.end());
  CHECK(predict_all(model, probe) == before);
  std::rotate(model.pairs.begin(), model.pairs.begin() + 2, model.pairs.end());
  CHECK(predict_all(model, probe) == before);

  // Three classes, cyclic votes: 0 beats 1, 1 beats 2, 2 beats 0.
  MulticlassModel cyc;
  cyc.class_names = class_list(3);
  auto machine = [](double bias) {
    BinarySvm s;
    s.support_vectors = FeatureMatrix::Zero(1, 1);
    s.coef = Vector::Zero(1);
    s.bias = bias;
    return s;
  };
  cyc.pairs = {{0, 1, machine(1.0)}, {1, 2, machine(1.0)}, {0, 2, machine(-1.0)}};
  CHECK(predict(cyc, Vector::Zero(1)) == 0);
}

TEST_CASE("csovo with 0/1 costs reproduces ovo") {
  const auto fs = blobs(square_centers(), 20, 1.8, 10);
  CostMatrix flat = zero_cost_matrix(class_list(4));
  flat.costs.setOnes();
  flat.costs.diagonal().setZero();
  const KernelParams params{0.4, 3.0};
  const auto ovo = train_multiclass(fs, MulticlassMode::kOvo, std::nullopt, params);
  const auto cs = train_multiclass(fs, MulticlassMode::kCsovo, flat, params);
  const FeatureMatrix probe = random_matrix(300, 2, 21) * 4.0;
  CHECK(predict_all(cs, probe) == predict_all(ovo, probe));
  REQUIRE(cs.pairs.size() == ovo.pairs.size());
  for (std::size_t i = 0; i < cs.pairs.size(); ++i) CHECK(cs.pairs[i].svm == ovo.pairs[i].svm);
}

TEST_CASE("csovo: pair problems follow the cost matrix") {
  const auto& air = builtin_cost_matrix("airbag");
  const std::vector<int> labels{0, 1, 2, 3};
  // Pair (0, 1): empty has no preference; adult and large are cheaper as 1, small as 0.
  const auto p = pair_problem(labels, 0, 1, MulticlassMode::kCsovo, &air);
  CHECK(p.rows == std::vector<std::size_t>{1, 2, 3});
  CHECK(p.labels == std::vector<int>{-1, 1, -1});
  CHECK(p.weights == std::vector<double>{1.0, 1.0, 1.0});

  const auto ovo = pair_problem(labels, 1, 3, MulticlassMode::kOvo, nullptr);
  CHECK(ovo.rows == std::vector<std::size_t>{1, 3});
  CHECK(ovo.labels == std::vector<int>{1, -1});
}

TEST_CASE("csovo: skipped pairs, all-zero costs, missing matrix") {
  const auto fs = blobs(square_centers(), 10, 0.5, 2);
  const auto& det = builtin_cost_matrix("detection");
  const auto model = train_multiclass(fs, MulticlassMode::kCsovo, det, {1.0, 1.0});
  // Only pairs involving class 0 carry weight.
  CHECK(model.pairs.size() == 3);
  for (const auto& p : model.pairs) CHECK(p.u == 0);
  CHECK(model.phi.has_value());

  const auto zero = zero_cost_matrix(class_list(4));
  try {
    train_multiclass(fs, MulticlassMode::kCsovo, zero, {1.0, 1.0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("no trainable pairs") != std::string::npos);
  }
  CHECK_THROWS_AS(train_multiclass(fs, MulticlassMode::kCsovo, std::nullopt, {1.0, 1.0}), Error);
}

TEST_CASE("multiclass: single class is rejected") {
  const auto fs = make_set(random_matrix(6, 2, 1), {0, 0, 0, 0, 0, 0}, 1);
  CHECK_THROWS_AS(train_multiclass(fs, MulticlassMode::kOvo, std::nullopt, {1.0, 1.0}), Error);
  CHECK(parse_mode("csovo") == MulticlassMode::kCsovo);
  CHECK(parse_mode(to_string(MulticlassMode::kOvo)) == MulticlassMode::kOvo);
  CHECK_THROWS_AS(parse_mode("ova"), Error);
}

TEST_CASE("grid search: single cell and identical cells") {
  const auto fs = blobs(square_centers(), 12, 1.0, 3, 0, 2);
  const auto one = grid_search_detailed(fs, {{0.25}, {2.0}}, 3, 1);
  CHECK(one.best == KernelParams{0.25, 2.0});
  CHECK(one.cells.size() == 1);

  const auto same = grid_search_detailed(fs, {{0.25, 0.25}, {2.0, 2.0}}, 3, 1);
  REQUIRE(same.cells.size() == 4);
  for (const auto& c : same.cells) CHECK(c.score == same.cells[0].score);
  CHECK(same.best == KernelParams{0.25, 2.0});
  CHECK_THROWS_AS(grid_search(fs, {{}, {1.0}}, 3, 1), Error);
  CHECK_THROWS_AS(grid_search(fs, {{1.0}, {1.0}}, 1, 1), Error);
}

TEST_CASE("grid search: scores match an exhaustive re-evaluation") {
  const auto fs = blobs(square_centers(), 15, 2.2, 12, 0, 3);
  const ParamGrid grid{{1.0 / 16, 0.25, 1.0}, {0.5, 4.0, 32.0}};
  const int folds = 3;
  const std::uint64_t seed = 7;
  const auto& child = builtin_cost_matrix("childlock");
  for (bool weighted : {false, true}) {
    const auto mode = weighted ? MulticlassMode::kCsovo : MulticlassMode::kOvo;
    const std::optional<CostMatrix> phi = weighted ? std::optional<CostMatrix>(child) : std::nullopt;
    const auto result = grid_search_detailed(fs, grid, folds, seed, mode, phi);
    const auto fold_of = group_folds(fs.groups, folds, seed);
    double top = -1.0;
    for (const auto& cell : result.cells) {
      double total = 0.0;
      for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> tr, te;
        for (std::size_t i = 0; i < fs.size(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
        const auto model = train_multiclass(fs.subset(tr), mode, phi, cell.params);
        std::size_t good = 0;
        for (auto r : te) {
          const int pred = predict(model, fs.features.row(static_cast<Eigen::Index>(r)).transpose());
          good += phi ? ((*phi)(fs.labels[r], pred) == 0.0) : (pred == fs.labels[r]);
        }
        total += static_cast<double>(good) / static_cast<double>(te.size());
      }
      CHECK(cell.score == doctest::Approx(total / folds).epsilon(1e-12));
      CHECK(cell.failed_folds == 0);
      top = std::max(top, cell.score);
    }
    const auto best = std::find_if(result.cells.begin(), result.cells.end(),
                                   [&](const GridCell& c) { return c.params == result.best; });
    REQUIRE(best != result.cells.end());
    CHECK(best->score == top);
    for (const auto& cell : result.cells) {
      if (cell.score == top) CHECK(cell.params.c >= result.best.c);
    }
    CHECK(grid_search(fs, grid, folds, seed, mode, phi) == result.best);
  }
}

TEST_CASE("rbf gram matrix") {
  const auto a = random_matrix(4, 3, 1), b = random_matrix(5, 3, 2);
  const auto k = rbf_gram(a, b, 0.3);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 5; ++j)
      CHECK(k(i, j) == doctest::Approx(std::exp(-0.3 * (a.row(i) - b.row(j)).squaredNorm())).epsilon(1e-12));
  CHECK((rbf_gram(a, a, 0.3).diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);
}
