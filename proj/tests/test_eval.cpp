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

#include <random>
#include <sstream>
#include <string>

#include "cstl/error.hpp"
#include "cstl/eval.hpp"
#include "cstl/pipeline.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cstl;

namespace {

PipelineConfig small_config(Task task) {
  PipelineConfig cfg;
  cfg.synth.dims = 6;
  cfg.synth.n_domains = 3;
  cfg.synth.samples_per_class_per_domain = 20;
  cfg.synth.group_size = 5;
  cfg.k = 4;
  cfg.grid = {{0.25}, {1.0, 8.0}};
  cfg.folds = 2;
  cfg.runs = 2;
  cfg.threads = 1;
  cfg.task = task;
  return cfg;
}

}  // namespace

TEST_CASE("score: perfect predictor") {
  const std::vector<int> truth{0, 1, 2, 3, 3, 1};
  const auto& air = builtin_cost_matrix("airbag");
  const auto e = score_predictions(truth, truth, 4, &air);
  CHECK(e.accuracy == 1.0);
  CHECK(e.weighted_accuracy == 1.0);
  CHECK(e.mean_cost == 0.0);
  CHECK(e.confusion.trace() == 6);
}

TEST_CASE("score: detection treats small-as-adult as free") {
  const auto& det = builtin_cost_matrix("detection");
  const std::vector<int> truth{2}, pred{1};
  const auto e = score_predictions(truth, pred, 4, &det);
  CHECK(e.accuracy == 0.0);
  CHECK(e.weighted_accuracy == 1.0);
  CHECK(e.mean_cost == 0.0);
}

TEST_CASE("score: airbag table, one sample per cell") {
  // Rows truth, columns prediction; 1 marks a wrong airbag decision.
  const int wrong[4][4] = {{0, 0, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}, {1, 0, 1, 0}};
  const auto& air = builtin_cost_matrix("airbag");
  for (int t = 0; t < 4; ++t) {
    for (int p = 0; p < 4; ++p) {
      const std::vector<int> truth{t}, pred{p};
      const auto e = score_predictions(truth, pred, 4, &air);
      CHECK(e.weighted_accuracy == 1.0 - wrong[t][p]);
      CHECK(e.mean_cost == wrong[t][p]);
      CHECK(e.accuracy == (t == p ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("score: weighted accuracy dominates accuracy, confusion totals") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cls(0, 3);
  for (const char* name : {"detection", "childlock", "airbag"}) {
    const auto& phi = builtin_cost_matrix(name);
    std::vector<int> truth(200), pred(200);
    for (int i = 0; i < 200; ++i) truth[static_cast<std::size_t>(i)] = cls(rng), pred[static_cast<std::size_t>(i)] = cls(rng);
    const auto e = score_predictions(truth, pred, 4, &phi);
    CHECK(e.weighted_accuracy >= e.accuracy);
    CHECK(e.confusion.sum() == 200);
    for (int c = 0; c < 4; ++c) {
      CHECK(e.confusion.row(c).sum() == std::count(truth.begin(), truth.end(), c));
      CHECK(e.confusion.col(c).sum() == std::count(pred.begin(), pred.end(), c));
    }
    const auto plain = score_predictions(truth, pred, 4, nullptr);
    CHECK(plain.weighted_accuracy == plain.accuracy);
    CHECK(plain.mean_cost == doctest::Approx(1.0 - plain.accuracy));
  }
  const std::vector<int> a{0}, b{0, 1};
  CHECK_THROWS_AS(score_predictions(a, b, 4, nullptr), Error);
  CHECK_THROWS_AS(score_predictions({}, {}, 4, nullptr), Error);
}

TEST_CASE("report: means and text formats") {
  EvalReport r;
  r.task = "airbag";
  r.cost_matrix = "airbag";
  r.class_names = {"empty", "adult", "small", "large"};
  RunEntry a, b;
  a.accuracy = 0.5, a.weighted_accuracy = 0.75, a.mean_cost = 0.25;
  b.accuracy = 1.0, b.weighted_accuracy = 1.0, b.mean_cost = 0.0;
  a.confusion = b.confusion = Eigen::MatrixXi::Identity(4, 4);
  r.per_run = {a, b};
  r.finalize();
  CHECK(r.mean_accuracy == 0.75);
  CHECK(r.mean_weighted_accuracy == 0.875);
  CHECK(r.mean_cost == 0.125);

  std::ostringstream text, table, diff;
  write_report(text, r);
  CHECK(text.str().rfind("cstl-report 1\ntask airbag\ncost_matrix airbag\nclasses empty adult small large\nruns 2\n", 0) == 0);
  CHECK(text.str().find("confusion 1\n  1 0 0 0\n") != std::string::npos);
  write_report_table(table, r);
  CHECK(table.str() == "run\taccuracy\tweighted_accuracy\tmean_cost\n0\t0.5\t0.75\t0.25\n1\t1\t1\t0\nmean\t0.75\t0.875\t0.125\n");
  auto base = r;
  base.per_run[1].weighted_accuracy = 0.9;
  base.finalize();
  write_report_diff(diff, base, r);
  CHECK(diff.str().find("runs_transfer_not_worse 2/2") != std::string::npos);
}

TEST_CASE("protocol: shared splits, report shape, determinism") {
  const auto cfg = small_config(Task::kAirbag);
  const auto prep = prepare_data(load_domains(cfg), cfg);
  CHECK(prep.class_names() == std::vector<std::string>{"empty", "adult", "small", "large"});
  CHECK(prep.mode == MulticlassMode::kCsovo);
  CHECK(prep.sources == std::vector<int>{1, 2});

  const auto with = prepare_run(prep, cfg, 0, true);
  const auto without = prepare_run(prep, cfg, 0, false);
  CHECK(with.split.plan == without.split.plan);
  CHECK(with.split.test == without.split.test);
  CHECK(with.transferred.size() == 2);
  CHECK(without.transferred.empty());
  CHECK(!(prepare_run(prep, cfg, 1, false).split.plan == without.split.plan));

  const auto both = run_both(prep, cfg);
  CHECK(both.baseline.task == "airbag");
  CHECK(both.baseline.cost_matrix == "airbag");
  CHECK(both.transfer.runs() == 2);
  for (int r = 0; r < 2; ++r) {
    const auto& e = both.transfer.per_run[static_cast<std::size_t>(r)];
    CHECK(e.confusion.sum() == static_cast<int>(prepare_run(prep, cfg, r, false).split.test.size()));
    CHECK(e.weighted_accuracy >= e.accuracy);
  }
  CHECK(both.transfer == run_protocol(prep, cfg, true));
  CHECK(both.baseline == run_protocol(prep, cfg, false));
  CHECK(run_both(prep, cfg).transfer == both.transfer);
}

TEST_CASE("protocol: unweighted task keeps eight classes") {
  const auto cfg = small_config(Task::kUnweighted);
  const auto report = run_protocol(load_domains(cfg), cfg, false);
  CHECK(report.cost_matrix == "none");
  CHECK(report.class_names.size() == 8);
  for (const auto& e : report.per_run) {
    CHECK(e.confusion.rows() == 8);
    CHECK(e.confusion.cols() == 8);
  }
}

TEST_CASE("protocol: missing sources are rejected") {
  auto cfg = small_config(Task::kDetection);
  auto domains = load_domains(cfg);
  domains.resize(1);
  try {
    prepare_data(domains, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("no source domains") != std::string::npos);
  }
}
