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

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cstl/cost_matrix.hpp"
#include "cstl/dataset.hpp"
#include "cstl/svm.hpp"

namespace cstl {

// Metrics of one evaluation run.
//   accuracy           fraction of exact matches
//   weighted_accuracy  fraction with Phi(truth, pred) == 0 (task-decision correctness)
//   mean_cost          average Phi(truth, pred)
// Without a cost matrix the weighted fields mirror accuracy / error rate.
struct RunEntry {
  double accuracy = 0.0;
  double weighted_accuracy = 0.0;
  double mean_cost = 0.0;
  Eigen::MatrixXi confusion;  // rows truth, columns prediction

  bool operator==(const RunEntry& o) const {
    return accuracy == o.accuracy && weighted_accuracy == o.weighted_accuracy && mean_cost == o.mean_cost &&
           confusion == o.confusion;
  }
};

RunEntry score_predictions(std::span<const int> truth, std::span<const int> predicted, int num_classes,
                           const CostMatrix* phi);

// Throws when the model and test set disagree on the class space.
RunEntry evaluate(const MulticlassModel& model, const FeatureSet& test, const std::optional<CostMatrix>& phi);

struct EvalReport {
  std::string task;
  std::string cost_matrix;  // name of the task matrix, "none" when unweighted
  std::vector<std::string> class_names;
  std::vector<RunEntry> per_run;
  double mean_accuracy = 0.0;
  double mean_weighted_accuracy = 0.0;
  double mean_cost = 0.0;

  int runs() const { return static_cast<int>(per_run.size()); }
  // Recomputes the mean fields from per_run.
  void finalize();
  bool operator==(const EvalReport&) const = default;
};

// Structured text: key-value lines, then one confusion block per run.
void write_report(std::ostream& out, const EvalReport& report);
// Tab-separated table, one row per run plus a "mean" row.
void write_report_table(std::ostream& out, const EvalReport& report);
// Side-by-side summary of a baseline and a transfer report.
void write_report_diff(std::ostream& out, const EvalReport& baseline, const EvalReport& transfer);

}  // namespace cstl
