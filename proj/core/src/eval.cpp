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

#include "cstl/eval.hpp"

#include <ostream>

#include "cstl/error.hpp"
#include "cstl/keyed_text.hpp"

namespace cstl {

RunEntry score_predictions(std::span<const int> truth, std::span<const int> predicted, int num_classes,
                           const CostMatrix* phi) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorKind::kInvalidArgument, "eval", "truth and prediction counts differ");
  }
  if (truth.empty()) throw Error(ErrorKind::kInvalidArgument, "eval", "cannot score an empty test set");
  if (phi && phi->size() != num_classes) {
    throw Error(ErrorKind::kInvalidArgument, "eval", "cost matrix size differs from the class space");
  }
  RunEntry e;
  e.confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);
  std::size_t exact = 0, zero_cost = 0;
  double cost = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++e.confusion(truth[i], predicted[i]);
    exact += truth[i] == predicted[i];
    if (phi) {
      const double c = (*phi)(truth[i], predicted[i]);
      cost += c;
      zero_cost += c == 0.0;
    }
  }
  const double n = static_cast<double>(truth.size());
  e.accuracy = static_cast<double>(exact) / n;
  if (phi) {
    e.weighted_accuracy = static_cast<double>(zero_cost) / n;
    e.mean_cost = cost / n;
  } else {
    e.weighted_accuracy = e.accuracy;
    e.mean_cost = 1.0 - e.accuracy;
  }
  return e;
}

RunEntry evaluate(const MulticlassModel& model, const FeatureSet& test, const std::optional<CostMatrix>& phi) {
  if (model.class_names != test.class_names) {
    throw Error(ErrorKind::kInvalidArgument, "eval", "model and test set use different class spaces");
  }
  const auto pred = predict_all(model, test.features);
  return score_predictions(test.labels, pred, test.num_classes(), phi ? &*phi : nullptr);
}

void EvalReport::finalize() {
  mean_accuracy = mean_weighted_accuracy = mean_cost = 0.0;
  for (const auto& r : per_run) {
    mean_accuracy += r.accuracy;
    mean_weighted_accuracy += r.weighted_accuracy;
    mean_cost += r.mean_cost;
  }
  if (!per_run.empty()) {
    const double n = static_cast<double>(per_run.size());
    mean_accuracy /= n;
    mean_weighted_accuracy /= n;
    mean_cost /= n;
  }
}

void write_report(std::ostream& out, const EvalReport& report) {
  out << "cstl-report 1\n";
  out << "task " << report.task << '\n';
  out << "cost_matrix " << report.cost_matrix << '\n';
  out << "classes";
  for (const auto& c : report.class_names) out << ' ' << c;
  out << '\n';
  out << "runs " << report.runs() << '\n';
  out << "mean_accuracy " << format_double(report.mean_accuracy) << '\n';
  out << "mean_weighted_accuracy " << format_double(report.mean_weighted_accuracy) << '\n';
  out << "mean_cost " << format_double(report.mean_cost) << '\n';
  for (int r = 0; r < report.runs(); ++r) {
    const auto& e = report.per_run[static_cast<std::size_t>(r)];
    out << "run " << r << " accuracy " << format_double(e.accuracy) << " weighted_accuracy "
        << format_double(e.weighted_accuracy) << " mean_cost " << format_double(e.mean_cost) << '\n';
    out << "confusion " << r << '\n';
    for (Eigen::Index i = 0; i < e.confusion.rows(); ++i) {
      for (Eigen::Index j = 0; j < e.confusion.cols(); ++j) out << (j ? " " : "  ") << e.confusion(i, j);
      out << '\n';
    }
  }
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  out << "run\taccuracy\tweighted_accuracy\tmean_cost\n";
  for (int r = 0; r < report.runs(); ++r) {
    const auto& e = report.per_run[static_cast<std::size_t>(r)];
    out << r << '\t' << format_double(e.accuracy) << '\t' << format_double(e.weighted_accuracy) << '\t'
        << format_double(e.mean_cost) << '\n';
  }
  out << "mean\t" << format_double(report.mean_accuracy) << '\t' << format_double(report.mean_weighted_accuracy)
      << '\t' << format_double(report.mean_cost) << '\n';
}

void write_report_diff(std::ostream& out, const EvalReport& baseline, const EvalReport& transfer) {
  out << "task " << transfer.task << '\n';
  out << "cost_matrix " << transfer.cost_matrix << '\n';
  out << "metric\tbaseline\ttransfer\tdelta\n";
  auto row = [&](const char* name, double b, double t) {
    out << name << '\t' << format_double(b) << '\t' << format_double(t) << '\t' << format_double(t - b) << '\n';
  };
  row("mean_accuracy", baseline.mean_accuracy, transfer.mean_accuracy);
  row("mean_weighted_accuracy", baseline.mean_weighted_accuracy, transfer.mean_weighted_accuracy);
  row("mean_cost", baseline.mean_cost, transfer.mean_cost);
  int wins = 0;
  const auto runs = std::min(baseline.per_run.size(), transfer.per_run.size());
  for (std::size_t r = 0; r < runs; ++r) wins += transfer.per_run[r].weighted_accuracy >= baseline.per_run[r].weighted_accuracy;
  out << "runs_transfer_not_worse " << wins << '/' << runs << '\n';
}

}  // namespace cstl
