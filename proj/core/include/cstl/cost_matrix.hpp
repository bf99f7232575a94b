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

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cstl {

// costs(u, v) is the cost of predicting class v when the truth is u.
// Entries lie in [0, 1]; the diagonal is exactly zero.
struct CostMatrix {
  Eigen::MatrixXd costs;
  std::vector<std::string> class_names;
  std::string name;  // builtin name or file stem, informational

  int size() const { return static_cast<int>(costs.rows()); }
  double operator()(int truth, int predicted) const { return costs(truth, predicted); }

  void validate() const;

  bool operator==(const CostMatrix& o) const {
    return costs == o.costs && class_names == o.class_names && name == o.name;
  }
};

CostMatrix make_cost_matrix(std::string name, std::vector<std::string> class_names,
                            std::initializer_list<std::initializer_list<double>> rows);

// All-zero N x N matrix (no cost bias).
CostMatrix zero_cost_matrix(const std::vector<std::string>& class_names);

// Standard 0/1 misclassification costs.
CostMatrix zero_one_cost_matrix(const std::vector<std::string>& class_names);

// Builtins over the {empty, adult, small, large} superclasses:
//   detection, childlock, airbag  (task matrices for the weighted classifiers)
//   paper-sec4-example            (transfer-bias matrix for the detection setting)
const std::map<std::string, CostMatrix>& builtin_cost_matrices();
const CostMatrix& builtin_cost_matrix(const std::string& name);

// CSV: a header row of class names, then N rows of N reals.
CostMatrix read_cost_matrix(std::istream& in, std::string name = {});
CostMatrix load_cost_matrix(const std::filesystem::path& path);
void write_cost_matrix(std::ostream& out, const CostMatrix& m);

// Reorders `m` onto `class_names`; every name must be present.
CostMatrix align_cost_matrix(const CostMatrix& m, const std::vector<std::string>& class_names);

}  // namespace cstl
