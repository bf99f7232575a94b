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

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace cstl {

struct SimplexOptions {
  double spread_tol = 1e-8;  // stop when f(worst) - f(best) falls below this
  int max_evals = 2000;      // stop once this many evaluations have been spent
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
};

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double start_value = 0.0;
  int evals = 0;
  std::vector<double> best_trace;  // best vertex value after each iteration
};

// Derivative-free minimization (Lagarias et al. variant of Nelder-Mead).
// The initial simplex is `start` plus one vertex per axis, offset by steps[i].
// Throws Error(kNumeric) naming the vertex if the objective is non-finite.
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                          const Eigen::VectorXd& start, const Eigen::VectorXd& steps, const SimplexOptions& opts);

}  // namespace cstl
