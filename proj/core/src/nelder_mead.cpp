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

#include "cstl/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cstl/error.hpp"
#include "cstl/keyed_text.hpp"

namespace cstl {

namespace {

std::string describe(const Eigen::VectorXd& x) {
  std::ostringstream os;
  os << '[';
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << format_double(x[i]);
  os << ']';
  return os.str();
}

}  // namespace

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                          const Eigen::VectorXd& start, const Eigen::VectorXd& steps, const SimplexOptions& opts) {
  const auto n = start.size();
  if (steps.size() != n) throw Error(ErrorKind::kInvalidArgument, "simplex", "step vector size differs from start");
  if (!(opts.spread_tol > 0.0)) throw Error(ErrorKind::kInvalidArgument, "simplex", "spread_tol must be > 0");

  SimplexResult result;
  auto eval = [&](const Eigen::VectorXd& x) {
    const double v = objective(x);
    ++result.evals;
    if (!std::isfinite(v)) throw Error(ErrorKind::kNumeric, "simplex", "non-finite objective at vertex " + describe(x));
    return v;
  };

  std::vector<Eigen::VectorXd> vertex(static_cast<std::size_t>(n + 1), start);
  std::vector<double> value(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) vertex[static_cast<std::size_t>(i + 1)][i] += steps[i];
  for (std::size_t i = 0; i < vertex.size(); ++i) value[i] = eval(vertex[i]);
  result.start_value = value[0];

  std::vector<std::size_t> order(vertex.size());
  auto sort_vertices = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    std::vector<Eigen::VectorXd> v2;
    std::vector<double> f2;
    for (auto i : order) {
      v2.push_back(std::move(vertex[i]));
      f2.push_back(value[i]);
    }
    vertex = std::move(v2);
    value = std::move(f2);
  };
  sort_vertices();

  const auto worst = static_cast<std::size_t>(n);
  while (value[worst] - value[0] >= opts.spread_tol && result.evals < opts.max_evals) {
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < worst; ++i) centroid += vertex[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + opts.reflection * (centroid - vertex[worst]);
    const double fr = eval(xr);
    bool do_shrink = false;

    if (fr < value[0]) {
      const Eigen::VectorXd xe = centroid + opts.expansion * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        vertex[worst] = xe;
        value[worst] = fe;
      } else {
        vertex[worst] = xr;
        value[worst] = fr;
      }
    } else if (fr < value[worst - 1]) {
      vertex[worst] = xr;
      value[worst] = fr;
    } else if (fr < value[worst]) {
      const Eigen::VectorXd xc = centroid + opts.contraction * (xr - centroid);
      const double fc = eval(xc);
      if (fc <= fr) {
        vertex[worst] = xc;
        value[worst] = fc;
      } else {
        do_shrink = true;
      }
    } else {
      const Eigen::VectorXd xcc = centroid - opts.contraction * (centroid - vertex[worst]);
      const double fcc = eval(xcc);
      if (fcc < value[worst]) {
        vertex[worst] = xcc;
        value[worst] = fcc;
      } else {
        do_shrink = true;
      }
    }

    if (do_shrink) {
      for (std::size_t i = 1; i < vertex.size(); ++i) {
        vertex[i] = vertex[0] + opts.shrink * (vertex[i] - vertex[0]);
        value[i] = eval(vertex[i]);
      }
    }
    sort_vertices();
    result.best_trace.push_back(value[0]);
  }

  result.x = vertex[0];
  result.value = value[0];
  return result;
}

}  // namespace cstl
