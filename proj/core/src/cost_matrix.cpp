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

#include "cstl/cost_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "cstl/dataset.hpp"
#include "cstl/error.hpp"
#include "cstl/keyed_text.hpp"

namespace cstl {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::kInvalidArgument, "cost-matrix", what); }

}  // namespace

void CostMatrix::validate() const {
  if (costs.rows() != costs.cols()) invalid("cost matrix must be square");
  if (static_cast<std::size_t>(costs.rows()) != class_names.size()) invalid("cost matrix size differs from class list");
  for (Eigen::Index u = 0; u < costs.rows(); ++u) {
    for (Eigen::Index v = 0; v < costs.cols(); ++v) {
      const double c = costs(u, v);
      if (!(c >= 0.0 && c <= 1.0)) {
        invalid("entry (" + class_names[static_cast<std::size_t>(u)] + ", " + class_names[static_cast<std::size_t>(v)] +
                ") = " + format_double(c) + " is outside [0, 1]");
      }
    }
    if (costs(u, u) != 0.0) invalid("diagonal entry for '" + class_names[static_cast<std::size_t>(u)] + "' is not zero");
  }
}

CostMatrix make_cost_matrix(std::string name, std::vector<std::string> class_names,
                            std::initializer_list<std::initializer_list<double>> rows) {
  CostMatrix m;
  m.name = std::move(name);
  m.class_names = std::move(class_names);
  const auto n = static_cast<Eigen::Index>(rows.size());
  m.costs.resize(n, n);
  Eigen::Index u = 0;
  for (const auto& row : rows) {
    if (static_cast<Eigen::Index>(row.size()) != n) invalid("ragged cost matrix");
    Eigen::Index v = 0;
    for (double x : row) m.costs(u, v++) = x;
    ++u;
  }
  m.validate();
  return m;
}

CostMatrix zero_cost_matrix(const std::vector<std::string>& class_names) {
  const auto n = static_cast<Eigen::Index>(class_names.size());
  return CostMatrix{Eigen::MatrixXd::Zero(n, n), class_names, "zero"};
}

CostMatrix zero_one_cost_matrix(const std::vector<std::string>& class_names) {
  const auto n = static_cast<Eigen::Index>(class_names.size());
  return CostMatrix{Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n), class_names, "zero-one"};
}

const std::map<std::string, CostMatrix>& builtin_cost_matrices() {
  static const std::map<std::string, CostMatrix> builtins = [] {
    const auto& names = superclass_names();  // E, A, S, L
    std::map<std::string, CostMatrix> m;
    m.emplace("detection", make_cost_matrix("detection", names,
                                            {{0, 1, 1, 1},
                                             {1, 0, 0, 0},
                                             {1, 0, 0, 0},
                                             {1, 0, 0, 0}}));
    m.emplace("childlock", make_cost_matrix("childlock", names,
                                            {{0, 0, 0, 0},
                                             {0, 0, 1, 1},
                                             {1, 1, 0, 0},
                                             {1, 1, 0, 0}}));
    m.emplace("airbag", make_cost_matrix("airbag", names,
                                         {{0, 0, 0, 0},
                                          {1, 0, 1, 0},
                                          {0, 1, 0, 1},
                                          {1, 0, 1, 0}}));
    m.emplace("paper-sec4-example", make_cost_matrix("paper-sec4-example", names,
                                                     {{0.0, 0.4, 0.2, 0.3},
                                                      {0.4, 0.0, 0.2, 0.1},
                                                      {0.2, 0.4, 0.0, 0.1},
                                                      {0.3, 0.1, 0.1, 0.0}}));
    return m;
  }();
  return builtins;
}

const CostMatrix& builtin_cost_matrix(const std::string& name) {
  const auto& all = builtin_cost_matrices();
  auto it = all.find(name);
  if (it == all.end()) invalid("no builtin cost matrix named '" + name + "'");
  return it->second;
}

CostMatrix read_cost_matrix(std::istream& in, std::string name) {
  auto fail = [](std::size_t row, const std::string& what) -> void {
    throw Error(ErrorKind::kParse, "cost-matrix", "row " + std::to_string(row) + ": " + what);
  };
  std::string line;
  if (!std::getline(in, line)) fail(1, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  CostMatrix m;
  m.name = std::move(name);
  for (auto tok : split(line, ',')) {
    auto t = trim(tok);
    if (t.empty()) fail(1, "empty class name");
    m.class_names.emplace_back(t);
  }
  const auto n = static_cast<Eigen::Index>(m.class_names.size());
  m.costs.resize(n, n);
  Eigen::Index u = 0;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (u >= n) fail(row_no, "more than " + std::to_string(n) + " data rows");
    const auto cells = split(line, ',');
    if (static_cast<Eigen::Index>(cells.size()) != n) fail(row_no, "expected " + std::to_string(n) + " entries");
    for (Eigen::Index v = 0; v < n; ++v) {
      double x;
      if (!try_parse_double(trim(cells[static_cast<std::size_t>(v)]), x)) fail(row_no, "non-numeric entry");
      m.costs(u, v) = x;
    }
    ++u;
  }
  if (u != n) fail(row_no, "expected " + std::to_string(n) + " data rows, found " + std::to_string(u));
  m.validate();
  return m;
}

CostMatrix load_cost_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cost-matrix", "cannot open " + path.string());
  return read_cost_matrix(in, path.stem().string());
}

void write_cost_matrix(std::ostream& out, const CostMatrix& m) {
  for (std::size_t i = 0; i < m.class_names.size(); ++i) out << (i ? "," : "") << m.class_names[i];
  out << '\n';
  for (Eigen::Index u = 0; u < m.costs.rows(); ++u) {
    for (Eigen::Index v = 0; v < m.costs.cols(); ++v) out << (v ? "," : "") << format_double(m.costs(u, v));
    out << '\n';
  }
}

CostMatrix align_cost_matrix(const CostMatrix& m, const std::vector<std::string>& class_names) {
  std::vector<Eigen::Index> idx;
  for (const auto& name : class_names) {
    auto it = std::find(m.class_names.begin(), m.class_names.end(), name);
    if (it == m.class_names.end()) invalid("cost matrix '" + m.name + "' has no class '" + name + "'");
    idx.push_back(static_cast<Eigen::Index>(it - m.class_names.begin()));
  }
  if (class_names.size() != m.class_names.size()) {
    invalid("cost matrix '" + m.name + "' covers " + std::to_string(m.class_names.size()) + " classes, data has " +
            std::to_string(class_names.size()));
  }
  CostMatrix out;
  out.name = m.name;
  out.class_names = class_names;
  const auto n = static_cast<Eigen::Index>(idx.size());
  out.costs.resize(n, n);
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = 0; v < n; ++v) out.costs(u, v) = m.costs(idx[static_cast<std::size_t>(u)], idx[static_cast<std::size_t>(v)]);
  }
  return out;
}

}  // namespace cstl
