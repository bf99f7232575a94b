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

#include "cstl/persist.hpp"

#include <fstream>

#include "cstl/error.hpp"
#include "cstl/keyed_text.hpp"

namespace cstl {

namespace {

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Vector read_vector(KeyedReader& r, std::string_view key, Eigen::Index n) {
  auto line = r.next(key);
  line.expect_count(static_cast<std::size_t>(n));
  return to_vector(line.reals());
}

template <typename Fn>
void with_output(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "artifact", "cannot write " + path.string());
  fn(out);
  if (!out) throw Error(ErrorKind::kIo, "artifact", "write failed for " + path.string());
}

template <typename Fn>
auto with_input(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "artifact", "missing artifact " + path.string());
  return fn(in);
}

}  // namespace

void write_projection(std::ostream& out, const Projection& p) {
  KeyedWriter w(out, "projection", kProjectionVersion);
  w.put("input_dims", static_cast<long long>(p.input_dims()));
  w.put("k", static_cast<long long>(p.k()));
  w.put("eps", p.eps);
  w.put("mean", as_span(p.mean));
  for (Eigen::Index i = 0; i < p.basis.rows(); ++i) {
    const Vector row = p.basis.row(i).transpose();
    w.put("basis", as_span(row));
  }
  w.put("eigenvalues", as_span(p.eigenvalues));
  w.end();
}

Projection read_projection(std::istream& in) {
  KeyedReader r(in, "projection", kProjectionVersion);
  const auto D = static_cast<Eigen::Index>(r.next("input_dims").integer());
  const auto k = static_cast<Eigen::Index>(r.next("k").integer());
  Projection p;
  p.eps = r.next("eps").real();
  p.mean = read_vector(r, "mean", D);
  p.basis.resize(D, k);
  for (Eigen::Index i = 0; i < D; ++i) p.basis.row(i) = read_vector(r, "basis", k).transpose();
  p.eigenvalues = read_vector(r, "eigenvalues", k);
  r.expect_end();
  return p;
}

void write_gmm_banks(std::ostream& out, const GmmArtifact& a) {
  KeyedWriter w(out, "gmm-banks", kGmmBanksVersion);
  w.put_tokens("classes", a.class_names);
  w.put("dims", static_cast<long long>(a.banks.source.dims()));
  w.put("components", a.banks.source.components);
  for (const ClassGmmBank* bank : {&a.banks.source, &a.banks.target}) {
    w.put("bank", to_string(bank->domain));
    for (std::size_t c = 0; c < bank->per_class.size(); ++c) {
      for (const auto& g : bank->per_class[c]) {
        w.put("weight", g.weight);
        w.put("mean", as_span(g.mean));
        w.put("var", as_span(g.var));
      }
    }
  }
  w.end();
}

GmmArtifact read_gmm_banks(std::istream& in) {
  KeyedReader r(in, "gmm-banks", kGmmBanksVersion);
  GmmArtifact a;
  a.class_names = r.next("classes").tokens;
  const auto k = static_cast<Eigen::Index>(r.next("dims").integer());
  const int G = static_cast<int>(r.next("components").integer());
  for (ClassGmmBank* bank : {&a.banks.source, &a.banks.target}) {
    auto tag = r.next("bank");
    tag.expect_count(1);
    if (tag.tokens[0] != "source" && tag.tokens[0] != "target") {
      throw Error(ErrorKind::kParse, "artifact", "line " + std::to_string(tag.line_no) + ": unknown bank tag");
    }
    bank->domain = tag.tokens[0] == "source" ? DomainTag::kSource : DomainTag::kTarget;
    bank->components = G;
    bank->per_class.resize(a.class_names.size());
    for (auto& comps : bank->per_class) {
      for (int j = 0; j < G; ++j) {
        GaussianComponent g;
        g.weight = r.next("weight").real();
        g.mean = read_vector(r, "mean", k);
        g.var = read_vector(r, "var", k);
        comps.push_back(std::move(g));
      }
    }
  }
  r.expect_end();
  return a;
}

void write_model(std::ostream& out, const MulticlassModel& m) {
  KeyedWriter w(out, "svm-model", kModelVersion);
  w.put("mode", to_string(m.mode));
  w.put_tokens("classes", m.class_names);
  w.put("gamma", m.params.gamma);
  w.put("c", m.params.c);
  const long long dims = m.pairs.empty() ? 0 : m.pairs.front().svm.support_vectors.cols();
  w.put("dims", dims);
  if (m.phi) {
    w.put("cost_matrix", m.phi->name.empty() ? std::string("unnamed") : m.phi->name);
    w.put_tokens("cost_classes", m.phi->class_names);
    for (Eigen::Index u = 0; u < m.phi->costs.rows(); ++u) {
      const Vector row = m.phi->costs.row(u).transpose();
      w.put("cost_row", as_span(row));
    }
  } else {
    w.put("cost_matrix", "none");
  }
  w.put("pairs", static_cast<long long>(m.pairs.size()));
  for (const auto& p : m.pairs) {
    w.put("pair", std::to_string(p.u) + " " + std::to_string(p.v));
    w.put("bias", p.svm.bias);
    w.put("sv_indices", p.svm.sv_indices);
    w.put("coef", as_span(p.svm.coef));
    for (Eigen::Index s = 0; s < p.svm.support_vectors.rows(); ++s) {
      const Vector row = p.svm.support_vectors.row(s).transpose();
      w.put("sv", as_span(row));
    }
  }
  w.end();
}

MulticlassModel read_model(std::istream& in) {
  KeyedReader r(in, "svm-model", kModelVersion);
  MulticlassModel m;
  m.mode = parse_mode(r.next("mode").token(0));
  m.class_names = r.next("classes").tokens;
  m.params.gamma = r.next("gamma").real();
  m.params.c = r.next("c").real();
  const auto dims = static_cast<Eigen::Index>(r.next("dims").integer());
  auto cm = r.next("cost_matrix");
  cm.expect_count(1);
  if (cm.tokens[0] != "none") {
    CostMatrix phi;
    phi.name = cm.tokens[0];
    phi.class_names = r.next("cost_classes").tokens;
    const auto n = static_cast<Eigen::Index>(phi.class_names.size());
    phi.costs.resize(n, n);
    for (Eigen::Index u = 0; u < n; ++u) phi.costs.row(u) = read_vector(r, "cost_row", n).transpose();
    phi.validate();
    m.phi = std::move(phi);
  }
  const auto pairs = r.next("pairs").integer();
  for (long long i = 0; i < pairs; ++i) {
    PairMachine p;
    auto uv = r.next("pair");
    uv.expect_count(2);
    p.u = static_cast<int>(uv.integer(0));
    p.v = static_cast<int>(uv.integer(1));
    p.svm.params = m.params;
    p.svm.bias = r.next("bias").real();
    p.svm.sv_indices = r.next("sv_indices").integers();
    const auto n_sv = static_cast<Eigen::Index>(p.svm.sv_indices.size());
    p.svm.coef = read_vector(r, "coef", n_sv);
    p.svm.support_vectors.resize(n_sv, dims);
    for (Eigen::Index s = 0; s < n_sv; ++s) p.svm.support_vectors.row(s) = read_vector(r, "sv", dims).transpose();
    m.pairs.push_back(std::move(p));
  }
  r.expect_end();
  return m;
}

void save_projection(const std::filesystem::path& path, const Projection& p) {
  with_output(path, [&](std::ostream& out) { write_projection(out, p); });
}
Projection load_projection(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) { return read_projection(in); });
}
void save_gmm_banks(const std::filesystem::path& path, const GmmArtifact& a) {
  with_output(path, [&](std::ostream& out) { write_gmm_banks(out, a); });
}
GmmArtifact load_gmm_banks(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) { return read_gmm_banks(in); });
}
void save_model(const std::filesystem::path& path, const MulticlassModel& m) {
  with_output(path, [&](std::ostream& out) { write_model(out, m); });
}
MulticlassModel load_model(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) { return read_model(in); });
}

}  // namespace cstl
