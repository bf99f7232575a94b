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

#include "cstl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "cstl/error.hpp"
#include "cstl/keyed_text.hpp"
#include "cstl/seed.hpp"

namespace cstl {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::kInvalidArgument, "dataset", what); }

}  // namespace

void FeatureSet::validate() const {
  const auto n = size();
  if (static_cast<std::size_t>(features.rows()) != n || groups.size() != n || domains.size() != n) {
    invalid("row counts of features, labels, groups and domains differ");
  }
  if (class_names.size() < 2) invalid("at least two classes are required");
  if (features.cols() < 1) invalid("at least one feature column is required");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes()) invalid("label out of range at row " + std::to_string(i));
  }
  if (!features.allFinite()) invalid("non-finite feature value");
}

FeatureSet FeatureSet::subset(std::span<const std::size_t> rows) const {
  FeatureSet out;
  out.class_names = class_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  out.groups.reserve(rows.size());
  out.domains.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(r));
    out.labels.push_back(labels[r]);
    out.groups.push_back(groups[r]);
    out.domains.push_back(domains[r]);
  }
  return out;
}

std::vector<std::size_t> FeatureSet::rows_of_class(int c) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < size(); ++i) {
    if (labels[i] == c) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FeatureSet::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

std::vector<std::string> FeatureSet::distinct_groups() const {
  std::vector<std::string> out = groups;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

FeatureSet FeatureSet::with_features(FeatureMatrix replacement) const {
  if (static_cast<std::size_t>(replacement.rows()) != size()) invalid("replacement feature matrix row count differs");
  FeatureSet out = *this;
  out.features = std::move(replacement);
  return out;
}

FeatureSet concat(const FeatureSet& a, const FeatureSet& b) {
  if (a.class_names != b.class_names) invalid("cannot concatenate feature sets with different class spaces");
  if (a.size() > 0 && b.size() > 0 && a.dims() != b.dims()) invalid("cannot concatenate feature sets of different width");
  FeatureSet out;
  out.class_names = a.class_names;
  const auto cols = a.size() > 0 ? a.features.cols() : b.features.cols();
  out.features.resize(a.features.rows() + b.features.rows(), cols);
  if (a.size() > 0) out.features.topRows(a.features.rows()) = a.features;
  if (b.size() > 0) out.features.bottomRows(b.features.rows()) = b.features;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.groups = a.groups;
  out.groups.insert(out.groups.end(), b.groups.begin(), b.groups.end());
  out.domains = a.domains;
  out.domains.insert(out.domains.end(), b.domains.begin(), b.domains.end());
  return out;
}

FeatureSet reindex_classes(const FeatureSet& fs, const std::vector<std::string>& class_names) {
  std::vector<int> map(fs.class_names.size(), -1);
  for (std::size_t i = 0; i < fs.class_names.size(); ++i) {
    auto it = std::find(class_names.begin(), class_names.end(), fs.class_names[i]);
    if (it == class_names.end()) invalid("class '" + fs.class_names[i] + "' is not in the target class list");
    map[i] = static_cast<int>(it - class_names.begin());
  }
  FeatureSet out = fs;
  out.class_names = class_names;
  for (auto& l : out.labels) l = map[static_cast<std::size_t>(l)];
  return out;
}

void align_class_spaces(std::vector<FeatureSet>& sets) {
  std::vector<std::string> names;
  for (const auto& s : sets) {
    for (const auto& n : s.class_names) {
      if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    }
  }
  for (auto& s : sets) s = reindex_classes(s, names);
}

const std::vector<std::string>& superclass_names() {
  static const std::vector<std::string> names{"empty", "adult", "small", "large"};
  return names;
}

FeatureSet collapse_to_superclasses(const FeatureSet& fs) {
  const auto& super = superclass_names();
  std::vector<int> map(fs.class_names.size(), -1);
  for (std::size_t i = 0; i < fs.class_names.size(); ++i) {
    const auto& name = fs.class_names[i];
    std::string target;
    if (name == "empty" || name == "adult" || name == "small" || name == "large") {
      target = name;
    } else if (name.rfind("small_", 0) == 0) {
      target = "small";
    } else if (name.rfind("large_", 0) == 0) {
      target = "large";
    } else {
      invalid("class '" + name + "' has no superclass (expected empty, adult, small_*, large_*)");
    }
    map[i] = static_cast<int>(std::find(super.begin(), super.end(), target) - super.begin());
  }
  FeatureSet out = fs;
  out.class_names = super;
  for (auto& l : out.labels) l = map[static_cast<std::size_t>(l)];
  return out;
}

// ---------------------------------------------------------------------------
// CSV

FeatureSet read_features(std::istream& in, const std::optional<std::vector<std::string>>& class_list) {
  using Reason = ParseError::Reason;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(Reason::kHeader, 1, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  if (header.size() < 4 || header[0] != "label" || header[1] != "group" || header[2] != "domain") {
    throw ParseError(Reason::kHeader, 1, "header must be label,group,domain,f0,...");
  }
  const std::size_t dims = header.size() - 3;
  for (std::size_t d = 0; d < dims; ++d) {
    if (header[3 + d] != "f" + std::to_string(d)) {
      throw ParseError(Reason::kHeader, 1, "feature column " + std::to_string(d) + " must be named f" + std::to_string(d));
    }
  }

  FeatureSet fs;
  if (class_list) fs.class_names = *class_list;
  std::unordered_map<std::string, int> class_index;
  for (std::size_t i = 0; i < fs.class_names.size(); ++i) class_index[fs.class_names[i]] = static_cast<int>(i);

  std::vector<double> values;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw ParseError(Reason::kColumnCount, row_no,
                       "expected " + std::to_string(header.size()) + " columns, found " + std::to_string(cells.size()));
    }
    if (cells[0].empty() || cells[1].empty()) throw ParseError(Reason::kBadField, row_no, "empty label or group");

    const std::string label(cells[0]);
    auto it = class_index.find(label);
    int idx;
    if (it != class_index.end()) {
      idx = it->second;
    } else if (class_list) {
      throw ParseError(Reason::kUnknownClass, row_no, "unknown class '" + label + "'");
    } else {
      idx = static_cast<int>(fs.class_names.size());
      fs.class_names.push_back(label);
      class_index.emplace(label, idx);
    }

    long long domain;
    if (!try_parse_int(cells[2], domain) || domain < 0) {
      throw ParseError(Reason::kBadField, row_no, "domain must be a non-negative integer");
    }
    for (std::size_t d = 0; d < dims; ++d) {
      double v;
      if (!try_parse_double(cells[3 + d], v)) {
        throw ParseError(Reason::kNonNumeric, row_no, "non-numeric value in column f" + std::to_string(d));
      }
      if (!std::isfinite(v)) {
        throw ParseError(Reason::kNonFinite, row_no, "non-finite value in column f" + std::to_string(d));
      }
      values.push_back(v);
    }
    fs.labels.push_back(idx);
    fs.groups.emplace_back(cells[1]);
    fs.domains.push_back(static_cast<int>(domain));
  }

  fs.features = Eigen::Map<const FeatureMatrix>(values.data(), static_cast<Eigen::Index>(fs.labels.size()),
                                                static_cast<Eigen::Index>(dims));
  fs.validate();
  return fs;
}

FeatureSet load_features(const std::filesystem::path& path, FeatureFormat /*format*/,
                         const std::optional<std::vector<std::string>>& class_list) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "dataset", "cannot open " + path.string());
  return read_features(in, class_list);
}

void write_features(std::ostream& out, const FeatureSet& fs) {
  out << "label,group,domain";
  for (std::size_t d = 0; d < fs.dims(); ++d) out << ",f" << d;
  out << '\n';
  for (std::size_t i = 0; i < fs.size(); ++i) {
    out << fs.class_names[static_cast<std::size_t>(fs.labels[i])] << ',' << fs.groups[i] << ',' << fs.domains[i];
    for (Eigen::Index d = 0; d < fs.features.cols(); ++d) {
      out << ',' << format_double(fs.features(static_cast<Eigen::Index>(i), d));
    }
    out << '\n';
  }
}

void save_features(const std::filesystem::path& path, const FeatureSet& fs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "dataset", "cannot write " + path.string());
  write_features(out, fs);
  if (!out) throw Error(ErrorKind::kIo, "dataset", "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Splitting

namespace {

struct GroupRows {
  std::string name;
  std::vector<std::size_t> rows;
};

std::vector<GroupRows> rows_by_group(std::span<const std::string> groups) {
  std::map<std::string, std::vector<std::size_t>> by_name;
  for (std::size_t i = 0; i < groups.size(); ++i) by_name[groups[i]].push_back(i);
  std::vector<GroupRows> out;
  out.reserve(by_name.size());
  for (auto& [name, rows] : by_name) out.push_back({name, std::move(rows)});
  return out;
}

// Shuffles `groups` and marks which go to the test side.
std::vector<bool> assign_test_groups(std::vector<GroupRows>& groups, double test_fraction, std::uint64_t seed) {
  Rng rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);

  std::size_t total = 0;
  for (const auto& g : groups) total += g.rows.size();
  const double target = test_fraction * static_cast<double>(total);
  std::vector<bool> in_test(groups.size(), false);
  double count = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double with = count + static_cast<double>(groups[g].rows.size());
    if (std::abs(with - target) < std::abs(count - target)) {
      in_test[g] = true;
      count = with;
    }
  }

  auto smallest = [&](bool side) {
    std::size_t best = groups.size();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (in_test[g] == side && (best == groups.size() || groups[g].rows.size() < groups[best].rows.size())) best = g;
    }
    return best;
  };
  if (std::none_of(in_test.begin(), in_test.end(), [](bool b) { return b; })) in_test[smallest(false)] = true;
  if (std::all_of(in_test.begin(), in_test.end(), [](bool b) { return b; })) in_test[smallest(true)] = false;
  return in_test;
}

void append_groups(SplitPlan& plan, const std::vector<GroupRows>& groups, const std::vector<bool>& in_test) {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& side = in_test[g] ? plan.test_rows : plan.train_rows;
    side.insert(side.end(), groups[g].rows.begin(), groups[g].rows.end());
  }
}

}  // namespace

SplitPlan split_group_aware(const FeatureSet& fs, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) invalid("test_fraction must lie in (0, 1)");
  auto groups = rows_by_group(fs.groups);
  if (groups.size() < 2) invalid("group-aware split needs at least 2 distinct groups");

  SplitPlan plan;
  plan.seed = seed;
  append_groups(plan, groups, assign_test_groups(groups, test_fraction, seed));
  std::sort(plan.train_rows.begin(), plan.train_rows.end());
  std::sort(plan.test_rows.begin(), plan.test_rows.end());
  return plan;
}

SplitPlan split_stratified_groups(const FeatureSet& fs, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) invalid("test_fraction must lie in (0, 1)");
  auto groups = rows_by_group(fs.groups);
  if (groups.size() < 2) invalid("group-aware split needs at least 2 distinct groups");

  std::vector<std::vector<GroupRows>> strata(static_cast<std::size_t>(std::max(fs.num_classes(), 1)));
  for (auto& g : groups) strata[static_cast<std::size_t>(fs.labels[g.rows.front()])].push_back(std::move(g));

  SplitPlan plan;
  plan.seed = seed;
  for (std::size_t c = 0; c < strata.size(); ++c) {
    auto& stratum = strata[c];
    if (stratum.empty()) continue;
    if (stratum.size() == 1) {
      append_groups(plan, stratum, {false});
      continue;
    }
    append_groups(plan, stratum, assign_test_groups(stratum, test_fraction, derive_seed(seed, c)));
  }
  if (plan.test_rows.empty()) invalid("no class has enough groups for a test side");
  std::sort(plan.train_rows.begin(), plan.train_rows.end());
  std::sort(plan.test_rows.begin(), plan.test_rows.end());
  return plan;
}

std::vector<int> group_folds(std::span<const std::string> groups, int folds, std::uint64_t seed) {
  if (folds < 2) invalid("at least 2 folds are required");
  auto by_group = rows_by_group(groups);
  if (by_group.size() < static_cast<std::size_t>(folds)) {
    invalid("only " + std::to_string(by_group.size()) + " groups for " + std::to_string(folds) + " folds");
  }
  Rng rng(seed);
  std::shuffle(by_group.begin(), by_group.end(), rng);
  // Largest groups first, then each to the currently lightest fold.
  std::stable_sort(by_group.begin(), by_group.end(),
                   [](const GroupRows& a, const GroupRows& b) { return a.rows.size() > b.rows.size(); });
  std::vector<std::size_t> load(static_cast<std::size_t>(folds), 0);
  std::vector<int> fold_of(groups.size(), 0);
  for (const auto& g : by_group) {
    auto f = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    load[f] += g.rows.size();
    for (auto r : g.rows) fold_of[r] = static_cast<int>(f);
  }
  return fold_of;
}

// ---------------------------------------------------------------------------
// Synthetic benchmark

void SynthConfig::validate() const {
  if (n_classes < 1 || dims < 1 || n_domains < 1 || per_class_modes < 1 || samples_per_class_per_domain < 1 ||
      group_size < 1) {
    invalid("synthetic config counts must all be >= 1");
  }
  if (!(noise_sigma >= 0.0)) invalid("noise_sigma must be >= 0");
  if (!(shift.scale > 0.0)) invalid("shift scale must be > 0");
  if (!(class_separation >= 0.0) || !(mode_spread >= 0.0)) invalid("class_separation and mode_spread must be >= 0");
}

std::vector<std::string> default_class_names(int n_classes) {
  if (n_classes == 8) {
    return {"empty",         "small_booster", "small_child_seat", "small_no_seat",
            "large_booster", "large_child_seat", "large_no_seat", "adult"};
  }
  if (n_classes == 4) return superclass_names();
  std::vector<std::string> names;
  for (int c = 0; c < n_classes; ++c) names.push_back("c" + std::to_string(c));
  return names;
}

namespace {

struct LatentModel {
  // modes[c][m] is a D-vector in the reference (domain 0) space.
  std::vector<std::vector<Vector>> modes;
  // Linear part and offset for each domain.
  std::vector<Eigen::MatrixXd> linear;
  std::vector<Vector> offset;
};

LatentModel build_latent_model(const SynthConfig& cfg) {
  const auto D = static_cast<Eigen::Index>(cfg.dims);
  Rng rng(derive_seed(cfg.seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](double scale) {
    Vector v(D);
    for (Eigen::Index i = 0; i < D; ++i) v[i] = scale * normal(rng);
    return v;
  };

  LatentModel model;
  model.modes.resize(static_cast<std::size_t>(cfg.n_classes));
  for (auto& class_modes : model.modes) {
    Vector anchor = draw(cfg.class_separation);
    for (int m = 0; m < cfg.per_class_modes; ++m) {
      class_modes.push_back(cfg.per_class_modes == 1 ? anchor : Vector(anchor + draw(cfg.mode_spread)));
    }
  }

  for (int d = 0; d < cfg.n_domains; ++d) {
    Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(D, D);
    const double angle = cfg.shift.rotation * d;
    for (Eigen::Index p = 0; p + 1 < D; p += 2) {
      rot(p, p) = std::cos(angle);
      rot(p, p + 1) = -std::sin(angle);
      rot(p + 1, p) = std::sin(angle);
      rot(p + 1, p + 1) = std::cos(angle);
    }
    model.linear.push_back(std::pow(cfg.shift.scale, d) * rot);
    Vector dir = draw(1.0);
    if (d == 0 || dir.norm() == 0.0) {
      model.offset.push_back(Vector::Zero(D));
    } else {
      model.offset.push_back(cfg.shift.translation * dir / dir.norm());
    }
  }
  return model;
}

// Mode index for each sample of one class: occupants (runs of group_size
// samples) cycle through the class's modes.
std::vector<int> mode_schedule(const SynthConfig& cfg) {
  std::vector<int> out;
  for (int s = 0; s < cfg.samples_per_class_per_domain; ++s) out.push_back((s / cfg.group_size) % cfg.per_class_modes);
  return out;
}

}  // namespace

std::vector<FeatureSet> generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const auto model = build_latent_model(cfg);
  const auto schedule = mode_schedule(cfg);
  const auto names = default_class_names(cfg.n_classes);
  const auto per_domain = static_cast<Eigen::Index>(cfg.n_classes) * cfg.samples_per_class_per_domain;

  std::vector<FeatureSet> out;
  for (int d = 0; d < cfg.n_domains; ++d) {
    Rng rng(derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(d)));
    std::normal_distribution<double> normal(0.0, 1.0);
    FeatureSet fs;
    fs.class_names = names;
    fs.features.resize(per_domain, cfg.dims);
    Eigen::Index row = 0;
    for (int c = 0; c < cfg.n_classes; ++c) {
      for (int s = 0; s < cfg.samples_per_class_per_domain; ++s, ++row) {
        const auto& mode = model.modes[static_cast<std::size_t>(c)][static_cast<std::size_t>(schedule[s])];
        Vector x = model.linear[static_cast<std::size_t>(d)] * mode + model.offset[static_cast<std::size_t>(d)];
        if (cfg.noise_sigma > 0.0) {
          for (Eigen::Index j = 0; j < x.size(); ++j) x[j] += cfg.noise_sigma * normal(rng);
        }
        fs.features.row(row) = x.transpose();
        fs.labels.push_back(c);
        fs.groups.push_back("d" + std::to_string(d) + "-" + names[static_cast<std::size_t>(c)] + "-o" +
                            std::to_string(s / cfg.group_size));
        fs.domains.push_back(d);
      }
    }
    out.push_back(std::move(fs));
  }
  return out;
}

std::vector<FeatureMatrix> synthetic_class_means(const SynthConfig& cfg) {
  cfg.validate();
  const auto model = build_latent_model(cfg);
  const auto schedule = mode_schedule(cfg);
  std::vector<int> mode_count(static_cast<std::size_t>(cfg.per_class_modes), 0);
  for (int m : schedule) ++mode_count[static_cast<std::size_t>(m)];

  std::vector<FeatureMatrix> out;
  for (int d = 0; d < cfg.n_domains; ++d) {
    FeatureMatrix means(cfg.n_classes, cfg.dims);
    for (int c = 0; c < cfg.n_classes; ++c) {
      Vector latent = Vector::Zero(cfg.dims);
      for (int m = 0; m < cfg.per_class_modes; ++m) {
        latent += mode_count[static_cast<std::size_t>(m)] * model.modes[static_cast<std::size_t>(c)][static_cast<std::size_t>(m)];
      }
      latent /= static_cast<double>(cfg.samples_per_class_per_domain);
      means.row(c) = (model.linear[static_cast<std::size_t>(d)] * latent + model.offset[static_cast<std::size_t>(d)]).transpose();
    }
    out.push_back(std::move(means));
  }
  return out;
}

}  // namespace cstl
