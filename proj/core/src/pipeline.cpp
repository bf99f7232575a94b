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

#include "cstl/pipeline.hpp"

#include <algorithm>
#include <filesystem>

#include "cstl/error.hpp"
#include "cstl/seed.hpp"

namespace cstl {

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, "pipeline", msg); }

bool is_superclass_space(const std::vector<std::string>& names) {
  auto sorted = names;
  auto super = superclass_names();
  std::sort(sorted.begin(), sorted.end());
  std::sort(super.begin(), super.end());
  return sorted == super;
}

// Puts known occupant classes in their canonical order so that every loader of
// the same files sees the same class indices.
void canonical_order(std::vector<FeatureSet>& sets) {
  align_class_spaces(sets);
  for (const auto& canon : {default_class_names(8), superclass_names()}) {
    const auto& names = sets.front().class_names;
    const bool known = std::all_of(names.begin(), names.end(), [&](const std::string& n) {
      return std::find(canon.begin(), canon.end(), n) != canon.end();
    });
    if (!known) continue;
    std::vector<std::string> ordered;
    for (const auto& n : canon) {
      if (std::find(names.begin(), names.end(), n) != names.end()) ordered.push_back(n);
    }
    for (auto& s : sets) s = reindex_classes(s, ordered);
    return;
  }
}

CostMatrix resolve_matrix(const std::string& source, const std::vector<std::string>& names) {
  const auto& builtins = builtin_cost_matrices();
  if (builtins.count(source)) return align_cost_matrix(builtins.at(source), names);
  return align_cost_matrix(load_cost_matrix(source), names);
}

CostMatrix resolve_transfer_phi(const std::string& source, const std::vector<std::string>& names) {
  if (source == "auto") {
    if (is_superclass_space(names)) return align_cost_matrix(builtin_cost_matrix("paper-sec4-example"), names);
    auto z = zero_cost_matrix(names);
    z.name = "zero";
    return z;
  }
  if (source == "zero") {
    auto z = zero_cost_matrix(names);
    z.name = "zero";
    return z;
  }
  return resolve_matrix(source, names);
}

void apply_task(PreparedData& prep, Task task) {
  prep.task = task;
  if (is_weighted(task)) {
    prep.task_phi = resolve_matrix(std::string(to_string(task)), prep.class_names());
    prep.mode = MulticlassMode::kCsovo;
  } else {
    prep.task_phi.reset();
    prep.mode = MulticlassMode::kOvo;
  }
}

}  // namespace

std::vector<FeatureSet> load_domains(const PipelineConfig& cfg) {
  if (cfg.data.empty()) return generate_synthetic(cfg.synth);
  std::vector<FeatureSet> out;
  out.reserve(cfg.data.size());
  for (const auto& path : cfg.data) {
    if (!std::filesystem::exists(path)) fail(ErrorKind::kIo, "missing data file " + path);
    out.push_back(load_features(path));
  }
  return out;
}

PreparedData prepare_data(std::vector<FeatureSet> domains, const PipelineConfig& cfg) {
  if (domains.size() < 2) fail(ErrorKind::kInvalidArgument, "no source domains");
  if (cfg.target < 0 || cfg.target >= static_cast<int>(domains.size())) {
    fail(ErrorKind::kConfig, "target index " + std::to_string(cfg.target) + " out of range");
  }
  const auto dims = domains.front().dims();
  for (const auto& d : domains) {
    if (d.dims() != dims) fail(ErrorKind::kInvalidArgument, "domains have different feature widths");
  }
  canonical_order(domains);
  if (is_weighted(cfg.task) || cfg.collapse_unweighted) {
    for (auto& d : domains) d = collapse_to_superclasses(d);
  }

  PreparedData prep;
  prep.target = cfg.target;
  if (cfg.sources.empty()) {
    for (int i = 0; i < static_cast<int>(domains.size()); ++i) {
      if (i != cfg.target) prep.sources.push_back(i);
    }
  } else {
    for (int s : cfg.sources) {
      if (s < 0 || s >= static_cast<int>(domains.size())) {
        fail(ErrorKind::kConfig, "source index " + std::to_string(s) + " out of range");
      }
      if (s == cfg.target) fail(ErrorKind::kConfig, "source list contains the target domain");
      prep.sources.push_back(s);
    }
  }
  if (prep.sources.empty()) fail(ErrorKind::kInvalidArgument, "no source domains");
  prep.domains = std::move(domains);
  prep.transfer_phi = resolve_transfer_phi(cfg.transfer_costs, prep.class_names());
  apply_task(prep, cfg.task);
  return prep;
}

PreparedData with_task(const PreparedData& prep, Task task) {
  if (is_weighted(task) && !is_superclass_space(prep.class_names())) {
    fail(ErrorKind::kInvalidArgument, "weighted tasks need the four superclasses");
  }
  PreparedData out = prep;
  apply_task(out, task);
  return out;
}

std::uint64_t run_seed(const PipelineConfig& cfg, int run) { return cfg.seed + static_cast<std::uint64_t>(run); }

int effective_k(const PreparedData& prep, const PipelineConfig& cfg) {
  return std::min(cfg.k, static_cast<int>(prep.domains.front().dims()));
}

RunSplit split_run(const PreparedData& prep, const PipelineConfig& cfg, int run) {
  const auto& target = prep.domains[static_cast<std::size_t>(prep.target)];
  RunSplit s;
  s.plan = split_stratified_groups(target, cfg.test_fraction, derive_seed(run_seed(cfg, run), seed_tag::kSplit));
  s.train = target.subset(s.plan.train_rows);
  s.test = target.subset(s.plan.test_rows);
  return s;
}

Projection reduce_stage(const PreparedData& prep, const FeatureSet& target_train, int source,
                        const PipelineConfig& cfg) {
  return fit_projection(prep.domains[static_cast<std::size_t>(source)], target_train, effective_k(prep, cfg),
                        cfg.eps);
}

TransferBanks fit_stage(const PreparedData& prep, const FeatureSet& target_train, int source, const Projection& proj,
                        const PipelineConfig& cfg, int run) {
  const auto& src = prep.domains[static_cast<std::size_t>(source)];
  const auto seed = derive_seed(run_seed(cfg, run), seed_tag::kSourceBase + static_cast<std::uint64_t>(source));
  return fit_transfer_banks(project(proj, src), project(proj, target_train), cfg.gmm, seed);
}

FeatureSet transfer_stage(const PreparedData& prep, int source, const Projection& proj, const TransferBanks& banks,
                          const PipelineConfig& cfg) {
  const auto& src = prep.domains[static_cast<std::size_t>(source)];
  const auto reduced = project(proj, src);
  const auto result = transfer_with_banks(reduced, banks, prep.transfer_phi, cfg.transfer, cfg.threads);
  return src.with_features(lift_displacement(proj, src.features, reduced.features, result.transferred.features));
}

MulticlassModel train_stage(const PreparedData& prep, const FeatureSet& target_train,
                            const std::vector<FeatureSet>& transferred, const PipelineConfig& cfg, int run) {
  FeatureSet train = target_train;
  for (const auto& t : transferred) train = concat(train, t);
  const auto params = grid_search(train, cfg.grid, cfg.folds, derive_seed(run_seed(cfg, run), seed_tag::kGridSearch),
                                  prep.mode, prep.task_phi, cfg.threads);
  return train_multiclass(train, prep.mode, prep.task_phi, params, cfg.threads);
}

RunData prepare_run(const PreparedData& prep, const PipelineConfig& cfg, int run, bool with_transfer) {
  RunData data;
  data.split = split_run(prep, cfg, run);
  if (with_transfer) {
    for (int s : prep.sources) {
      const auto proj = reduce_stage(prep, data.split.train, s, cfg);
      const auto banks = fit_stage(prep, data.split.train, s, proj, cfg, run);
      data.transferred.push_back(transfer_stage(prep, s, proj, banks, cfg));
    }
  }
  return data;
}

EvalReport make_report(const PreparedData& prep) {
  EvalReport r;
  r.task = std::string(to_string(prep.task));
  r.cost_matrix = prep.task_phi ? prep.task_phi->name : "none";
  r.class_names = prep.class_names();
  return r;
}

RunEntry run_once(const PreparedData& prep, const RunData& data, const PipelineConfig& cfg, int run,
                  bool use_transfer) {
  if (use_transfer && data.transferred.size() != prep.sources.size()) {
    fail(ErrorKind::kInvalidArgument, "run data carries no transferred sources");
  }
  static const std::vector<FeatureSet> kNone;
  const auto model = train_stage(prep, data.split.train, use_transfer ? data.transferred : kNone, cfg, run);
  return evaluate(model, data.split.test, prep.task_phi);
}

EvalReport run_protocol(const PreparedData& prep, const PipelineConfig& cfg, bool use_transfer) {
  auto report = make_report(prep);
  for (int r = 0; r < cfg.runs; ++r) {
    report.per_run.push_back(run_once(prep, prepare_run(prep, cfg, r, use_transfer), cfg, r, use_transfer));
  }
  report.finalize();
  return report;
}

EvalReport run_protocol(const std::vector<FeatureSet>& domains, const PipelineConfig& cfg, bool use_transfer) {
  return run_protocol(prepare_data(domains, cfg), cfg, use_transfer);
}

ProtocolReports run_both(const PreparedData& prep, const PipelineConfig& cfg) {
  ProtocolReports out{make_report(prep), make_report(prep)};
  for (int r = 0; r < cfg.runs; ++r) {
    const auto data = prepare_run(prep, cfg, r, true);
    out.baseline.per_run.push_back(run_once(prep, data, cfg, r, false));
    out.transfer.per_run.push_back(run_once(prep, data, cfg, r, true));
  }
  out.baseline.finalize();
  out.transfer.finalize();
  return out;
}

}  // namespace cstl
