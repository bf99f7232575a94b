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

// Experiment protocol: per-run target split, pairwise reduce + transfer of
// every source domain, classifier training and evaluation.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cstl/config.hpp"
#include "cstl/eval.hpp"
#include "cstl/reduce.hpp"
#include "cstl/transfer.hpp"

namespace cstl {

// Domains in a shared class space plus everything the task fixes.
struct PreparedData {
  std::vector<FeatureSet> domains;
  int target = 0;
  std::vector<int> sources;
  Task task = Task::kUnweighted;
  std::optional<CostMatrix> task_phi;  // set for weighted tasks
  CostMatrix transfer_phi;
  MulticlassMode mode = MulticlassMode::kOvo;

  const std::vector<std::string>& class_names() const { return domains.front().class_names; }
};

std::vector<FeatureSet> load_domains(const PipelineConfig& cfg);
// Aligns class spaces, collapses to superclasses when the task asks for it and
// resolves cost matrices. Throws "no source domains" with fewer than two domains.
PreparedData prepare_data(std::vector<FeatureSet> domains, const PipelineConfig& cfg);
// Same domains re-targeted to another weighted task.
PreparedData with_task(const PreparedData& prep, Task task);

std::uint64_t run_seed(const PipelineConfig& cfg, int run);
int effective_k(const PreparedData& prep, const PipelineConfig& cfg);

struct RunSplit {
  SplitPlan plan;
  FeatureSet train;
  FeatureSet test;
};
RunSplit split_run(const PreparedData& prep, const PipelineConfig& cfg, int run);

// Stages for one source domain against the target training rows.
Projection reduce_stage(const PreparedData& prep, const FeatureSet& target_train, int source,
                        const PipelineConfig& cfg);
TransferBanks fit_stage(const PreparedData& prep, const FeatureSet& target_train, int source, const Projection& proj,
                        const PipelineConfig& cfg, int run);
// Transferred source rows lifted back to the input feature space.
FeatureSet transfer_stage(const PreparedData& prep, int source, const Projection& proj, const TransferBanks& banks,
                          const PipelineConfig& cfg);
MulticlassModel train_stage(const PreparedData& prep, const FeatureSet& target_train,
                            const std::vector<FeatureSet>& transferred, const PipelineConfig& cfg, int run);

struct RunData {
  RunSplit split;
  std::vector<FeatureSet> transferred;  // one per source, empty without transfer
};
RunData prepare_run(const PreparedData& prep, const PipelineConfig& cfg, int run, bool with_transfer);

EvalReport make_report(const PreparedData& prep);
RunEntry run_once(const PreparedData& prep, const RunData& data, const PipelineConfig& cfg, int run,
                  bool use_transfer);

EvalReport run_protocol(const PreparedData& prep, const PipelineConfig& cfg, bool use_transfer);
EvalReport run_protocol(const std::vector<FeatureSet>& domains, const PipelineConfig& cfg, bool use_transfer);

struct ProtocolReports {
  EvalReport baseline;
  EvalReport transfer;
};
// Both modes over shared splits.
ProtocolReports run_both(const PreparedData& prep, const PipelineConfig& cfg);

}  // namespace cstl
