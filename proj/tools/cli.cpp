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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "cstl/config.hpp"
#include "cstl/error.hpp"
#include "cstl/persist.hpp"
#include "cstl/pipeline.hpp"

namespace cstl::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

PipelineConfig load(const Globals& g) {
  PipelineConfig cfg = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads) cfg.threads = *g.threads;
  cfg.validate();
  return cfg;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

template <typename Fn>
void write_text(const fs::path& path, Fn&& fn) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cli", "cannot write " + path.string());
  fn(out);
  if (!out) throw Error(ErrorKind::kIo, "cli", "write failed for " + path.string());
}

void check_source(const PreparedData& prep, int source) {
  if (std::find(prep.sources.begin(), prep.sources.end(), source) == prep.sources.end()) {
    throw Error(ErrorKind::kInvalidArgument, "cli", "domain " + std::to_string(source) + " is not a source domain");
  }
}

FeatureSet load_transferred(const fs::path& path, const PreparedData& prep) {
  if (!fs::exists(path)) throw Error(ErrorKind::kIo, "cli", "missing artifact " + path.string());
  auto t = load_features(path, FeatureFormat::kCsv, prep.class_names());
  t = reindex_classes(t, prep.class_names());
  if (t.dims() != prep.domains.front().dims()) {
    throw Error(ErrorKind::kInvalidArgument, "cli", path.string() + " has the wrong feature width");
  }
  return t;
}

void write_reports(const fs::path& dir, const ProtocolReports& r) {
  fs::create_directories(dir);
  write_text(dir / "report_baseline.txt", [&](std::ostream& o) { write_report(o, r.baseline); });
  write_text(dir / "report_transfer.txt", [&](std::ostream& o) { write_report(o, r.transfer); });
  write_text(dir / "report_baseline.tsv", [&](std::ostream& o) { write_report_table(o, r.baseline); });
  write_text(dir / "report_transfer.tsv", [&](std::ostream& o) { write_report_table(o, r.transfer); });
  write_text(dir / "report_diff.txt", [&](std::ostream& o) { write_report_diff(o, r.baseline, r.transfer); });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cost-sensitive transfer learning toolkit", "cstl"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  app.add_option("--config", g.config_path, "Configuration file (key = value)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the experiment seed");
  auto* threads_opt = app.add_option("--threads", threads, "Worker thread cap (0: all cores)");

  int run_index = 0;
  int source = -1;
  std::string out_path, out_dir, projection_path, banks_path, table_path;
  std::vector<std::string> transferred_paths, model_paths;

  auto* synth = app.add_subcommand("synth", "Write one synthetic CSV per domain");
  synth->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* split = app.add_subcommand("split", "Write the target train/test split of one run");
  split->add_option("--run", run_index, "Run index")->check(CLI::NonNegativeNumber);
  split->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* reduce = app.add_subcommand("reduce", "Fit the projection for one source/target pair");
  reduce->add_option("--run", run_index, "Run index")->check(CLI::NonNegativeNumber);
  reduce->add_option("--source", source, "Source domain index")->required();
  reduce->add_option("--out", out_path, "Projection artifact")->required();

  auto* fit = app.add_subcommand("fit", "Fit source and target class mixtures in the reduced space");
  fit->add_option("--run", run_index, "Run index")->check(CLI::NonNegativeNumber);
  fit->add_option("--source", source, "Source domain index")->required();
  fit->add_option("--projection", projection_path, "Projection artifact")->required();
  fit->add_option("--out", out_path, "Mixture artifact")->required();

  auto* transfer = app.add_subcommand("transfer", "Transfer one source domain toward the target");
  transfer->add_option("--run", run_index, "Run index")->check(CLI::NonNegativeNumber);
  transfer->add_option("--source", source, "Source domain index")->required();
  transfer->add_option("--projection", projection_path, "Projection artifact")->required();
  transfer->add_option("--banks", banks_path, "Mixture artifact")->required();
  transfer->add_option("--out", out_path, "Transferred features (CSV)")->required();

  auto* train = app.add_subcommand("train", "Grid-search and train the classifier for one run");
  train->add_option("--run", run_index, "Run index")->check(CLI::NonNegativeNumber);
  train->add_option("--transferred", transferred_paths, "Transferred feature CSVs to add to training");
  train->add_option("--out", out_path, "Model artifact")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate one model per run and write a report");
  evaluate_cmd->add_option("--model", model_paths, "Model artifacts in run order")->required();
  evaluate_cmd->add_option("--out", out_path, "Report file")->required();
  evaluate_cmd->add_option("--table", table_path, "Optional TSV table");

  auto* pipeline = app.add_subcommand("pipeline", "Run the protocol with and without transfer");
  pipeline->add_option("--out-dir", out_dir, "Report directory (default: out_dir from the config)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  if (seed_opt->count()) g.seed = seed;
  if (threads_opt->count()) g.threads = threads;

  try {
    if (synth->parsed()) {
      auto cfg = load(g);
      if (g.seed) cfg.synth.seed = *g.seed;
      const auto domains = generate_synthetic(cfg.synth);
      fs::create_directories(out_dir);
      for (std::size_t d = 0; d < domains.size(); ++d) {
        const auto path = fs::path(out_dir) / ("domain" + std::to_string(d) + ".csv");
        save_features(path, domains[d]);
        out << "wrote " << path.string() << '\n';
      }
      return 0;
    }

    const auto cfg = load(g);
    const auto prep = prepare_data(load_domains(cfg), cfg);

    if (split->parsed()) {
      const auto s = split_run(prep, cfg, run_index);
      fs::create_directories(out_dir);
      save_features(fs::path(out_dir) / "train.csv", s.train);
      save_features(fs::path(out_dir) / "test.csv", s.test);
      out << "train " << s.train.size() << " test " << s.test.size() << '\n';
      return 0;
    }
    if (reduce->parsed()) {
      check_source(prep, source);
      const auto s = split_run(prep, cfg, run_index);
      const auto proj = reduce_stage(prep, s.train, source, cfg);
      ensure_parent(out_path);
      save_projection(out_path, proj);
      out << "wrote " << out_path << '\n';
      return 0;
    }
    if (fit->parsed()) {
      check_source(prep, source);
      const auto proj = load_projection(projection_path);
      const auto s = split_run(prep, cfg, run_index);
      GmmArtifact a{fit_stage(prep, s.train, source, proj, cfg, run_index), prep.class_names()};
      ensure_parent(out_path);
      save_gmm_banks(out_path, a);
      out << "wrote " << out_path << '\n';
      return 0;
    }
    if (transfer->parsed()) {
      check_source(prep, source);
      const auto proj = load_projection(projection_path);
      const auto a = load_gmm_banks(banks_path);
      if (a.class_names != prep.class_names()) {
        throw Error(ErrorKind::kInvalidArgument, "cli", banks_path + " was fitted on a different class space");
      }
      if (proj.input_dims() != static_cast<Eigen::Index>(prep.domains.front().dims())) {
        throw Error(ErrorKind::kInvalidArgument, "cli", projection_path + " does not match the data width");
      }
      const auto moved = transfer_stage(prep, source, proj, a.banks, cfg);
      ensure_parent(out_path);
      save_features(out_path, moved);
      out << "wrote " << out_path << '\n';
      return 0;
    }
    if (train->parsed()) {
      std::vector<FeatureSet> moved;
      for (const auto& p : transferred_paths) moved.push_back(load_transferred(p, prep));
      const auto s = split_run(prep, cfg, run_index);
      const auto model = train_stage(prep, s.train, moved, cfg, run_index);
      ensure_parent(out_path);
      save_model(out_path, model);
      out << "wrote " << out_path << '\n';
      return 0;
    }
    if (evaluate_cmd->parsed()) {
      auto report = make_report(prep);
      for (std::size_t r = 0; r < model_paths.size(); ++r) {
        const auto model = load_model(model_paths[r]);
        const auto s = split_run(prep, cfg, static_cast<int>(r));
        report.per_run.push_back(evaluate(model, s.test, prep.task_phi));
      }
      report.finalize();
      write_text(out_path, [&](std::ostream& o) { write_report(o, report); });
      if (!table_path.empty()) write_text(table_path, [&](std::ostream& o) { write_report_table(o, report); });
      out << "mean_accuracy " << report.mean_accuracy << " mean_weighted_accuracy " << report.mean_weighted_accuracy
          << '\n';
      return 0;
    }
    if (pipeline->parsed()) {
      const fs::path dir = out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(out_dir);
      const auto reports = run_both(prep, cfg);
      write_reports(dir, reports);
      write_report_diff(out, reports.baseline, reports.transfer);
      return 0;
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "] " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error [io] " << e.what() << '\n';
    return static_cast<int>(ErrorKind::kIo);
  }
  return 1;
}

}  // namespace cstl::cli
