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

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "test_util.hpp"

using cstl::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cstl::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_config(const TempDir& dir, const std::string& name, const std::string& task) {
  const auto path = (dir / name).string();
  std::ofstream out(path);
  out << "task = " << task << "\n"
      << "synth_dims = 6\nsynth_domains = 3\nsynth_samples = 20\nsynth_group_size = 5\n"
      << "k = 4\ngrid_gamma = 0.25\ngrid_c = 1, 8\nfolds = 2\nruns = 2\nthreads = 1\n";
  return path;
}

}  // namespace

TEST_CASE("cli: synth writes one csv per domain, reproducibly") {
  TempDir dir("cli-synth");
  const auto cfg = write_config(dir, "c.cfg", "unweighted");
  REQUIRE(cli({"--config", cfg, "synth", "--out-dir", (dir / "a").string()}).code == 0);
  REQUIRE(cli({"--config", cfg, "synth", "--out-dir", (dir / "b").string()}).code == 0);
  for (int d = 0; d < 3; ++d) {
    const auto name = "domain" + std::to_string(d) + ".csv";
    REQUIRE(fs::exists(dir / "a" / name));
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
  CHECK(!fs::exists(dir / "a" / "domain3.csv"));
  REQUIRE(cli({"--config", cfg, "--seed", "9", "synth", "--out-dir", (dir / "c").string()}).code == 0);
  CHECK(slurp(dir / "a" / "domain0.csv") != slurp(dir / "c" / "domain0.csv"));
}

TEST_CASE("cli: configuration and usage errors") {
  TempDir dir("cli-errors");
  const auto bad = (dir / "bad.cfg").string();
  std::ofstream(bad) << "k = 4\nmystery_key = 1\n";
  const auto r = cli({"--config", bad, "pipeline"});
  CHECK(r.code == 7);
  CHECK(r.err.find("mystery_key") != std::string::npos);

  CHECK(cli({"--config", (dir / "absent.cfg").string(), "pipeline"}).code == 4);
  CHECK(cli({"nonsense"}).code == 1);
  CHECK(cli({"reduce", "--out", "x"}).code == 1);
}

TEST_CASE("cli: pipeline is deterministic and tags the task") {
  TempDir dir("cli-pipeline");
  const auto cfg = write_config(dir, "c.cfg", "detection");
  const auto a = cli({"--config", cfg, "pipeline", "--out-dir", (dir / "a").string()});
  const auto b = cli({"--config", cfg, "pipeline", "--out-dir", (dir / "b").string()});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("task detection") != std::string::npos);
  for (const char* f : {"report_baseline.txt", "report_transfer.txt", "report_baseline.tsv", "report_transfer.tsv",
                        "report_diff.txt"}) {
    REQUIRE(fs::exists(dir / "a" / f));
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const auto report = slurp(dir / "a" / "report_transfer.txt");
  CHECK(report.find("task detection\ncost_matrix detection\n") != std::string::npos);
}

TEST_CASE("cli: staged commands reproduce the monolithic pipeline") {
  TempDir dir("cli-staged");
  const auto cfg = write_config(dir, "c.cfg", "airbag");
  REQUIRE(cli({"--config", cfg, "pipeline", "--out-dir", (dir / "mono").string()}).code == 0);

  std::vector<std::string> models;
  for (int run = 0; run < 2; ++run) {
    const auto r = std::to_string(run);
    std::vector<std::string> train{"--config", cfg, "train", "--run", r};
    for (int source : {1, 2}) {
      const auto s = std::to_string(source);
      const auto stem = (dir / ("r" + r + "s" + s)).string();
      REQUIRE(cli({"--config", cfg, "reduce", "--run", r, "--source", s, "--out", stem + ".proj"}).code == 0);
      REQUIRE(cli({"--config", cfg, "fit", "--run", r, "--source", s, "--projection", stem + ".proj", "--out",
                   stem + ".gmm"})
                  .code == 0);
      REQUIRE(cli({"--config", cfg, "transfer", "--run", r, "--source", s, "--projection", stem + ".proj",
                   "--banks", stem + ".gmm", "--out", stem + ".csv"})
                  .code == 0);
      train.push_back("--transferred");
      train.push_back(stem + ".csv");
    }
    const auto model = (dir / ("model" + r + ".txt")).string();
    train.push_back("--out");
    train.push_back(model);
    REQUIRE(cli(train).code == 0);
    models.push_back(model);
  }
  std::vector<std::string> eval{"--config", cfg, "evaluate"};
  for (const auto& m : models) eval.insert(eval.end(), {"--model", m});
  eval.insert(eval.end(), {"--out", (dir / "staged.txt").string()});
  REQUIRE(cli(eval).code == 0);
  CHECK(slurp(dir / "staged.txt") == slurp(dir / "mono" / "report_transfer.txt"));

  const auto missing = (dir / "no-such.gmm").string();
  const auto r = cli({"--config", cfg, "transfer", "--source", "1", "--projection", (dir / "r0s1.proj").string(),
                      "--banks", missing, "--out", (dir / "x.csv").string()});
  CHECK(r.code == 4);
  CHECK(r.err.find(missing) != std::string::npos);
}
