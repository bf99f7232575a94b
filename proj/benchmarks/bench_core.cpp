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

#include <benchmark/benchmark.h>

#include <vector>

#include "cstl/dataset.hpp"
#include "cstl/gmm.hpp"
#include "cstl/reduce.hpp"
#include "cstl/svm.hpp"
#include "cstl/transfer.hpp"

namespace {

using namespace cstl;

// Default synthetic benchmark collapsed to the four superclasses.
const std::vector<FeatureSet>& domains() {
  static const auto d = [] {
    auto all = generate_synthetic(SynthConfig{});
    for (auto& fs : all) fs = collapse_to_superclasses(fs);
    return all;
  }();
  return d;
}

void BM_FitProjection(benchmark::State& state) {
  const auto& d = domains();
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_projection(d[1], d[0], k, 1.0));
}
BENCHMARK(BM_FitProjection)->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_FitGmm(benchmark::State& state) {
  const auto& d = domains();
  GmmOptions opts;
  opts.components = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_gmm(d[0].features, opts, 7));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d[0].size()));
}
BENCHMARK(BM_FitGmm)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_TransferFeature(benchmark::State& state) {
  const auto& d = domains();
  const int k = static_cast<int>(state.range(0));
  const auto proj = fit_projection(d[1], d[0], k, 1.0);
  const auto src = project(proj, d[1]);
  const auto tar = project(proj, d[0]);
  const auto banks = fit_transfer_banks(src, tar, GmmOptions{}, 3);
  const auto& phi = builtin_cost_matrix("paper-sec4-example");
  const TransferConfig cfg;
  std::size_t i = 0;
  for (auto _ : state) {
    const Vector f = src.features.row(static_cast<Eigen::Index>(i % src.size())).transpose();
    benchmark::DoNotOptimize(
        transfer_feature(f, f, src.labels[i % src.size()], banks.source, banks.target, phi, cfg));
    ++i;
  }
}
BENCHMARK(BM_TransferFeature)->Arg(2)->Arg(10)->Unit(benchmark::kMicrosecond);

void BM_TrainBinarySmo(benchmark::State& state) {
  const auto& fs = domains()[0];
  const auto n = static_cast<std::size_t>(state.range(0));
  // Every other row, so both sides of "empty vs rest" are present.
  FeatureMatrix x(static_cast<Eigen::Index>(n), fs.dims());
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = (2 * i) % fs.size();
    x.row(static_cast<Eigen::Index>(i)) = fs.features.row(static_cast<Eigen::Index>(row));
    y[i] = fs.labels[row] == 0 ? 1 : -1;
  }
  const std::vector<double> w(n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(train_binary(x, y, w, {1.0 / 16, 8.0}));
}
BENCHMARK(BM_TrainBinarySmo)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_TrainCsovo(benchmark::State& state) {
  const auto& fs = domains()[0];
  const auto& phi = builtin_cost_matrix("airbag");
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_multiclass(fs, MulticlassMode::kCsovo, phi, {1.0 / 16, 8.0}));
  }
}
BENCHMARK(BM_TrainCsovo)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
