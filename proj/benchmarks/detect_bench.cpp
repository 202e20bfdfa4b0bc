// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <vector>

#include "mle_uvad/detect.hpp"
#include "mle_uvad/rng.hpp"

namespace {

void BM_Pcc(benchmark::State& state) {
  mle_uvad::Rng rng(1);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.uniform();
    y[i] = x[i] + 0.1 * rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(mle_uvad::pcc(x, y));
}
BENCHMARK(BM_Pcc)->Arg(576)->Arg(4096);

void BM_RocAuc(benchmark::State& state) {
  mle_uvad::Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(n);
  std::vector<bool> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = rng.uniform() < 0.125;
    scores[i] = rng.normal() + (labels[i] ? 1.0 : 0.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(mle_uvad::roc_auc(scores, labels));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RocAuc)->RangeMultiplier(4)->Range(256, 65536)->Complexity(benchmark::oNLogN);

}  // namespace
