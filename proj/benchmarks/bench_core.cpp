/*
 * Copyright 2026 the arock authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include <vector>

#include "arock/delays.hpp"
#include "arock/engine.hpp"
#include "arock/history.hpp"
#include "arock/operators.hpp"
#include "arock/rng.hpp"
#include "arock/timing.hpp"

namespace {

arock::Operator bench_operator(std::size_t m, std::size_t block_size) {
  const arock::BlockPartition part = arock::BlockPartition::uniform(m, block_size);
  std::vector<double> diag(part.dim());
  for (std::size_t i = 0; i < diag.size(); ++i)
    diag[i] = 1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(diag.size() - 1);
  return arock::make_gd_operator(diag, 1.0, 3.0, part);
}

void BM_ApplyT(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const arock::Operator op = bench_operator(m, 8);
  arock::Rng rng(7);
  const std::vector<double> x = rng.gaussian_vector(op.dim());
  std::vector<double> out(op.dim());
  for (auto _ : state) {
    op.apply_T(x, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(op.dim()));
}
BENCHMARK(BM_ApplyT)->Arg(64)->Arg(1024);

void BM_AsyncStep(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const arock::Operator op = bench_operator(m, 8);
  arock::Rng rng(11);
  arock::IterateHistory history(rng.gaussian_vector(op.dim()), 16);
  const arock::DelayModel delays = arock::DelayModel::geometric(0.5);
  std::vector<std::uint32_t> jvec(m);
  std::uint64_t k = 0;
  for (auto _ : state) {
    delays.sample_ages(rng, k, jvec);
    for (auto& age : jvec) age = std::min<std::uint32_t>(age, 16);
    arock::arock_step(history, op, 0.5, rng.uniform_index(m), jvec);
    ++k;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_AsyncStep)->Arg(64)->Arg(1024);

void BM_DelaySampling(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const arock::DelayModel delays = arock::DelayModel::geometric(0.5);
  arock::Rng rng(13);
  std::vector<std::uint32_t> jvec(m);
  std::uint64_t k = 1000;
  for (auto _ : state) {
    delays.sample_ages(rng, k++, jvec);
    benchmark::DoNotOptimize(jvec.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(m));
}
BENCHMARK(BM_DelaySampling)->Arg(64)->Arg(1024);

void BM_Throughput(benchmark::State& state) {
  arock::TimingModel model;
  model.p = static_cast<std::size_t>(state.range(0));
  model.m = 100;
  model.lambda = 0.1;
  model.cost = {1.0};
  for (auto _ : state) {
    const arock::ThroughputResult res =
        arock::simulate_throughput(model, arock::TimingMode::Async, 10, 1, 3);
    benchmark::DoNotOptimize(res.mean);
  }
}
BENCHMARK(BM_Throughput)->Arg(4)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
