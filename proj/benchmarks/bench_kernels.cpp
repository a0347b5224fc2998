// Copyright 2026 The rqcsim Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Fused TTGT against permute-then-GEMM on the imbalanced suite, plus the
// balanced rank-4 dim-32 case.

#include <benchmark/benchmark.h>

#include <random>

#include "rqcsim/engine.hpp"

using namespace rqcsim;

namespace {

const std::vector<ContractionCase>& suite() {
  static const auto cases = imbalanced_contraction_suite(1);
  return cases;
}

void BM_Fused(benchmark::State& state) {
  const auto& c = suite()[static_cast<std::size_t>(state.range(0))];
  state.SetLabel(c.name);
  FlopCounter f;
  for (auto _ : state) benchmark::DoNotOptimize(contract_pair_ttgt(c.a, c.b, c.spec, &f));
  state.counters["flops"] = benchmark::Counter(static_cast<double>(f.total()), benchmark::Counter::kIsRate);
}

void BM_Unfused(benchmark::State& state) {
  const auto& c = suite()[static_cast<std::size_t>(state.range(0))];
  state.SetLabel(c.name);
  FlopCounter f;
  for (auto _ : state) benchmark::DoNotOptimize(contract_pair_unfused(c.a, c.b, c.spec, &f));
  state.counters["flops"] = benchmark::Counter(static_cast<double>(f.total()), benchmark::Counter::kIsRate);
}

void suite_args(benchmark::internal::Benchmark* b) {
  for (std::size_t i = 0; i < suite().size(); ++i) b->Arg(static_cast<std::int64_t>(i));
}

DenseTensor normal(std::vector<IndexId> idx, std::vector<std::int64_t> dims, std::mt19937_64& rng) {
  DenseTensor t(std::move(idx), std::move(dims));
  std::normal_distribution<float> nd;
  for (auto& v : t.data()) v = {nd(rng), nd(rng)};
  return t;
}

// A[i0,i1,i2,i3] x B[i4,i2,i5,i0] -> C[i1,i4,i3,i5], every dim 32.
void BM_BalancedRank4(benchmark::State& state) {
  std::mt19937_64 rng(2);
  auto ids = [](std::initializer_list<int> v) {
    std::vector<IndexId> out;
    for (int i : v) out.push_back(make_index(i));
    return out;
  };
  const auto a = normal(ids({0, 1, 2, 3}), {32, 32, 32, 32}, rng);
  const auto b = normal(ids({4, 2, 5, 0}), {32, 32, 32, 32}, rng);
  const auto spec = ContractionSpec::from_labels(a.indices(), b.indices(), ids({1, 4, 3, 5}));
  FlopCounter f;
  for (auto _ : state) {
    if (state.range(0) == 0) {
      benchmark::DoNotOptimize(contract_pair_ttgt(a, b, spec, &f));
    } else {
      benchmark::DoNotOptimize(contract_pair_unfused(a, b, spec, &f));
    }
  }
  state.SetLabel(state.range(0) == 0 ? "fused" : "unfused");
  state.counters["flops"] = benchmark::Counter(static_cast<double>(f.total()), benchmark::Counter::kIsRate);
}

}  // namespace

BENCHMARK(BM_Fused)->Apply(suite_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Unfused)->Apply(suite_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BalancedRank4)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
