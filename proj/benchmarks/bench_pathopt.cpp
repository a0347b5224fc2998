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

// Path search cost: greedy, annealing and general slicing on 5x5 networks.

#include <benchmark/benchmark.h>

#include "rqcsim/pathopt.hpp"
#include "rqcsim/tensornet.hpp"

using namespace rqcsim;

namespace {

TensorNetwork network(int depth) {
  const Circuit c = generate_rqc(5, 5, depth, 1, CircuitStyle::CZ);
  return simplify(build_network(c, Bitstring(25, 0)));
}

void BM_Greedy(benchmark::State& state) {
  const auto net = network(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(greedy_path(net));
  state.counters["log2_flops"] = evaluate_cost(net, greedy_path(net)).log2_flops;
}

void BM_Anneal(benchmark::State& state) {
  const auto net = network(10);
  double best = 0;
  for (auto _ : state) best = anneal_path(net, static_cast<int>(state.range(0)), {}, 1).report.log2_flops;
  state.counters["log2_flops"] = best;
}

void BM_GeneralSlicing(benchmark::State& state) {
  const auto net = network(16);
  const auto tree = greedy_path(net);
  for (auto _ : state) benchmark::DoNotOptimize(general_slicing(net, tree, static_cast<double>(state.range(0))));
}

}  // namespace

BENCHMARK(BM_Greedy)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Anneal)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GeneralSlicing)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
