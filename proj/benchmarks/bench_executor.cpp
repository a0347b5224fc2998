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

// Slice-task throughput against worker count on a 256-task instance.

#include <benchmark/benchmark.h>

#include <limits>

#include "rqcsim/executor.hpp"
#include "rqcsim/tensornet.hpp"

using namespace rqcsim;

namespace {

struct Instance {
  TensorNetwork net;
  ContractionTree tree;
  SlicingPlan plan;
};

const Instance& instance() {
  static const Instance in = [] {
    const Circuit c = generate_rqc(4, 5, 10, 3, CircuitStyle::CZ);
    Instance i;
    i.net = simplify(build_network(c, Bitstring(20, 0)));
    i.tree = greedy_path(i.net);
    i.plan = general_slicing(i.net, i.tree, std::numeric_limits<double>::infinity(), 8.0);
    return i;
  }();
  return in;
}

void BM_Execute(benchmark::State& state) {
  const auto& in = instance();
  RunConfig cfg;
  cfg.workers = static_cast<int>(state.range(0));
  cfg.precision = static_cast<PrecisionMode>(state.range(1));
  std::int64_t tasks = 0;
  for (auto _ : state) {
    const auto r = execute(in.net, in.tree, in.plan, cfg);
    tasks += r.tasks_run;
    benchmark::DoNotOptimize(r.amplitudes.data().data());
  }
  state.counters["tasks"] = benchmark::Counter(static_cast<double>(tasks), benchmark::Counter::kIsRate);
  state.SetLabel(std::string(precision_mode_name(cfg.precision)));
}

}  // namespace

BENCHMARK(BM_Execute)
    ->ArgsProduct({{1, 2, 4, 8}, {static_cast<std::int64_t>(PrecisionMode::Single)}})
    ->Args({1, static_cast<std::int64_t>(PrecisionMode::Mixed)})
    ->Args({1, static_cast<std::int64_t>(PrecisionMode::Double)})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
