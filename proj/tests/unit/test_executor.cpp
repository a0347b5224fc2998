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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "rqcsim/executor.hpp"
#include "rqcsim/oracle.hpp"

using namespace rqcsim;

namespace {

struct Instance {
  Circuit circuit;
  Bitstring bits;
  TensorNetwork net;
  ContractionTree tree;
  SlicingPlan plan;
};

Instance make_instance(int rows, int cols, int depth, std::uint64_t seed, double min_log2_tasks, CircuitStyle style) {
  Instance in{generate_rqc(rows, cols, depth, seed, style), {}, {}, {}, {}};
  std::mt19937_64 rng(seed);
  in.bits.resize(static_cast<std::size_t>(in.circuit.num_qubits()));
  for (auto& b : in.bits) b = static_cast<std::uint8_t>(rng() & 1U);
  in.net = simplify(build_network(in.circuit, in.bits));
  in.tree = greedy_path(in.net);
  in.plan = general_slicing(in.net, in.tree, 64.0, min_log2_tasks);
  return in;
}

bool same_bits(const TensorD& a, const TensorD& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(std::complex<double>)) == 0;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("rqcsim_test_" + name)).string();
}

}  // namespace

TEST_CASE("task enumeration") {
  CHECK(enumerate_tasks({}).size() == 1);
  CHECK(enumerate_tasks({}).front().assignment.empty());
  SlicingPlan p;
  p.sliced = {make_index(3), make_index(7)};
  p.dims = {2, 2};
  const auto t = enumerate_tasks(p);
  REQUIRE(t.size() == 4);
  const std::vector<std::pair<int, int>> want{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(t[i].ordinal == static_cast<std::int64_t>(i));
    CHECK(t[i].assignment[0].first == make_index(3));
    CHECK(t[i].assignment[0].second == want[i].first);
    CHECK(t[i].assignment[1].second == want[i].second);
  }
  CHECK_THROWS_AS((void)task_at(p, 4), Error);
  const auto lattice = lattice_slicing_params(5, 40);
  SlicingPlan big;
  for (int i = 0; i < lattice.S; ++i) {
    big.sliced.push_back(make_index(i));
    big.dims.push_back(lattice.L);
  }
  CHECK(num_tasks(big) == (std::int64_t{1} << 30));
}

TEST_CASE("single H slice") {
  const auto net = build_network(parse_circuit("1 1\n0 h 0\n"), {0});
  const auto p = run_slice(net, {static_cast<int>(net.num_nodes()), linear_path(static_cast<int>(net.num_nodes()))},
                           SliceTask{}, {});
  CHECK(std::abs(p.tensor.data()[0] - 1 / std::sqrt(2.0)) < 1e-7);
}

TEST_CASE("slice rank matches the cost model and slices sum to the whole") {
  const auto in = make_instance(4, 4, 8, 11, 2.0, CircuitStyle::CZ);
  REQUIRE(in.plan.sliced.size() >= 2);
  const auto predicted = evaluate_cost(in.net, in.tree, in.plan.sliced);
  RunConfig cfg;
  cfg.precision = PrecisionMode::Double;
  std::complex<double> sum;
  for (const auto& task : enumerate_tasks(in.plan)) {
    const auto p = run_slice(in.net, in.tree, task, cfg);
    CHECK(p.stats.max_rank == predicted.max_rank);
    CHECK(p.flops == predicted.exact_flops_per_task);
    sum += p.tensor.data()[0];
  }
  const auto whole = run_slice(in.net, in.tree, SliceTask{}, cfg);
  CHECK(std::abs(sum - whole.tensor.data()[0]) <= 1e-8 * std::abs(whole.tensor.data()[0]));
}

TEST_CASE("execute matches the oracle and counts flops") {
  const auto in = make_instance(4, 4, 8, 12, 3.0, CircuitStyle::FSIM);
  const auto want = amplitude(simulate(in.circuit), in.bits);
  for (auto mode : {PrecisionMode::Single, PrecisionMode::Double}) {
    RunConfig cfg;
    cfg.precision = mode;
    cfg.workers = 3;
    const auto r = execute(in.net, in.tree, in.plan, cfg);
    REQUIRE(r.complete);
    const double tol = mode == PrecisionMode::Double ? 1e-10 : 1e-5;
    CHECK(std::abs(r.amplitudes.data()[0] - want) <= tol * std::abs(want));
    const auto cost = evaluate_cost(in.net, in.tree, in.plan.sliced);
    CHECK(r.flops == cost.exact_flops_per_task * static_cast<std::uint64_t>(r.tasks_total));
    CHECK(r.discarded_fraction == 0.0);
  }
}

TEST_CASE("deterministic reduce is bit-identical across worker counts") {
  const auto in = make_instance(3, 4, 10, 13, 5.0, CircuitStyle::CZ);
  RunConfig cfg;
  cfg.workers = 1;
  const auto base = execute(in.net, in.tree, in.plan, cfg);
  REQUIRE(base.tasks_total >= 32);
  for (int w : {2, 4, 8}) {
    cfg.workers = w;
    CHECK(same_bits(execute(in.net, in.tree, in.plan, cfg).amplitudes, base.amplitudes));
  }
  cfg.deterministic_reduce = false;
  const auto loose = execute(in.net, in.tree, in.plan, cfg);
  CHECK(std::abs(loose.amplitudes.data()[0] - base.amplitudes.data()[0]) <= 1e-5 * std::abs(base.amplitudes.data()[0]));
}

TEST_CASE("open qubits give a batch tensor") {
  const Circuit c = generate_rqc(3, 3, 8, 14, CircuitStyle::FSIM);
  const auto sv = simulate(c);
  const auto net = simplify(build_network(c, Bitstring(9, 0), {0, 4}));
  const auto tree = greedy_path(net);
  const auto plan = general_slicing(net, tree, 64.0, 2.0);
  RunConfig cfg;
  cfg.precision = PrecisionMode::Double;
  cfg.workers = 2;
  const auto r = execute(net, tree, plan, cfg);
  REQUIRE(r.amplitudes.size() == 4);
  for (int b0 = 0; b0 < 2; ++b0) {
    for (int b4 = 0; b4 < 2; ++b4) {
      Bitstring bits(9, 0);
      bits[0] = static_cast<std::uint8_t>(b0);
      bits[4] = static_cast<std::uint8_t>(b4);
      CHECK(std::abs(r.amplitudes.data()[static_cast<std::size_t>(b0 * 2 + b4)] - amplitude(sv, bits)) < 1e-10);
    }
  }
}

TEST_CASE("checkpoint and resume") {
  const auto in = make_instance(3, 4, 8, 15, 4.0, CircuitStyle::CZ);
  RunConfig cfg;
  cfg.workers = 2;
  const auto fresh = execute(in.net, in.tree, in.plan, cfg);

  for (std::int64_t stop : {std::int64_t{0}, fresh.tasks_total / 2}) {
    const std::string path = temp_path("ckpt_" + std::to_string(stop));
    std::filesystem::remove(path);
    RunConfig first = cfg;
    first.checkpoint_path = path;
    first.stop_after = stop;
    const auto part = execute(in.net, in.tree, in.plan, first);
    CHECK_FALSE(part.complete);
    CHECK(part.tasks_run == stop);
    RunConfig second = cfg;
    second.checkpoint_path = path;
    second.workers = 4;
    const auto rest = execute(in.net, in.tree, in.plan, second);
    REQUIRE(rest.complete);
    CHECK(rest.tasks_resumed == stop);
    CHECK(rest.tasks_run == fresh.tasks_total - stop);
    CHECK(same_bits(rest.amplitudes, fresh.amplitudes));
    CHECK(rest.flops == fresh.flops);
    std::filesystem::remove(path);
  }

  const std::string path = temp_path("ckpt_mismatch");
  std::filesystem::remove(path);
  RunConfig first = cfg;
  first.checkpoint_path = path;
  first.stop_after = 1;
  (void)execute(in.net, in.tree, in.plan, first);
  SlicingPlan other = in.plan;
  other.sliced.pop_back();
  other.dims.pop_back();
  first.stop_after = -1;
  CHECK_THROWS_WITH_AS((void)execute(in.net, in.tree, other, first), doctest::Contains("hash mismatch"), Error);
  RunConfig mixed = first;
  mixed.precision = PrecisionMode::Mixed;
  CHECK_THROWS_AS((void)execute(in.net, in.tree, in.plan, mixed), Error);
  std::filesystem::remove(path);
}

TEST_CASE("mixed precision run") {
  const auto in = make_instance(4, 4, 8, 16, 6.0, CircuitStyle::CZ);
  RunConfig cfg;
  cfg.precision = PrecisionMode::Mixed;
  cfg.collect_paths = true;
  cfg.workers = 4;
  const auto r = execute(in.net, in.tree, in.plan, cfg);
  REQUIRE(r.complete);
  CHECK(r.paths.size() == static_cast<std::size_t>(r.tasks_total));
  CHECK(r.path_references.size() == r.paths.size());
  const auto want = amplitude(simulate(in.circuit), in.bits);
  CHECK(std::abs(r.amplitudes.data()[0] - want) <= 0.05 * std::abs(want));
  for (std::size_t i = 0; i < r.paths.size(); ++i) {
    const auto ref = r.path_references[i];
    if (r.paths[i].flags.any() || std::abs(ref) < 1e-12) continue;
    CHECK(std::abs(r.paths[i].logical() - ref) <= 0.05 * std::abs(ref) + 1e-9);
  }
}

TEST_CASE("memory cap and errors") {
  const auto in = make_instance(4, 4, 4, 17, 0.0, CircuitStyle::FSIM);
  RunConfig cfg;
  cfg.memory_cap_log2 = 1.0;
  CHECK_THROWS_WITH_AS((void)execute(in.net, in.tree, in.plan, cfg), doctest::Contains("memory cap"), Error);
  cfg.memory_cap_log2.reset();
  cfg.workers = 0;
  CHECK_THROWS_AS((void)execute(in.net, in.tree, in.plan, cfg), Error);
  CHECK(parse_precision_mode("mixed") == PrecisionMode::Mixed);
  CHECK_THROWS_AS((void)parse_precision_mode("half"), Error);

  const auto capped = general_slicing(in.net, in.tree, 4.0);
  RunConfig ok;
  ok.memory_cap_log2 = 4.0;
  const auto r = execute(in.net, in.tree, capped, ok);
  CHECK(r.peak_elements <= 16);
  const auto json = run_report_json(r, ok, r.flops);
  CHECK(json.find("\"worker_utilization\"") != std::string::npos);
  CHECK(json.find("\"discarded_fraction\"") != std::string::npos);
}
