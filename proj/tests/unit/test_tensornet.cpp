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

#include <chrono>
#include <cmath>
#include <random>

#include "doctest.h"
#include "rqcsim/oracle.hpp"
#include "rqcsim/tensornet.hpp"

using namespace rqcsim;

namespace {

std::complex<double> scalar_value(const TensorNetwork& net, const IndexPins& pins = {}) {
  const auto path = linear_path(static_cast<int>(net.num_nodes()));
  ContractOptions<double> opt;
  opt.pins = pins;
  const auto t = contract_network<double>(net, path, opt);
  REQUIRE(t.size() == 1);
  return t.data()[0];
}

bool close(std::complex<double> got, std::complex<double> want, double rel = 1e-10) {
  if (std::abs(want) < 1e-10) return std::abs(got - want) < 1e-12;
  return std::abs(got - want) <= rel * std::abs(want);
}

Bitstring random_bits(int n, std::mt19937_64& rng) {
  Bitstring b(static_cast<std::size_t>(n));
  for (auto& x : b) x = static_cast<std::uint8_t>(rng() & 1U);
  return b;
}

}  // namespace

TEST_CASE("single H amplitude") {
  const Circuit c = parse_circuit("1 1\n0 h 0\n");
  const auto net = build_network(c, {0});
  CHECK_NOTHROW(net.validate());
  CHECK(close(scalar_value(net), 1.0 / std::sqrt(2.0)));
}

TEST_CASE("2x2 depth-2 scalar network matches oracle") {
  const Circuit c = generate_rqc(2, 2, 2, 3, CircuitStyle::CZ);
  const StateVector sv = simulate(c);
  for (std::uint64_t x = 0; x < 16; ++x) {
    const Bitstring bits = index_to_bitstring(x, 4);
    const auto net = build_network(c, bits);
    CHECK(std::abs(scalar_value(net) - amplitude(sv, bits)) < 1e-12);
  }
}

TEST_CASE("all qubits open gives the state vector") {
  for (auto style : {CircuitStyle::CZ, CircuitStyle::FSIM}) {
    const Circuit c = generate_rqc(2, 5, 6, 11, style);
    const StateVector sv = simulate(c);
    std::vector<int> open;
    for (int q = c.num_qubits() - 1; q >= 0; --q) open.push_back(q);  // row-major flat index == state index
    const auto net = build_network(c, Bitstring(10, 0), open);
    const auto t = contract_network<double>(net, linear_path(static_cast<int>(net.num_nodes())));
    REQUIRE(t.size() == sv.amps.size());
    double err = 0;
    for (std::size_t i = 0; i < t.size(); ++i) err = std::max(err, std::abs(t.data()[i] - sv.amps[i]));
    CHECK(err < 1e-12);
  }
}

TEST_CASE("open qubit errors") {
  const Circuit c = generate_rqc(2, 2, 2, 3, CircuitStyle::CZ);
  CHECK_THROWS_AS((void)build_network(c, Bitstring(4, 0), {1, 1}), Error);
  CHECK_THROWS_AS((void)build_network(c, Bitstring(4, 0), {9}), Error);
  CHECK_THROWS_AS((void)build_network(c, Bitstring(3, 0)), Error);
}

TEST_CASE("fuzzed circuits match the oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const int rows = 1 + static_cast<int>(rng() % 3);
    const int cols = 1 + static_cast<int>(rng() % 3);
    const auto style = trial % 2 ? CircuitStyle::FSIM : CircuitStyle::CZ;
    const Circuit c = generate_rqc(rows, cols, static_cast<int>(rng() % 9), rng(), style);
    const StateVector sv = simulate(c);
    const Bitstring bits = random_bits(c.num_qubits(), rng);
    CHECK(close(scalar_value(build_network(c, bits)), amplitude(sv, bits)));
  }
}

TEST_CASE("index table is the transpose of node lists") {
  const auto net = build_network(generate_rqc(3, 3, 6, 2, CircuitStyle::CZ), Bitstring(9, 0), {4});
  const auto table = net.index_table();
  std::size_t incidences = 0;
  for (std::size_t n = 0; n < net.num_nodes(); ++n) {
    for (auto id : net.node(static_cast<int>(n)).indices) {
      const auto& row = table[static_cast<std::size_t>(to_int(id))];
      CHECK(std::find(row.begin(), row.end(), static_cast<int>(n)) != row.end());
      ++incidences;
    }
  }
  std::size_t total = 0;
  for (const auto& row : table) total += row.size();
  CHECK(total == incidences);
}

TEST_CASE("diagonal gates become hyperedges") {
  const Circuit c = generate_rqc(3, 3, 8, 4, CircuitStyle::CZ);
  const Bitstring bits(9, 1);
  const auto net = build_network(c, bits);
  const auto diag = diagonalize(net);
  CHECK_NOTHROW(diag.validate());
  CHECK(diag.num_index_slots() < net.num_index_slots());
  const auto table = diag.index_table();
  std::size_t widest = 0;
  for (const auto& row : table) widest = std::max(widest, row.size());
  CHECK(widest > 2);
  CHECK(close(scalar_value(diag), scalar_value(net)));
}

TEST_CASE("simplify collapses a matrix chain") {
  TensorNetwork net;
  const IndexId i = net.add_index(2), j = net.add_index(3), k = net.add_index(2);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  auto dense = [&](std::vector<IndexId> idx, std::vector<std::int64_t> dims) {
    auto t = std::make_shared<TensorD>(idx, dims);
    for (auto& v : t->data()) v = {nd(rng), nd(rng)};
    return DenseSource{t};
  };
  net.add_node({NodeOrigin::Gate, {i, j}, dense({i, j}, {2, 3})});
  net.add_node({NodeOrigin::Gate, {j, k}, dense({j, k}, {3, 2})});
  net.set_open_indices({i, k});
  const auto s = simplify(net);
  CHECK(s.num_nodes() == 1);
  const auto want = contract_network<double>(net, linear_path(2));
  const auto got = contract_network<double>(s, linear_path(1));
  for (std::size_t x = 0; x < want.size(); ++x) CHECK(std::abs(want.data()[x] - got.data()[x]) < 1e-12);
}

TEST_CASE("simplify on CZ-heavy 4x4 depth 8") {
  const Circuit c = generate_rqc(4, 4, 8, 6, CircuitStyle::CZ);
  std::mt19937_64 rng(6);
  const Bitstring bits = random_bits(16, rng);
  const auto net = build_network(c, bits);
  const auto s = simplify(net);
  CHECK_NOTHROW(s.validate());
  CHECK(s.num_nodes() < net.num_nodes());
  CHECK(close(scalar_value(s), scalar_value(net)));
  const auto again = simplify(s);
  CHECK(structurally_equal(again, s));
}

TEST_CASE("simplify preserves values on fuzzed circuits") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + static_cast<int>(rng() % 3);
    const int cols = 1 + static_cast<int>(rng() % 3);
    const auto style = trial % 2 ? CircuitStyle::FSIM : CircuitStyle::CZ;
    const Circuit c = generate_rqc(rows, cols, static_cast<int>(rng() % 9), rng(), style);
    const int n = c.num_qubits();
    std::vector<int> open;
    if (trial % 3 == 0) open.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(n)));
    const auto net = build_network(c, random_bits(n, rng), open);
    const auto s = simplify(net);
    const auto a = contract_network<double>(net, linear_path(static_cast<int>(net.num_nodes())));
    const auto b = contract_network<double>(s, linear_path(static_cast<int>(s.num_nodes())));
    REQUIRE(a.size() == b.size());
    for (std::size_t x = 0; x < a.size(); ++x) CHECK(close(b.data()[x], a.data()[x]));
  }
}

TEST_CASE("network stats") {
  const auto tiny = build_network(generate_rqc(1, 1, 0, 1, CircuitStyle::FSIM), {0});
  const auto ts = network_stats(tiny);
  CHECK(ts.num_nodes <= 3);
  CHECK(ts.max_rank <= 2);

  const auto start = std::chrono::steady_clock::now();
  const auto big = build_network(generate_rqc(10, 10, 40, 1, CircuitStyle::CZ), Bitstring(100, 0));
  const auto bs = network_stats(big);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 1.0);
  CHECK(std::isfinite(bs.log2_total_dim));
  CHECK(bs.max_rank == 4);

  // Renumbering nodes leaves the stats unchanged.
  TensorNetwork rev(big.rows(), big.cols());
  for (std::size_t i = 0; i < big.num_index_slots(); ++i) {
    const auto& info = big.index(make_index(static_cast<std::int32_t>(i)));
    rev.add_index(info.dim, info.owner);
  }
  for (std::size_t n = big.num_nodes(); n-- > 0;) rev.add_node(big.node(static_cast<int>(n)));
  const auto rs = network_stats(rev);
  CHECK(rs.num_nodes == bs.num_nodes);
  CHECK(rs.num_indices == bs.num_indices);
  CHECK(rs.max_rank == bs.max_rank);
  CHECK(rs.log2_total_dim == doctest::Approx(bs.log2_total_dim));
}

TEST_CASE("site coarsening preserves amplitudes") {
  for (auto style : {CircuitStyle::CZ, CircuitStyle::FSIM}) {
    const Circuit c = generate_rqc(3, 3, 9, 8, style);
    const StateVector sv = simulate(c);
    std::mt19937_64 rng(8);
    const Bitstring bits = random_bits(9, rng);
    const auto coarse = coarsen_to_sites(diagonalize(build_network(c, bits)));
    CHECK(coarse.num_nodes() == 9);
    CHECK(close(scalar_value(coarse), amplitude(sv, bits)));
    // Sites 0 and 1 share two CZ gates (cycles 0, 8) or three FSim gates (cycles 0, 6, 8).
    const int b = bond_between(coarse, 0, 1);
    REQUIRE(b >= 0);
    CHECK(coarse.dim(make_index(b)) == (style == CircuitStyle::CZ ? 4 : 64));
    CHECK(bond_between(coarse, 0, 4) == -1);

    // Pinning a bond and summing over its values reproduces the amplitude.
    std::complex<double> sum;
    for (std::int64_t v = 0; v < coarse.dim(make_index(b)); ++v) sum += scalar_value(coarse, {{make_index(b), v}});
    CHECK(close(sum, amplitude(sv, bits)));
  }
}

TEST_CASE("coarse network with open qubits") {
  const Circuit c = generate_rqc(2, 3, 8, 9, CircuitStyle::CZ);
  const StateVector sv = simulate(c);
  const auto coarse = coarsen_to_sites(diagonalize(build_network(c, Bitstring(6, 0), {5, 2})));
  const auto t = contract_network<double>(coarse, linear_path(static_cast<int>(coarse.num_nodes())));
  REQUIRE(t.size() == 4);
  for (int b5 = 0; b5 < 2; ++b5) {
    for (int b2 = 0; b2 < 2; ++b2) {
      Bitstring bits(6, 0);
      bits[5] = static_cast<std::uint8_t>(b5);
      bits[2] = static_cast<std::uint8_t>(b2);
      CHECK(std::abs(t.data()[static_cast<std::size_t>(b5 * 2 + b2)] - amplitude(sv, bits)) < 1e-12);
    }
  }
}

TEST_CASE("json export") {
  const auto net = build_network(parse_circuit("1 2\n0 h 0\n0 h 1\n1 cz 0 1\n"), {0, 0}, {1});
  const std::string j = network_to_json(net);
  CHECK(j.find("\"open_indices\"") != std::string::npos);
  CHECK(j.find("\"dims\"") != std::string::npos);
}
