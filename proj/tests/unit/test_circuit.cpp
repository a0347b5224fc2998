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
#include <numbers>

#include "doctest.h"
#include "rqcsim/circuit.hpp"

using namespace rqcsim;

TEST_CASE("parse smallest circuit") {
  const Circuit c = parse_circuit("1 1\n0 h 0\n");
  CHECK(c.rows() == 1);
  CHECK(c.cols() == 1);
  REQUIRE(c.cycles().size() == 1);
  REQUIRE(c.cycles()[0].size() == 1);
  CHECK(c.cycles()[0][0].tag == GateTag::H);
  CHECK(c.cycles()[0][0].qubits[0] == 0);
}

TEST_CASE("parse 2x2 with one cz") {
  const Circuit c = parse_circuit("2 2\n0 h 0\n0 h 1\n0 h 2\n0 h 3\n1 cz 0 1\n");
  CHECK(c.num_qubits() == 4);
  CHECK(c.cycles().size() == 2);
  CHECK(c.cycles()[1][0].tag == GateTag::CZ);
}

TEST_CASE("parse errors carry line numbers") {
  auto line_of = [](const char* text) {
    try {
      (void)parse_circuit(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("2 2\n0 h 0\n0 foo 1\n") == 3);
  CHECK(line_of("2 2\n0 h 7\n") == 2);
  CHECK(line_of("2 2\n0 h 0\n0 sx 0\n") == 3);
  CHECK(line_of("2 2\n0 fsim 0 1 0.5\n") == 2);
  CHECK(line_of("2 2\n0 cz 0 3\n") == 2);
  CHECK(line_of("2 2\n0 h 0\n2 h 0\n") > 0);
  CHECK(line_of("2 x\n") == 1);
}

TEST_CASE("comments and unsorted cycles") {
  const Circuit c = parse_circuit("# header\n1 2 # lattice\n1 cz 0 1\n0 h 0 # first\n0 h 1\n");
  CHECK(c.cycles().size() == 2);
  CHECK(c.cycles()[0].size() == 2);
}

TEST_CASE("round trip on generated circuits") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int rows = 1 + static_cast<int>(seed % 4);
    const int cols = 1 + static_cast<int>((seed / 4) % 4);
    const auto style = seed % 2 ? CircuitStyle::FSIM : CircuitStyle::CZ;
    const Circuit c = generate_rqc(rows, cols, static_cast<int>(seed % 13), seed, style);
    const std::string text = serialize_circuit(c);
    const Circuit back = parse_circuit(text);
    CHECK(back == c);
    CHECK(serialize_circuit(back) == text);
  }
}

TEST_CASE("generate zero depth") {
  const Circuit c = generate_rqc(2, 2, 0, 3, CircuitStyle::CZ);
  CHECK(c.depth() == 0);
  CHECK(c.cycles().size() == 2);
  for (const auto& cyc : c.cycles()) {
    for (const auto& g : cyc) CHECK(g.arity() == 1);
  }
}

TEST_CASE("generate is deterministic and valid") {
  const auto a = serialize_circuit(generate_rqc(4, 4, 8, 7, CircuitStyle::CZ));
  const auto b = serialize_circuit(generate_rqc(4, 4, 8, 7, CircuitStyle::CZ));
  CHECK(a == b);
  CHECK(a != serialize_circuit(generate_rqc(4, 4, 8, 8, CircuitStyle::CZ)));
  for (auto style : {CircuitStyle::CZ, CircuitStyle::FSIM}) {
    const Circuit c = generate_rqc(5, 4, 20, 11, style);
    CHECK_NOTHROW(c.validate());
    CHECK(c.depth() == (style == CircuitStyle::CZ ? 20 : 40));
  }
}

TEST_CASE("no repeated single-qubit gate on a qubit") {
  const Circuit c = generate_rqc(3, 3, 24, 5, CircuitStyle::CZ);
  std::vector<int> last(9, -1);
  for (int cyc = 1; cyc <= c.depth(); ++cyc) {
    for (const auto& g : c.cycles()[static_cast<std::size_t>(cyc)]) {
      if (g.arity() != 1) continue;
      const int q = g.qubits[0];
      CHECK(static_cast<int>(g.tag) != last[static_cast<std::size_t>(q)]);
      last[static_cast<std::size_t>(q)] = static_cast<int>(g.tag);
    }
  }
}

TEST_CASE("coupler schedule edge counts per 8 cycles") {
  const int rows = 6, cols = 5;
  // CZ uses every edge once per period; FSIM uses every edge twice.
  for (auto [style, per_edge] : {std::pair{CircuitStyle::CZ, 1}, std::pair{CircuitStyle::FSIM, 2}}) {
    std::vector<int> count(static_cast<std::size_t>(rows * cols * rows * cols), 0);
    for (int p = 0; p < 8; ++p) {
      std::vector<int> used(static_cast<std::size_t>(rows * cols), 0);
      for (auto [a, b] : coupler_pattern(rows, cols, p, style)) {
        ++count[static_cast<std::size_t>(a * rows * cols + b)];
        CHECK(++used[static_cast<std::size_t>(a)] == 1);
        CHECK(++used[static_cast<std::size_t>(b)] == 1);
      }
    }
    int edges = 0;
    for (int a = 0; a < rows * cols; ++a) {
      for (int b = 0; b < rows * cols; ++b) {
        const int k = count[static_cast<std::size_t>(a * rows * cols + b)];
        const bool adj = (b == a + 1 && a % cols != cols - 1) || b == a + cols;
        CHECK(k == (adj ? per_edge : 0));
        edges += k;
      }
    }
    CHECK(edges == per_edge * (rows * (cols - 1) + (rows - 1) * cols));
  }
}

TEST_CASE("fsim cycles put single-qubit gates on every qubit before the fsim layer") {
  const Circuit c = generate_rqc(3, 4, 5, 2, CircuitStyle::FSIM);
  REQUIRE(c.cycles().size() == 12);
  for (int layer = 1; layer <= 10; ++layer) {
    const auto& gates = c.cycles()[static_cast<std::size_t>(layer)];
    for (const auto& g : gates) CHECK(g.arity() == (layer % 2 == 1 ? 1 : 2));
    if (layer % 2 == 1) CHECK(gates.size() == 12);
  }
  CHECK(c.cycles().back().empty());
}

TEST_CASE("disabled qubits get no gates") {
  const Circuit c = generate_rqc(3, 3, 8, 1, CircuitStyle::FSIM, {4});
  for (const auto& cyc : c.cycles()) {
    for (const auto& g : cyc) {
      CHECK(g.qubits[0] != 4);
      if (g.arity() == 2) CHECK(g.qubits[1] != 4);
    }
  }
  const Circuit back = parse_circuit(serialize_circuit(c));
  CHECK(back.is_disabled(4));
  CHECK_THROWS_AS((void)parse_circuit("2 2 1\n0 h 1\n"), ParseError);
}

TEST_CASE("gate unitaries") {
  const auto cz = gate_unitary(make_gate(GateTag::CZ, 0, 0, 1));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double want = i != j ? 0.0 : (i == 3 ? -1.0 : 1.0);
      CHECK(std::abs(cz(i, j) - std::complex<double>(want)) < 1e-15);
    }
  }
  const auto id = gate_unitary(make_fsim(0, 0, 1, 0.0, 0.0));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(std::abs(id(i, j) - std::complex<double>(i == j ? 1.0 : 0.0)) < 1e-15);
  }
  for (auto tag : {GateTag::H, GateTag::SqrtX, GateTag::SqrtY, GateTag::SqrtW, GateTag::T}) {
    CHECK(unitarity_defect(gate_unitary(make_gate(tag, 0, 0))) < 1e-12);
  }
  for (auto tag : {GateTag::CZ, GateTag::ISwap}) {
    CHECK(unitarity_defect(gate_unitary(make_gate(tag, 0, 0, 1))) < 1e-12);
  }
  CHECK(unitarity_defect(gate_unitary(make_fsim(0, 0, 1, std::numbers::pi / 2, std::numbers::pi / 6))) < 1e-12);
  // Zeros of fSim(pi/2, .) are exact; float residue would underflow in binary16.
  const auto sycamore = gate_unitary(make_fsim(0, 0, 1, std::numbers::pi / 2, std::numbers::pi / 6));
  CHECK(sycamore(1, 1) == std::complex<double>(0.0));
  CHECK(sycamore(2, 2) == std::complex<double>(0.0));
  CHECK(sycamore(1, 2) == std::complex<double>(0.0, -1.0));
  CHECK(unitarity_defect(gate_unitary(make_fsim(0, 0, 1, 0.3, 1.7))) < 1e-12);
}

TEST_CASE("sqrt gates square to paulis") {
  auto square = [](const UnitaryMatrix& u) {
    UnitaryMatrix r;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) r(i, j) = u(i, 0) * u(0, j) + u(i, 1) * u(1, j);
    }
    return r;
  };
  const std::complex<double> I(0, 1);
  const auto x = square(gate_unitary(make_gate(GateTag::SqrtX, 0, 0)));
  CHECK(std::abs(x(0, 1) - 1.0) < 1e-12);
  CHECK(std::abs(x(0, 0)) < 1e-12);
  const auto y = square(gate_unitary(make_gate(GateTag::SqrtY, 0, 0)));
  CHECK(std::abs(y(0, 1) + I) < 1e-12);
  CHECK(std::abs(y(1, 0) - I) < 1e-12);
  const auto w = square(gate_unitary(make_gate(GateTag::SqrtW, 0, 0)));
  // W = (X + Y) / sqrt2, up to a global phase.
  const std::complex<double> s = 1.0 / std::sqrt(2.0);
  const auto phase = w(0, 1) / (s * (1.0 - I));
  CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
  CHECK(std::abs(w(1, 0) - phase * s * (1.0 + I)) < 1e-12);
  CHECK(std::abs(w(0, 0)) < 1e-12);
}

TEST_CASE("diagonal detection") {
  CHECK(make_gate(GateTag::CZ, 0, 0, 1).is_diagonal());
  CHECK(make_gate(GateTag::T, 0, 0).is_diagonal());
  CHECK(make_fsim(0, 0, 1, 0.0, 0.4).is_diagonal());
  CHECK_FALSE(make_fsim(0, 0, 1, std::numbers::pi / 2, std::numbers::pi / 6).is_diagonal());
  CHECK_FALSE(make_gate(GateTag::ISwap, 0, 0, 1).is_diagonal());
}
