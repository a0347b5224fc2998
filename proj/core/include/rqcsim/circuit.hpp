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

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rqcsim/common.hpp"

namespace rqcsim {

enum class GateTag : std::uint8_t { H, SqrtX, SqrtY, SqrtW, T, CZ, ISwap, FSim };

[[nodiscard]] int gate_arity(GateTag tag) noexcept;
[[nodiscard]] int gate_param_count(GateTag tag) noexcept;
/// Lower-case tag used by the circuit file format ("h", "sx", ..., "fsim").
[[nodiscard]] std::string_view gate_tag_name(GateTag tag) noexcept;
/// True when the gate's unitary is diagonal in the computational basis.
[[nodiscard]] bool gate_is_diagonal(GateTag tag, const std::array<double, 2>& params) noexcept;

/// One gate application. Fixed-size storage keeps a gate allocation-free.
struct Gate {
  GateTag tag = GateTag::H;
  std::array<int, 2> qubits{0, 0};
  std::array<double, 2> params{0.0, 0.0};  // FSim: (theta, phi)
  int cycle = 0;

  [[nodiscard]] int arity() const noexcept { return gate_arity(tag); }
  [[nodiscard]] bool is_diagonal() const noexcept { return gate_is_diagonal(tag, params); }

  friend bool operator==(const Gate&, const Gate&) = default;
};

Gate make_gate(GateTag tag, int cycle, int q0);
Gate make_gate(GateTag tag, int cycle, int q0, int q1);
Gate make_fsim(int cycle, int q0, int q1, double theta, double phi);

/// Row-major 2x2 or 4x4 complex matrix. For two-qubit gates the basis index
/// is 2*b(q0) + b(q1), i.e. the first listed qubit is the high bit.
struct UnitaryMatrix {
  int dim = 2;
  std::array<std::complex<double>, 16> entries{};

  [[nodiscard]] std::complex<double> operator()(int row, int col) const noexcept {
    return entries[static_cast<std::size_t>(row * dim + col)];
  }
  std::complex<double>& operator()(int row, int col) noexcept {
    return entries[static_cast<std::size_t>(row * dim + col)];
  }
};

[[nodiscard]] UnitaryMatrix gate_unitary(const Gate& g);
/// max_ij |(U^dagger U - I)_ij|
[[nodiscard]] double unitarity_defect(const UnitaryMatrix& u);

enum class CircuitStyle { CZ, FSIM };

/// Random quantum circuit over a rows x cols lattice. Qubit q sits at
/// (q / cols, q % cols). `cycles` holds 1 + depth + 1 layers: the Hadamard
/// layer, the middle cycles and the final layer (which may be empty).
class Circuit {
 public:
  Circuit() = default;
  Circuit(int rows, int cols, std::vector<int> disabled = {});

  [[nodiscard]] int rows() const noexcept { return rows_; }
  [[nodiscard]] int cols() const noexcept { return cols_; }
  [[nodiscard]] int num_qubits() const noexcept { return rows_ * cols_; }
  [[nodiscard]] int depth() const noexcept {
    return cycles_.size() >= 2 ? static_cast<int>(cycles_.size()) - 2 : 0;
  }
  [[nodiscard]] const std::vector<int>& disabled() const noexcept { return disabled_; }
  [[nodiscard]] bool is_disabled(int q) const noexcept;
  [[nodiscard]] const std::vector<std::vector<Gate>>& cycles() const noexcept { return cycles_; }
  [[nodiscard]] std::size_t gate_count() const noexcept;

  /// Appends a gate to cycle `g.cycle`, growing the cycle list as needed.
  void add_gate(const Gate& g);
  /// Makes sure cycles 0..count-1 exist (possibly empty).
  void ensure_cycles(int count);

  /// Throws Error("circuit", ...) on the first violated invariant.
  void validate() const;

  [[nodiscard]] bool adjacent(int a, int b) const noexcept;

  friend bool operator==(const Circuit&, const Circuit&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> disabled_;
  std::vector<std::vector<Gate>> cycles_;
};

/// Parse error with the 1-based line number of the offending input line.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& message)
      : Error("circuit", "line " + std::to_string(line) + ": " + message), line_(line) {}
  [[nodiscard]] int line() const noexcept { return line_; }

 private:
  int line_;
};

[[nodiscard]] Circuit parse_circuit(std::string_view text);
/// Canonical text form: header, then gate lines sorted by cycle in insertion
/// order. An empty cycle is written as a line holding only its number.
[[nodiscard]] std::string serialize_circuit(const Circuit& c);

/// The two-qubit pairs of pattern `pattern` (0..7) of the style's 8-cycle
/// schedule. CZ: eight staggered quarter-density matchings, each edge used
/// once per period. FSIM: the four checkerboard matchings in order ABCDCDAB.
[[nodiscard]] std::vector<std::array<int, 2>> coupler_pattern(int rows, int cols, int pattern,
                                                              CircuitStyle style = CircuitStyle::CZ);

/// FSIM-style circuits spend two layers per cycle (single-qubit gates on all
/// qubits, then fSim), so their depth() is twice the requested cycle count.

[[nodiscard]] Circuit generate_rqc(int rows, int cols, int depth, std::uint64_t seed,
                                   CircuitStyle style, std::vector<int> disabled = {});

[[nodiscard]] std::uint64_t circuit_hash(const Circuit& c);

}  // namespace rqcsim
