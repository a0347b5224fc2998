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

#include <complex>
#include <vector>

#include "rqcsim/circuit.hpp"

namespace rqcsim {

/// Dense Schroedinger state. Qubit 0 is the least significant bit of the
/// amplitude index.
struct StateVector {
  int num_qubits = 0;
  std::vector<std::complex<double>> amps;

  [[nodiscard]] double norm_squared() const;
};

inline constexpr int kDefaultOracleQubitCap = 20;

/// Applies the circuit to |0...0>, cycle by cycle. Throws when the circuit is
/// wider than `max_qubits`.
[[nodiscard]] StateVector simulate(const Circuit& c, int max_qubits = kDefaultOracleQubitCap);

void apply_gate(StateVector& sv, const Gate& g);

[[nodiscard]] std::complex<double> amplitude(const StateVector& sv, const Bitstring& bits);
[[nodiscard]] std::vector<double> all_probs(const StateVector& sv);

}  // namespace rqcsim
