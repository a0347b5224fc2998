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

#include "rqcsim/oracle.hpp"

#include <numeric>

namespace rqcsim {

double StateVector::norm_squared() const {
  double s = 0.0;
  for (const auto& a : amps) s += std::norm(a);
  return s;
}

void apply_gate(StateVector& sv, const Gate& g) {
  const UnitaryMatrix u = gate_unitary(g);
  const std::size_t size = sv.amps.size();
  if (g.arity() == 1) {
    const std::size_t bit = std::size_t{1} << g.qubits[0];
    for (std::size_t i = 0; i < size; ++i) {
      if (i & bit) continue;
      const auto a0 = sv.amps[i];
      const auto a1 = sv.amps[i | bit];
      sv.amps[i] = u(0, 0) * a0 + u(0, 1) * a1;
      sv.amps[i | bit] = u(1, 0) * a0 + u(1, 1) * a1;
    }
    return;
  }
  // Local basis index 2*b(q0) + b(q1).
  const std::size_t hi = std::size_t{1} << g.qubits[0];
  const std::size_t lo = std::size_t{1} << g.qubits[1];
  for (std::size_t i = 0; i < size; ++i) {
    if ((i & hi) || (i & lo)) continue;
    const std::array<std::size_t, 4> idx{i, i | lo, i | hi, i | hi | lo};
    std::array<std::complex<double>, 4> in{};
    for (int k = 0; k < 4; ++k) in[static_cast<std::size_t>(k)] = sv.amps[idx[static_cast<std::size_t>(k)]];
    for (int r = 0; r < 4; ++r) {
      std::complex<double> acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += u(r, k) * in[static_cast<std::size_t>(k)];
      sv.amps[idx[static_cast<std::size_t>(r)]] = acc;
    }
  }
}

StateVector simulate(const Circuit& c, int max_qubits) {
  if (c.num_qubits() > max_qubits) {
    throw Error("oracle", "state vector of " + std::to_string(c.num_qubits()) +
                              " qubits exceeds the cap of " + std::to_string(max_qubits));
  }
  StateVector sv;
  sv.num_qubits = c.num_qubits();
  sv.amps.assign(std::size_t{1} << sv.num_qubits, {0.0, 0.0});
  sv.amps[0] = 1.0;
  for (const auto& layer : c.cycles()) {
    for (const Gate& g : layer) apply_gate(sv, g);
  }
  return sv;
}

std::complex<double> amplitude(const StateVector& sv, const Bitstring& bits) {
  if (static_cast<int>(bits.size()) != sv.num_qubits) {
    throw Error("oracle", "bitstring length does not match the qubit count");
  }
  return sv.amps[bitstring_to_index(bits)];
}

std::vector<double> all_probs(const StateVector& sv) {
  std::vector<double> p(sv.amps.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(sv.amps[i]);
  return p;
}

}  // namespace rqcsim
