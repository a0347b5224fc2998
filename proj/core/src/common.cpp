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

#include "rqcsim/common.hpp"

#include <cstdio>

namespace rqcsim {

std::string to_string(const Bitstring& bits) {
  std::string s(bits.size(), '0');
  for (std::size_t q = 0; q < bits.size(); ++q) s[q] = bits[q] ? '1' : '0';
  return s;
}

Bitstring bitstring_from_string(std::string_view text) {
  Bitstring bits;
  bits.reserve(text.size());
  for (char ch : text) {
    if (ch != '0' && ch != '1') throw Error("common", "bitstring may only contain '0' and '1'");
    bits.push_back(ch == '1' ? 1 : 0);
  }
  return bits;
}

std::uint64_t bitstring_to_index(const Bitstring& bits) {
  std::uint64_t idx = 0;
  for (std::size_t q = 0; q < bits.size(); ++q) {
    if (bits[q]) idx |= (std::uint64_t{1} << q);
  }
  return idx;
}

Bitstring index_to_bitstring(std::uint64_t index, int num_qubits) {
  Bitstring bits(static_cast<std::size_t>(num_qubits));
  for (int q = 0; q < num_qubits; ++q) bits[q] = (index >> q) & 1U;
  return bits;
}

void Fnv1a::update(const void* data, std::size_t size) noexcept {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    state_ ^= p[i];
    state_ *= 0x100000001b3ULL;
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace rqcsim
