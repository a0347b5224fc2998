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
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rqcsim {

/// Base class of every error raised by the library. `module()` names the
/// subsystem that raised it so the CLI can print "module: message".
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)) {}

  [[nodiscard]] const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Opaque identifier of a tensor-network index (hyperedge).
enum class IndexId : std::int32_t {};

constexpr std::int32_t to_int(IndexId id) noexcept { return static_cast<std::int32_t>(id); }
constexpr IndexId make_index(std::int32_t v) noexcept { return static_cast<IndexId>(v); }

/// Computational-basis bitstring; element q holds the bit of qubit q.
using Bitstring = std::vector<std::uint8_t>;

std::string to_string(const Bitstring& bits);
Bitstring bitstring_from_string(std::string_view text);

/// Qubit 0 is the least significant bit of a state index.
std::uint64_t bitstring_to_index(const Bitstring& bits);
Bitstring index_to_bitstring(std::uint64_t index, int num_qubits);

/// 64-bit FNV-1a, used for plan/config/content hashes in file headers.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size) noexcept;
  void update(std::string_view s) noexcept { update(s.data(), s.size()); }
  template <typename T>
  void update_value(const T& v) noexcept {
    update(&v, sizeof(T));
  }
  [[nodiscard]] std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t v);

}  // namespace rqcsim
