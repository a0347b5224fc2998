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
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rqcsim/engine.hpp"

namespace rqcsim {

struct HalfFlags {
  bool underflow_hit = false;  // a nonzero value rounded to zero
  bool overflow_hit = false;   // a finite value rounded to infinity

  [[nodiscard]] bool any() const noexcept { return underflow_hit || overflow_hit; }
  HalfFlags& operator|=(const HalfFlags& o) noexcept {
    underflow_hit |= o.underflow_hit;
    overflow_hit |= o.overflow_hit;
    return *this;
  }
  friend bool operator==(const HalfFlags&, const HalfFlags&) = default;
};

/// IEEE binary16 storage value.
class Half16 {
 public:
  constexpr Half16() = default;
  static constexpr Half16 from_bits(std::uint16_t b) noexcept {
    Half16 h;
    h.bits_ = b;
    return h;
  }
  /// Round-to-nearest-even conversion.
  static Half16 from_single(float x, HalfFlags* flags = nullptr) noexcept;
  [[nodiscard]] float to_single() const noexcept;
  [[nodiscard]] constexpr std::uint16_t bits() const noexcept { return bits_; }

 private:
  std::uint16_t bits_ = 0;
};

/// x rounded through binary16 and back.
[[nodiscard]] float round_to_half(float x, HalfFlags* flags = nullptr) noexcept;

/// Rounds every real and imaginary part through binary16; tags HalfStored.
[[nodiscard]] std::pair<DenseTensor, HalfFlags> round_to_half(const DenseTensor& t);

struct ScalingState {
  int scale_exp = 0;
  double max_abs_seen = 0.0;
};

/// Multiplies data by 2^-e with e = floor(log2 max|element|) and adds e to
/// scale_exp. All-zero tensors come back unchanged.
[[nodiscard]] DenseTensor adaptive_scale(const DenseTensor& t, ScalingState* state = nullptr);

/// One contraction path's contribution; logical value is value * 2^scale_exp.
struct PathResult {
  std::complex<float> value;
  int scale_exp = 0;
  HalfFlags flags;

  [[nodiscard]] std::complex<double> logical() const;
};

struct FilterOutcome {
  std::vector<PathResult> kept;
  double discarded_fraction = 0.0;
  double rescale = 1.0;  // total / kept
  std::complex<double> estimate;
};

/// Drops flagged paths and rescales the sum of the rest by 1/kept_fraction.
[[nodiscard]] FilterOutcome filter_paths(const std::vector<PathResult>& results);

inline constexpr int kDefaultBlockSize = 90;

/// Which single-precision sum the error curve is measured against.
enum class ErrorReference {
  Total,   // the sum over every complete block
  Prefix,  // the reference sum over the same first k blocks
};

/// Collects per-path mixed results next to single-precision references and
/// groups them into blocks of `block_size` paths.
class BlockAccumulator {
 public:
  explicit BlockAccumulator(int block_size = kDefaultBlockSize);

  void add(const PathResult& mixed, std::complex<double> reference);

  [[nodiscard]] int block_size() const noexcept { return block_size_; }
  [[nodiscard]] std::size_t paths() const noexcept { return mixed_.size(); }
  [[nodiscard]] std::size_t complete_blocks() const noexcept { return mixed_.size() / static_cast<std::size_t>(block_size_); }
  [[nodiscard]] std::size_t flagged() const noexcept;

  /// Rescaled mixed estimate and reference over the first k blocks.
  [[nodiscard]] std::complex<double> mixed_prefix(std::size_t k) const;
  [[nodiscard]] std::complex<double> reference_prefix(std::size_t k) const;

 private:
  int block_size_;
  std::vector<PathResult> mixed_;
  std::vector<std::complex<double>> reference_;
};

/// Entry k-1 = |mixed over first k blocks - reference| / |reference|.
[[nodiscard]] std::vector<double> error_curve(const BlockAccumulator& acc,
                                              ErrorReference ref = ErrorReference::Total);

/// Ordinary least-squares slope of y against 0, 1, 2, ...
[[nodiscard]] double least_squares_slope(const std::vector<double>& y);

/// CSV "block_index,relative_error" with a leading comment naming `manifest`.
void write_error_curve_csv(std::ostream& out, const std::vector<double>& curve, const std::string& manifest = {});

}  // namespace rqcsim
