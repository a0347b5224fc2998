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

#include "rqcsim/precision.hpp"

#include <bit>
#include <cmath>
#include <ostream>

namespace rqcsim {

Half16 Half16::from_single(float x, HalfFlags* flags) noexcept {
  const auto f = std::bit_cast<std::uint32_t>(x);
  const auto sign = static_cast<std::uint16_t>((f >> 16) & 0x8000U);
  const std::uint32_t exp = (f >> 23) & 0xffU;
  std::uint32_t mant = f & 0x7fffffU;

  if (exp == 0xffU) {
    const std::uint16_t payload = mant ? static_cast<std::uint16_t>(0x200U | (mant >> 13)) : 0;
    return from_bits(static_cast<std::uint16_t>(sign | 0x7c00U | payload));
  }
  const int e = static_cast<int>(exp) - 127 + 15;
  if (e >= 31) {
    if (flags) flags->overflow_hit = true;
    return from_bits(static_cast<std::uint16_t>(sign | 0x7c00U));
  }
  if (e <= 0) {
    std::uint32_t half_mant = 0;
    if (e >= -10) {
      mant |= 0x800000U;
      const int shift = 14 - e;
      half_mant = mant >> shift;
      const std::uint32_t rem = mant & ((1U << shift) - 1U);
      const std::uint32_t halfway = 1U << (shift - 1);
      if (rem > halfway || (rem == halfway && (half_mant & 1U))) ++half_mant;
    }
    if (half_mant == 0 && (exp != 0 || (f & 0x7fffffU) != 0)) {
      if (flags) flags->underflow_hit = true;
    }
    return from_bits(static_cast<std::uint16_t>(sign | half_mant));
  }
  auto half = static_cast<std::uint32_t>(sign) | (static_cast<std::uint32_t>(e) << 10) | (mant >> 13);
  const std::uint32_t rem = mant & 0x1fffU;
  if (rem > 0x1000U || (rem == 0x1000U && (half & 1U))) ++half;
  if ((half & 0x7fffU) == 0x7c00U && flags) flags->overflow_hit = true;
  return from_bits(static_cast<std::uint16_t>(half));
}

float Half16::to_single() const noexcept {
  const std::uint32_t sign = (static_cast<std::uint32_t>(bits_) & 0x8000U) << 16;
  const std::uint32_t exp = (bits_ >> 10) & 0x1fU;
  std::uint32_t mant = bits_ & 0x3ffU;
  if (exp == 0x1fU) return std::bit_cast<float>(sign | 0x7f800000U | (mant << 13));
  if (exp == 0) {
    if (mant == 0) return std::bit_cast<float>(sign);
    // Subnormal: value = mant * 2^-24, exact in float.
    const float v = std::ldexp(static_cast<float>(mant), -24);
    return sign ? -v : v;
  }
  return std::bit_cast<float>(sign | ((exp - 15 + 127) << 23) | (mant << 13));
}

float round_to_half(float x, HalfFlags* flags) noexcept {
  return Half16::from_single(x, flags).to_single();
}

std::pair<DenseTensor, HalfFlags> round_to_half(const DenseTensor& t) {
  DenseTensor out = t;
  HalfFlags flags;
  for (auto& v : out.data()) {
    v = {round_to_half(v.real(), &flags), round_to_half(v.imag(), &flags)};
  }
  out.set_precision(Precision::HalfStored);
  return {std::move(out), flags};
}

DenseTensor adaptive_scale(const DenseTensor& t, ScalingState* state) {
  double max_abs = 0.0;
  for (const auto& v : t.data()) {
    max_abs = std::max(max_abs, std::abs(std::complex<double>(v.real(), v.imag())));
  }
  if (state) state->max_abs_seen = std::max(state->max_abs_seen, max_abs);
  if (max_abs == 0.0 || !std::isfinite(max_abs)) return t;
  int ex = 0;
  (void)std::frexp(max_abs, &ex);
  const int e = ex - 1;  // floor(log2 max_abs)
  DenseTensor out = t;
  for (auto& v : out.data()) v = {std::ldexp(v.real(), -e), std::ldexp(v.imag(), -e)};
  out.set_scale_exp(t.scale_exp() + e);
  if (state) state->scale_exp = out.scale_exp();
  return out;
}

std::complex<double> PathResult::logical() const {
  return {std::ldexp(static_cast<double>(value.real()), scale_exp),
          std::ldexp(static_cast<double>(value.imag()), scale_exp)};
}

FilterOutcome filter_paths(const std::vector<PathResult>& results) {
  FilterOutcome out;
  std::complex<double> sum;
  for (const auto& r : results) {
    if (r.flags.any()) continue;
    out.kept.push_back(r);
    sum += r.logical();
  }
  if (out.kept.empty()) throw Error("precision", "every path was discarded by the underflow/overflow filter");
  const auto total = static_cast<double>(results.size());
  const auto kept = static_cast<double>(out.kept.size());
  out.discarded_fraction = (total - kept) / total;
  out.rescale = total / kept;
  out.estimate = sum * out.rescale;
  return out;
}

BlockAccumulator::BlockAccumulator(int block_size) : block_size_(block_size) {
  if (block_size < 1) throw Error("precision", "block size must be positive");
}

void BlockAccumulator::add(const PathResult& mixed, std::complex<double> reference) {
  mixed_.push_back(mixed);
  reference_.push_back(reference);
}

std::size_t BlockAccumulator::flagged() const noexcept {
  std::size_t n = 0;
  for (const auto& r : mixed_) n += r.flags.any() ? 1 : 0;
  return n;
}

std::complex<double> BlockAccumulator::mixed_prefix(std::size_t k) const {
  const std::size_t count = std::min(k * static_cast<std::size_t>(block_size_), mixed_.size());
  std::complex<double> sum;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (mixed_[i].flags.any()) continue;
    sum += mixed_[i].logical();
    ++kept;
  }
  if (kept == 0) return {};
  return sum * (static_cast<double>(count) / static_cast<double>(kept));
}

std::complex<double> BlockAccumulator::reference_prefix(std::size_t k) const {
  const std::size_t count = std::min(k * static_cast<std::size_t>(block_size_), reference_.size());
  std::complex<double> sum;
  for (std::size_t i = 0; i < count; ++i) sum += reference_[i];
  return sum;
}

std::vector<double> error_curve(const BlockAccumulator& acc, ErrorReference ref) {
  const std::size_t blocks = acc.complete_blocks();
  std::vector<double> curve;
  curve.reserve(blocks);
  const std::complex<double> total = acc.reference_prefix(blocks);
  for (std::size_t k = 1; k <= blocks; ++k) {
    const std::complex<double> r = ref == ErrorReference::Total ? total : acc.reference_prefix(k);
    if (std::abs(r) == 0.0) throw Error("precision", "reference sum has zero magnitude");
    curve.push_back(std::abs(acc.mixed_prefix(k) - r) / std::abs(r));
  }
  return curve;
}

double least_squares_slope(const std::vector<double>& y) {
  const auto n = static_cast<double>(y.size());
  if (y.size() < 2) return 0.0;
  const double xbar = (n - 1.0) / 2.0;
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dx = static_cast<double>(i) - xbar;
    sxy += dx * (y[i] - ybar);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

void write_error_curve_csv(std::ostream& out, const std::vector<double>& curve, const std::string& manifest) {
  if (!manifest.empty()) out << "# manifest " << manifest << '\n';
  out << "block_index,relative_error\n";
  out.precision(17);
  for (std::size_t i = 0; i < curve.size(); ++i) out << i << ',' << curve[i] << '\n';
}

}  // namespace rqcsim
