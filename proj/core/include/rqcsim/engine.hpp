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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rqcsim/common.hpp"

namespace rqcsim {

enum class Precision : std::uint8_t { Single = 0, HalfStored = 1 };

/// Dense row-major complex tensor; the first index varies slowest. The
/// logical value of element i is data()[i] * 2^scale_exp().
template <typename Real>
class Tensor {
 public:
  using value_type = std::complex<Real>;

  Tensor() : data_(1, value_type{}) {}
  Tensor(std::vector<IndexId> indices, std::vector<std::int64_t> dims);
  Tensor(std::vector<IndexId> indices, std::vector<std::int64_t> dims, std::vector<value_type> data);

  static Tensor scalar(value_type v) {
    Tensor t;
    t.data_[0] = v;
    return t;
  }

  [[nodiscard]] int rank() const noexcept { return static_cast<int>(dims_.size()); }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] const std::vector<std::int64_t>& dims() const noexcept { return dims_; }
  [[nodiscard]] std::int64_t dim(int axis) const { return dims_.at(static_cast<std::size_t>(axis)); }
  [[nodiscard]] const std::vector<IndexId>& indices() const noexcept { return indices_; }
  [[nodiscard]] std::span<const value_type> data() const noexcept { return data_; }
  [[nodiscard]] std::span<value_type> data() noexcept { return data_; }
  [[nodiscard]] std::vector<std::int64_t> strides() const;
  /// Axis holding `id`, or -1.
  [[nodiscard]] int axis_of(IndexId id) const noexcept;

  [[nodiscard]] Precision precision() const noexcept { return precision_; }
  void set_precision(Precision p) noexcept { precision_ = p; }
  [[nodiscard]] int scale_exp() const noexcept { return scale_exp_; }
  void set_scale_exp(int e) noexcept { scale_exp_ = e; }

  [[nodiscard]] value_type logical(std::size_t i) const;

  /// Replaces labels and shape without touching data; sizes must agree.
  void reshape(std::vector<IndexId> indices, std::vector<std::int64_t> dims);

  template <typename Other>
  [[nodiscard]] Tensor<Other> cast() const {
    std::vector<std::complex<Other>> d(data_.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = {static_cast<Other>(data_[i].real()), static_cast<Other>(data_[i].imag())};
    }
    Tensor<Other> out(indices_, dims_, std::move(d));
    out.set_precision(precision_);
    out.set_scale_exp(scale_exp_);
    return out;
  }

 private:
  std::vector<IndexId> indices_;
  std::vector<std::int64_t> dims_;
  std::vector<value_type> data_;
  Precision precision_ = Precision::Single;
  int scale_exp_ = 0;
};

using DenseTensor = Tensor<float>;
using TensorD = Tensor<double>;

/// Running count of real floating-point operations: 8 per complex
/// multiply-add. Permutations add nothing.
class FlopCounter {
 public:
  void add(std::uint64_t flops) noexcept { total_ += flops; }
  [[nodiscard]] std::uint64_t total() const noexcept { return total_; }
  void reset() noexcept { total_ = 0; }

 private:
  std::uint64_t total_ = 0;
};

/// New axis j of the result is old axis perm[j].
template <typename Real>
[[nodiscard]] Tensor<Real> permute(const Tensor<Real>& t, std::span<const int> perm);

/// Result with axes reordered to follow `order` (labels of t).
template <typename Real>
[[nodiscard]] Tensor<Real> permute_to(const Tensor<Real>& t, std::span<const IndexId> order);

/// Fixes the listed indices to values and drops them (a copy of the slice).
template <typename Real>
[[nodiscard]] Tensor<Real> restrict_indices(const Tensor<Real>& t,
                                            std::span<const std::pair<IndexId, std::int64_t>> pins);

struct OutputLeg {
  enum class Source : std::uint8_t { A, B };
  Source source = Source::A;
  int axis = 0;
  friend bool operator==(const OutputLeg&, const OutputLeg&) = default;
};

/// Pairwise contraction description. `contracted` axes are summed; `batch`
/// axes are shared but kept (hyperedges), appearing once in the output via
/// their A axis. Output is every free axis of A and B plus the batch axes,
/// in `output` order.
struct ContractionSpec {
  std::vector<std::pair<int, int>> contracted;
  std::vector<std::pair<int, int>> batch;
  std::vector<OutputLeg> output;

  /// Shared labels present in `out` become batch axes, other shared labels
  /// are contracted; every unshared label must be in `out`.
  static ContractionSpec from_labels(std::span<const IndexId> a, std::span<const IndexId> b,
                                     std::span<const IndexId> out);
};

/// 8 * prod(output dims) * prod(contracted dims)
[[nodiscard]] std::uint64_t contraction_flops(std::span<const std::int64_t> a_dims,
                                              std::span<const std::int64_t> b_dims,
                                              const ContractionSpec& spec);

/// Direct nested-loop contraction, accumulating in double. Correctness oracle.
template <typename Real>
[[nodiscard]] Tensor<Real> contract_pair_naive(const Tensor<Real>& a, const Tensor<Real>& b,
                                               const ContractionSpec& spec,
                                               FlopCounter* flops = nullptr);

/// Default scratch budget for one fused contraction block (bytes).
inline constexpr std::size_t kDefaultScratchBytes = 256 * 1024;

struct TtgtOptions {
  std::size_t scratch_bytes = kDefaultScratchBytes;
};

/// Fused transpose-transpose-GEMM-transpose contraction. The smaller operand
/// is permuted once; blocks of the larger one are gathered into scratch
/// through precomputed position arrays, multiplied, and written straight into
/// the output order.
template <typename Real>
[[nodiscard]] Tensor<Real> contract_pair_ttgt(const Tensor<Real>& a, const Tensor<Real>& b,
                                              const ContractionSpec& spec,
                                              FlopCounter* flops = nullptr,
                                              const TtgtOptions& options = {});

/// Baseline that materializes full permutations of both operands, runs one
/// GEMM per batch element and permutes the product into output order.
template <typename Real>
[[nodiscard]] Tensor<Real> contract_pair_unfused(const Tensor<Real>& a, const Tensor<Real>& b,
                                                 const ContractionSpec& spec,
                                                 FlopCounter* flops = nullptr);

template <typename Real>
struct Matrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::complex<Real>> data;  // row-major

  Matrix() = default;
  Matrix(std::int64_t r, std::int64_t c) : rows(r), cols(c), data(static_cast<std::size_t>(r * c)) {}
  std::complex<Real>& operator()(std::int64_t i, std::int64_t j) {
    return data[static_cast<std::size_t>(i * cols + j)];
  }
  const std::complex<Real>& operator()(std::int64_t i, std::int64_t j) const {
    return data[static_cast<std::size_t>(i * cols + j)];
  }
};

/// Cache-blocked complex matrix product; counts 8*M*N*K flops.
template <typename Real>
[[nodiscard]] Matrix<Real> gemm(const Matrix<Real>& a, const Matrix<Real>& b,
                                FlopCounter* flops = nullptr);

namespace kernels {
/// c[m x n] += a[m x k] * b[k x n] with leading dimensions lda, ldb, ldc
/// (in complex elements).
template <typename Real>
void gemm_accumulate(std::int64_t m, std::int64_t n, std::int64_t k, const std::complex<Real>* a,
                     std::int64_t lda, const std::complex<Real>* b, std::int64_t ldb,
                     std::complex<Real>* c, std::int64_t ldc) noexcept;
}  // namespace kernels

/// A pairwise contraction with its operands, for benchmarks.
struct ContractionCase {
  std::string name;
  DenseTensor a;
  DenseTensor b;
  ContractionSpec spec;
};

/// Imbalanced cases: a large operand against a small one, shared axes
/// scattered through the large operand and a permuted output order. The
/// operands hold standard normal entries drawn from `seed`.
[[nodiscard]] std::vector<ContractionCase> imbalanced_contraction_suite(std::uint64_t seed = 1);

/// Binary dump: u32 rank, u64 dims[rank], u8 precision, i32 scale_exp, then
/// little-endian float32 (re, im) pairs.
void write_tensor_dump(std::ostream& out, const DenseTensor& t);
[[nodiscard]] DenseTensor read_tensor_dump(std::istream& in);

}  // namespace rqcsim
