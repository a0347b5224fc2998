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

#include "rqcsim/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

namespace rqcsim {

namespace {

std::int64_t product(std::span<const std::int64_t> dims) {
  std::int64_t p = 1;
  for (auto d : dims) p *= d;
  return p;
}

std::vector<std::int64_t> row_major_strides(std::span<const std::int64_t> dims) {
  std::vector<std::int64_t> s(dims.size());
  std::int64_t acc = 1;
  for (std::size_t i = dims.size(); i-- > 0;) {
    s[i] = acc;
    acc *= dims[i];
  }
  return s;
}

/// Offsets of every multi-index over `dims` (row-major enumeration) under
/// `strides`. This is the position array used to gather and scatter blocks.
std::vector<std::int64_t> position_array(std::span<const std::int64_t> dims,
                                         std::span<const std::int64_t> strides) {
  const std::int64_t total = product(dims);
  std::vector<std::int64_t> pos(static_cast<std::size_t>(total));
  std::vector<std::int64_t> counter(dims.size(), 0);
  std::int64_t off = 0;
  for (std::int64_t i = 0; i < total; ++i) {
    pos[static_cast<std::size_t>(i)] = off;
    for (std::size_t ax = dims.size(); ax-- > 0;) {
      if (++counter[ax] < dims[ax]) {
        off += strides[ax];
        break;
      }
      off -= strides[ax] * (dims[ax] - 1);
      counter[ax] = 0;
    }
  }
  return pos;
}

struct SpecLayout {
  std::vector<IndexId> out_indices;
  std::vector<std::int64_t> out_dims;
  std::vector<int> batch_b_of_a;  // per A axis: paired B axis if batch, else -1
};

SpecLayout check_spec(const std::vector<IndexId>& a_idx, std::span<const std::int64_t> a_dims,
                      const std::vector<IndexId>& b_idx, std::span<const std::int64_t> b_dims,
                      const ContractionSpec& spec) {
  const int ra = static_cast<int>(a_dims.size());
  const int rb = static_cast<int>(b_dims.size());
  std::vector<int> a_role(static_cast<std::size_t>(ra), 0);  // 0 free, 1 contracted, 2 batch
  std::vector<int> b_role(static_cast<std::size_t>(rb), 0);
  SpecLayout layout;
  layout.batch_b_of_a.assign(static_cast<std::size_t>(ra), -1);
  auto mark = [&](const std::vector<std::pair<int, int>>& pairs, int role) {
    for (auto [pa, pb] : pairs) {
      if (pa < 0 || pa >= ra || pb < 0 || pb >= rb) throw Error("engine", "contraction axis out of range");
      if (a_role[static_cast<std::size_t>(pa)] || b_role[static_cast<std::size_t>(pb)]) {
        throw Error("engine", "axis paired twice in contraction spec");
      }
      if (a_dims[static_cast<std::size_t>(pa)] != b_dims[static_cast<std::size_t>(pb)]) {
        throw Error("engine", "dim mismatch on paired axes (" + std::to_string(a_dims[static_cast<std::size_t>(pa)]) +
                                  " vs " + std::to_string(b_dims[static_cast<std::size_t>(pb)]) + ")");
      }
      a_role[static_cast<std::size_t>(pa)] = role;
      b_role[static_cast<std::size_t>(pb)] = role;
      if (role == 2) layout.batch_b_of_a[static_cast<std::size_t>(pa)] = pb;
    }
  };
  mark(spec.contracted, 1);
  mark(spec.batch, 2);

  std::vector<char> a_used(static_cast<std::size_t>(ra), 0), b_used(static_cast<std::size_t>(rb), 0);
  for (const auto& leg : spec.output) {
    if (leg.source == OutputLeg::Source::A) {
      if (leg.axis < 0 || leg.axis >= ra) throw Error("engine", "output leg out of range");
      auto& used = a_used[static_cast<std::size_t>(leg.axis)];
      if (used || a_role[static_cast<std::size_t>(leg.axis)] == 1) throw Error("engine", "invalid output leg");
      used = 1;
      layout.out_indices.push_back(a_idx.empty() ? IndexId{} : a_idx[static_cast<std::size_t>(leg.axis)]);
      layout.out_dims.push_back(a_dims[static_cast<std::size_t>(leg.axis)]);
    } else {
      if (leg.axis < 0 || leg.axis >= rb) throw Error("engine", "output leg out of range");
      auto& used = b_used[static_cast<std::size_t>(leg.axis)];
      if (used || b_role[static_cast<std::size_t>(leg.axis)] != 0) throw Error("engine", "invalid output leg");
      used = 1;
      layout.out_indices.push_back(b_idx.empty() ? IndexId{} : b_idx[static_cast<std::size_t>(leg.axis)]);
      layout.out_dims.push_back(b_dims[static_cast<std::size_t>(leg.axis)]);
    }
  }
  for (int i = 0; i < ra; ++i) {
    if (a_role[static_cast<std::size_t>(i)] != 1 && !a_used[static_cast<std::size_t>(i)]) {
      throw Error("engine", "output order misses a surviving axis of A");
    }
  }
  for (int i = 0; i < rb; ++i) {
    if (b_role[static_cast<std::size_t>(i)] == 0 && !b_used[static_cast<std::size_t>(i)]) {
      throw Error("engine", "output order misses a surviving axis of B");
    }
  }
  return layout;
}

template <typename Real>
struct Blocking {
  std::int64_t mb, nb, kb;
};

template <typename Real>
Blocking<Real> choose_blocking(std::int64_t m, std::int64_t n, std::int64_t k, std::size_t scratch_bytes) {
  const auto budget = static_cast<std::int64_t>(scratch_bytes / sizeof(std::complex<Real>));
  std::int64_t nb = std::min<std::int64_t>(n, 128);
  std::int64_t kb = std::min<std::int64_t>(k, 128);
  while (kb * nb + kb + nb > budget && (kb > 1 || nb > 1)) {
    if (kb >= nb) {
      kb = (kb + 1) / 2;
    } else {
      nb = (nb + 1) / 2;
    }
  }
  if (kb * nb + kb + nb > budget) {
    throw Error("engine", "scratch block of " + std::to_string(scratch_bytes) +
                              " bytes is below one GEMM tile");
  }
  const std::int64_t mb = std::clamp<std::int64_t>((budget - kb * nb) / (kb + nb), 1, std::max<std::int64_t>(m, 1));
  return {mb, nb, kb};
}

template <typename Real>
void gemm_blocked(std::int64_t m, std::int64_t n, std::int64_t k, const std::complex<Real>* a, std::int64_t lda,
                  const std::complex<Real>* b, std::int64_t ldb, std::complex<Real>* c, std::int64_t ldc) {
  const auto blk = choose_blocking<Real>(m, n, k, kDefaultScratchBytes);
  for (std::int64_t k0 = 0; k0 < k; k0 += blk.kb) {
    const std::int64_t kk = std::min(blk.kb, k - k0);
    for (std::int64_t m0 = 0; m0 < m; m0 += blk.mb) {
      const std::int64_t mm = std::min(blk.mb, m - m0);
      for (std::int64_t n0 = 0; n0 < n; n0 += blk.nb) {
        const std::int64_t nn = std::min(blk.nb, n - n0);
        kernels::gemm_accumulate<Real>(mm, nn, kk, a + m0 * lda + k0, lda, b + k0 * ldb + n0, ldb,
                                       c + m0 * ldc + n0, ldc);
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- Tensor

template <typename Real>
Tensor<Real>::Tensor(std::vector<IndexId> indices, std::vector<std::int64_t> dims)
    : indices_(std::move(indices)), dims_(std::move(dims)) {
  if (indices_.size() != dims_.size()) throw Error("engine", "index list and dims differ in length");
  for (auto d : dims_) {
    if (d < 1) throw Error("engine", "tensor dims must be positive");
  }
  data_.assign(static_cast<std::size_t>(product(dims_)), value_type{});
}

template <typename Real>
Tensor<Real>::Tensor(std::vector<IndexId> indices, std::vector<std::int64_t> dims, std::vector<value_type> data)
    : indices_(std::move(indices)), dims_(std::move(dims)), data_(std::move(data)) {
  if (indices_.size() != dims_.size()) throw Error("engine", "index list and dims differ in length");
  if (static_cast<std::int64_t>(data_.size()) != product(dims_)) {
    throw Error("engine", "data length does not match the tensor shape");
  }
}

template <typename Real>
std::vector<std::int64_t> Tensor<Real>::strides() const {
  return row_major_strides(dims_);
}

template <typename Real>
int Tensor<Real>::axis_of(IndexId id) const noexcept {
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] == id) return static_cast<int>(i);
  }
  return -1;
}

template <typename Real>
typename Tensor<Real>::value_type Tensor<Real>::logical(std::size_t i) const {
  const auto v = data_[i];
  if (scale_exp_ == 0) return v;
  return {std::ldexp(v.real(), scale_exp_), std::ldexp(v.imag(), scale_exp_)};
}

template <typename Real>
void Tensor<Real>::reshape(std::vector<IndexId> indices, std::vector<std::int64_t> dims) {
  if (indices.size() != dims.size() || product(dims) != static_cast<std::int64_t>(data_.size())) {
    throw Error("engine", "reshape changes the element count");
  }
  indices_ = std::move(indices);
  dims_ = std::move(dims);
}

// ---------------------------------------------------------------- permute

template <typename Real>
Tensor<Real> permute(const Tensor<Real>& t, std::span<const int> perm) {
  const int r = t.rank();
  if (static_cast<int>(perm.size()) != r) throw Error("engine", "permutation has the wrong length");
  std::vector<char> seen(static_cast<std::size_t>(r), 0);
  for (int p : perm) {
    if (p < 0 || p >= r || seen[static_cast<std::size_t>(p)]) throw Error("engine", "invalid permutation");
    seen[static_cast<std::size_t>(p)] = 1;
  }
  std::vector<IndexId> idx(static_cast<std::size_t>(r));
  std::vector<std::int64_t> dims(static_cast<std::size_t>(r));
  std::vector<std::int64_t> in_strides(static_cast<std::size_t>(r));
  const auto src_strides = t.strides();
  for (int j = 0; j < r; ++j) {
    const auto p = static_cast<std::size_t>(perm[static_cast<std::size_t>(j)]);
    idx[static_cast<std::size_t>(j)] = t.indices().empty() ? IndexId{} : t.indices()[p];
    dims[static_cast<std::size_t>(j)] = t.dims()[p];
    in_strides[static_cast<std::size_t>(j)] = src_strides[p];
  }
  Tensor<Real> out(std::move(idx), dims);
  out.set_precision(t.precision());
  out.set_scale_exp(t.scale_exp());
  if (r == 0) {
    out.data()[0] = t.data()[0];
    return out;
  }
  const auto src = t.data();
  auto dst = out.data();
  // Innermost output axis is streamed; the rest walk an odometer.
  const std::int64_t inner = dims.back();
  const std::int64_t inner_stride = in_strides.back();
  std::vector<std::int64_t> counter(static_cast<std::size_t>(r - 1), 0);
  std::int64_t off = 0;
  const std::size_t total = dst.size();
  for (std::size_t o = 0; o < total; o += static_cast<std::size_t>(inner)) {
    for (std::int64_t x = 0; x < inner; ++x) dst[o + static_cast<std::size_t>(x)] = src[static_cast<std::size_t>(off + x * inner_stride)];
    for (int ax = r - 2; ax >= 0; --ax) {
      const auto a = static_cast<std::size_t>(ax);
      if (++counter[a] < dims[a]) {
        off += in_strides[a];
        break;
      }
      off -= in_strides[a] * (dims[a] - 1);
      counter[a] = 0;
    }
  }
  return out;
}

template <typename Real>
Tensor<Real> permute_to(const Tensor<Real>& t, std::span<const IndexId> order) {
  std::vector<int> perm;
  perm.reserve(order.size());
  for (IndexId id : order) {
    const int ax = t.axis_of(id);
    if (ax < 0) throw Error("engine", "permute_to: unknown index label");
    perm.push_back(ax);
  }
  return permute(t, perm);
}

template <typename Real>
Tensor<Real> restrict_indices(const Tensor<Real>& t, std::span<const std::pair<IndexId, std::int64_t>> pins) {
  const auto strides = t.strides();
  std::int64_t base = 0;
  std::vector<char> pinned(static_cast<std::size_t>(t.rank()), 0);
  for (auto [id, value] : pins) {
    const int ax = t.axis_of(id);
    if (ax < 0) continue;
    if (value < 0 || value >= t.dims()[static_cast<std::size_t>(ax)]) throw Error("engine", "slice value out of range");
    base += value * strides[static_cast<std::size_t>(ax)];
    pinned[static_cast<std::size_t>(ax)] = 1;
  }
  std::vector<IndexId> idx;
  std::vector<std::int64_t> dims, kept_strides;
  for (int ax = 0; ax < t.rank(); ++ax) {
    if (pinned[static_cast<std::size_t>(ax)]) continue;
    idx.push_back(t.indices()[static_cast<std::size_t>(ax)]);
    dims.push_back(t.dims()[static_cast<std::size_t>(ax)]);
    kept_strides.push_back(strides[static_cast<std::size_t>(ax)]);
  }
  Tensor<Real> out(std::move(idx), dims);
  out.set_precision(t.precision());
  out.set_scale_exp(t.scale_exp());
  const auto pos = position_array(dims, kept_strides);
  auto dst = out.data();
  const auto src = t.data();
  for (std::size_t i = 0; i < pos.size(); ++i) dst[i] = src[static_cast<std::size_t>(base + pos[i])];
  return out;
}

// ---------------------------------------------------------------- spec

ContractionSpec ContractionSpec::from_labels(std::span<const IndexId> a, std::span<const IndexId> b,
                                             std::span<const IndexId> out) {
  auto find = [](std::span<const IndexId> v, IndexId id) -> int {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == id) return static_cast<int>(i);
    }
    return -1;
  };
  ContractionSpec spec;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int j = find(b, a[i]);
    if (j < 0) continue;
    if (find(out, a[i]) >= 0) {
      spec.batch.emplace_back(static_cast<int>(i), j);
    } else {
      spec.contracted.emplace_back(static_cast<int>(i), j);
    }
  }
  for (IndexId id : out) {
    const int ia = find(a, id);
    if (ia >= 0) {
      spec.output.push_back({OutputLeg::Source::A, ia});
      continue;
    }
    const int ib = find(b, id);
    if (ib < 0) throw Error("engine", "output label absent from both operands");
    spec.output.push_back({OutputLeg::Source::B, ib});
  }
  return spec;
}

std::uint64_t contraction_flops(std::span<const std::int64_t> a_dims, std::span<const std::int64_t> b_dims,
                                const ContractionSpec& spec) {
  std::uint64_t f = 8;
  for (const auto& leg : spec.output) {
    f *= static_cast<std::uint64_t>(leg.source == OutputLeg::Source::A ? a_dims[static_cast<std::size_t>(leg.axis)]
                                                                       : b_dims[static_cast<std::size_t>(leg.axis)]);
  }
  for (auto [pa, pb] : spec.contracted) {
    (void)pb;
    f *= static_cast<std::uint64_t>(a_dims[static_cast<std::size_t>(pa)]);
  }
  return f;
}

// ---------------------------------------------------------------- naive

template <typename Real>
Tensor<Real> contract_pair_naive(const Tensor<Real>& a, const Tensor<Real>& b, const ContractionSpec& spec,
                                 FlopCounter* flops) {
  const auto layout = check_spec(a.indices(), a.dims(), b.indices(), b.dims(), spec);
  const auto as = a.strides();
  const auto bs = b.strides();
  const std::size_t ro = spec.output.size();
  std::vector<std::int64_t> oa(ro, 0), ob(ro, 0);
  for (std::size_t j = 0; j < ro; ++j) {
    const auto& leg = spec.output[j];
    if (leg.source == OutputLeg::Source::A) {
      oa[j] = as[static_cast<std::size_t>(leg.axis)];
      const int pb = layout.batch_b_of_a[static_cast<std::size_t>(leg.axis)];
      if (pb >= 0) ob[j] = bs[static_cast<std::size_t>(pb)];
    } else {
      ob[j] = bs[static_cast<std::size_t>(leg.axis)];
    }
  }
  std::vector<std::int64_t> cdims, ca, cb;
  for (auto [pa, pb] : spec.contracted) {
    cdims.push_back(a.dims()[static_cast<std::size_t>(pa)]);
    ca.push_back(as[static_cast<std::size_t>(pa)]);
    cb.push_back(bs[static_cast<std::size_t>(pb)]);
  }
  const auto out_a = position_array(layout.out_dims, oa);
  const auto out_b = position_array(layout.out_dims, ob);
  const auto con_a = position_array(cdims, ca);
  const auto con_b = position_array(cdims, cb);

  Tensor<Real> out(layout.out_indices, layout.out_dims);
  out.set_scale_exp(a.scale_exp() + b.scale_exp());
  const auto ad = a.data();
  const auto bd = b.data();
  auto od = out.data();
  for (std::size_t o = 0; o < od.size(); ++o) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < con_a.size(); ++k) {
      const auto x = ad[static_cast<std::size_t>(out_a[o] + con_a[k])];
      const auto y = bd[static_cast<std::size_t>(out_b[o] + con_b[k])];
      acc += std::complex<double>(x.real(), x.imag()) * std::complex<double>(y.real(), y.imag());
    }
    od[o] = {static_cast<Real>(acc.real()), static_cast<Real>(acc.imag())};
  }
  if (flops) flops->add(contraction_flops(a.dims(), b.dims(), spec));
  return out;
}

// ---------------------------------------------------------------- fused TTGT

template <typename Real>
Tensor<Real> contract_pair_ttgt(const Tensor<Real>& a, const Tensor<Real>& b, const ContractionSpec& spec,
                                FlopCounter* flops, const TtgtOptions& options) {
  const auto layout = check_spec(a.indices(), a.dims(), b.indices(), b.dims(), spec);
  const bool a_is_big = a.size() >= b.size();
  const Tensor<Real>& x = a_is_big ? a : b;  // streamed operand
  const Tensor<Real>& y = a_is_big ? b : a;  // permuted once
  const auto xs = x.strides();

  enum class Kind { FX, FY, H };
  struct Leg {
    Kind kind;
    int x_axis;
    int y_axis;
    std::int64_t dim;
  };
  std::vector<Leg> legs;
  legs.reserve(spec.output.size());
  for (std::size_t j = 0; j < spec.output.size(); ++j) {
    const auto& leg = spec.output[j];
    const bool from_a = leg.source == OutputLeg::Source::A;
    const int batch_pair = from_a ? layout.batch_b_of_a[static_cast<std::size_t>(leg.axis)] : -1;
    const std::int64_t dim = layout.out_dims[j];
    if (batch_pair >= 0) {
      legs.push_back({Kind::H, a_is_big ? leg.axis : batch_pair, a_is_big ? batch_pair : leg.axis, dim});
    } else if (from_a == a_is_big) {
      legs.push_back({Kind::FX, leg.axis, -1, dim});
    } else {
      legs.push_back({Kind::FY, -1, leg.axis, dim});
    }
  }
  std::vector<std::pair<int, int>> con;  // (x axis, y axis)
  for (auto [pa, pb] : spec.contracted) con.emplace_back(a_is_big ? pa : pb, a_is_big ? pb : pa);

  // Output legs up to the last batch leg are iterated outside the GEMM.
  std::size_t split = 0;
  for (std::size_t j = 0; j < legs.size(); ++j) {
    if (legs[j].kind == Kind::H) split = j + 1;
  }

  // Permute Y to [outer Y legs | contracted | inner Y legs].
  std::vector<int> yperm;
  for (std::size_t j = 0; j < split; ++j) {
    if (legs[j].kind != Kind::FX) yperm.push_back(legs[j].y_axis);
  }
  const std::size_t y_outer_count = yperm.size();
  for (auto [xa, ya] : con) {
    (void)xa;
    yperm.push_back(ya);
  }
  std::vector<std::int64_t> inner_x_dims, inner_x_xstr, inner_y_dims;
  std::vector<std::int64_t> c_row_dims, c_col_dims;
  for (std::size_t j = split; j < legs.size(); ++j) {
    if (legs[j].kind == Kind::FY) {
      yperm.push_back(legs[j].y_axis);
      inner_y_dims.push_back(legs[j].dim);
    } else {
      inner_x_dims.push_back(legs[j].dim);
      inner_x_xstr.push_back(xs[static_cast<std::size_t>(legs[j].x_axis)]);
    }
  }
  const Tensor<Real> yp = permute(y, yperm);
  const auto yps = yp.strides();

  Tensor<Real> out(layout.out_indices, layout.out_dims);
  out.set_scale_exp(a.scale_exp() + b.scale_exp());
  const auto cs = out.strides();

  std::vector<std::int64_t> c_row_str, c_col_str;
  for (std::size_t j = split; j < legs.size(); ++j) {
    if (legs[j].kind == Kind::FY) {
      c_col_str.push_back(cs[j]);
    } else {
      c_row_str.push_back(cs[j]);
    }
  }
  std::vector<std::int64_t> con_dims, con_xstr;
  for (auto [xa, ya] : con) {
    (void)ya;
    con_dims.push_back(x.dims()[static_cast<std::size_t>(xa)]);
    con_xstr.push_back(xs[static_cast<std::size_t>(xa)]);
  }

  const std::int64_t m = product(inner_x_dims);
  const std::int64_t n = product(inner_y_dims);
  const std::int64_t k = product(con_dims);
  const auto row_off = position_array(inner_x_dims, inner_x_xstr);
  const auto col_off = position_array(con_dims, con_xstr);
  const auto c_row = position_array(inner_x_dims, c_row_str);
  const auto c_col = position_array(inner_y_dims, c_col_str);

  std::vector<std::int64_t> outer_dims, outer_x, outer_y, outer_c;
  {
    std::size_t yo = 0;
    for (std::size_t j = 0; j < split; ++j) {
      outer_dims.push_back(legs[j].dim);
      outer_c.push_back(cs[j]);
      outer_x.push_back(legs[j].kind == Kind::FY ? 0 : xs[static_cast<std::size_t>(legs[j].x_axis)]);
      outer_y.push_back(legs[j].kind == Kind::FX ? 0 : yps[yo++]);
    }
    (void)y_outer_count;
  }
  const auto ox = position_array(outer_dims, outer_x);
  const auto oy = position_array(outer_dims, outer_y);
  const auto oc = position_array(outer_dims, outer_c);

  const auto blk = choose_blocking<Real>(m, n, k, options.scratch_bytes);
  std::vector<std::complex<Real>> xblk(static_cast<std::size_t>(blk.mb * blk.kb));
  std::vector<std::complex<Real>> tile(static_cast<std::size_t>(blk.mb * blk.nb));
  const auto* xd = x.data().data();
  const auto* yd = yp.data().data();
  auto* cd = out.data().data();

  for (std::size_t o = 0; o < ox.size(); ++o) {
    const std::int64_t xbase = ox[o];
    const std::complex<Real>* ymat = yd + oy[o];
    const std::int64_t cbase = oc[o];
    for (std::int64_t m0 = 0; m0 < m; m0 += blk.mb) {
      const std::int64_t mm = std::min(blk.mb, m - m0);
      for (std::int64_t n0 = 0; n0 < n; n0 += blk.nb) {
        const std::int64_t nn = std::min(blk.nb, n - n0);
        std::fill(tile.begin(), tile.end(), std::complex<Real>{});
        for (std::int64_t k0 = 0; k0 < k; k0 += blk.kb) {
          const std::int64_t kk = std::min(blk.kb, k - k0);
          for (std::int64_t i = 0; i < mm; ++i) {
            const std::int64_t rbase = xbase + row_off[static_cast<std::size_t>(m0 + i)];
            auto* dst = xblk.data() + i * kk;
            for (std::int64_t p = 0; p < kk; ++p) dst[p] = xd[rbase + col_off[static_cast<std::size_t>(k0 + p)]];
          }
          kernels::gemm_accumulate<Real>(mm, nn, kk, xblk.data(), kk, ymat + k0 * n + n0, n, tile.data(), nn);
        }
        for (std::int64_t i = 0; i < mm; ++i) {
          const std::int64_t rbase = cbase + c_row[static_cast<std::size_t>(m0 + i)];
          const auto* src = tile.data() + i * nn;
          for (std::int64_t j = 0; j < nn; ++j) cd[rbase + c_col[static_cast<std::size_t>(n0 + j)]] = src[j];
        }
      }
    }
  }
  if (flops) flops->add(contraction_flops(a.dims(), b.dims(), spec));
  return out;
}

// ---------------------------------------------------------------- unfused baseline

template <typename Real>
Tensor<Real> contract_pair_unfused(const Tensor<Real>& a, const Tensor<Real>& b, const ContractionSpec& spec,
                                   FlopCounter* flops) {
  const auto layout = check_spec(a.indices(), a.dims(), b.indices(), b.dims(), spec);
  std::vector<int> aperm, bperm;
  std::vector<std::int64_t> hdims, fa_dims, fb_dims;
  std::vector<int> out_pos_h, out_pos_fa, out_pos_fb;
  for (std::size_t j = 0; j < spec.output.size(); ++j) {
    const auto& leg = spec.output[j];
    if (leg.source == OutputLeg::Source::A && layout.batch_b_of_a[static_cast<std::size_t>(leg.axis)] >= 0) {
      aperm.push_back(leg.axis);
      bperm.push_back(layout.batch_b_of_a[static_cast<std::size_t>(leg.axis)]);
      hdims.push_back(layout.out_dims[j]);
      out_pos_h.push_back(static_cast<int>(j));
    }
  }
  for (std::size_t j = 0; j < spec.output.size(); ++j) {
    const auto& leg = spec.output[j];
    if (leg.source == OutputLeg::Source::A && layout.batch_b_of_a[static_cast<std::size_t>(leg.axis)] < 0) {
      aperm.push_back(leg.axis);
      fa_dims.push_back(layout.out_dims[j]);
      out_pos_fa.push_back(static_cast<int>(j));
    }
  }
  std::vector<std::int64_t> cdims;
  for (auto [pa, pb] : spec.contracted) {
    aperm.push_back(pa);
    cdims.push_back(a.dims()[static_cast<std::size_t>(pa)]);
    bperm.push_back(pb);
  }
  for (std::size_t j = 0; j < spec.output.size(); ++j) {
    const auto& leg = spec.output[j];
    if (leg.source == OutputLeg::Source::B) {
      bperm.push_back(leg.axis);
      fb_dims.push_back(layout.out_dims[j]);
      out_pos_fb.push_back(static_cast<int>(j));
    }
  }
  const Tensor<Real> ap = permute(a, aperm);
  const Tensor<Real> bp = permute(b, bperm);
  const std::int64_t hcount = product(hdims);
  const std::int64_t m = product(fa_dims), n = product(fb_dims), k = product(cdims);

  // Product in [h | fa | fb] order, then one permutation into output order.
  std::vector<std::int64_t> mid_dims = hdims;
  mid_dims.insert(mid_dims.end(), fa_dims.begin(), fa_dims.end());
  mid_dims.insert(mid_dims.end(), fb_dims.begin(), fb_dims.end());
  std::vector<IndexId> mid_idx;
  std::vector<int> mid_from_out;
  for (int p : out_pos_h) mid_from_out.push_back(p);
  for (int p : out_pos_fa) mid_from_out.push_back(p);
  for (int p : out_pos_fb) mid_from_out.push_back(p);
  for (int p : mid_from_out) mid_idx.push_back(make_index(p));
  Tensor<Real> mid(mid_idx, mid_dims);
  for (std::int64_t h = 0; h < hcount; ++h) {
    gemm_blocked<Real>(m, n, k, ap.data().data() + h * m * k, k, bp.data().data() + h * k * n, n,
                       mid.data().data() + h * m * n, n);
  }
  std::vector<IndexId> order;
  for (std::size_t j = 0; j < spec.output.size(); ++j) order.push_back(make_index(static_cast<int>(j)));
  Tensor<Real> out = permute_to(mid, std::span<const IndexId>(order));
  out.reshape(layout.out_indices, layout.out_dims);
  out.set_scale_exp(a.scale_exp() + b.scale_exp());
  if (flops) flops->add(contraction_flops(a.dims(), b.dims(), spec));
  return out;
}

// ---------------------------------------------------------------- gemm

namespace kernels {

template <typename Real>
void gemm_accumulate(std::int64_t m, std::int64_t n, std::int64_t k, const std::complex<Real>* a, std::int64_t lda,
                     const std::complex<Real>* b, std::int64_t ldb, std::complex<Real>* c,
                     std::int64_t ldc) noexcept {
  // Two-level summation: partial sums over K chunks, then into C. Serial
  // float accumulation over K ~ 2^20 loses about 1e-4 relative.
  constexpr std::int64_t kChunk = 1024;
  constexpr std::int64_t kTile = 64;
  Real acc[2 * kTile];
  for (std::int64_t i = 0; i < m; ++i) {
    Real* __restrict crow = reinterpret_cast<Real*>(c + i * ldc);
    for (std::int64_t j0 = 0; j0 < n; j0 += kTile) {
      const std::int64_t nn = std::min(kTile, n - j0);
      for (std::int64_t p0 = 0; p0 < k; p0 += kChunk) {
        const std::int64_t pe = std::min(k, p0 + kChunk);
        std::fill(acc, acc + 2 * nn, Real{0});
        for (std::int64_t p = p0; p < pe; ++p) {
          const Real ar = a[i * lda + p].real();
          const Real ai = a[i * lda + p].imag();
          const Real* __restrict brow = reinterpret_cast<const Real*>(b + p * ldb + j0);
          for (std::int64_t j = 0; j < nn; ++j) {
            const Real br = brow[2 * j];
            const Real bi = brow[2 * j + 1];
            acc[2 * j] += ar * br - ai * bi;
            acc[2 * j + 1] += ar * bi + ai * br;
          }
        }
        for (std::int64_t j = 0; j < 2 * nn; ++j) crow[2 * j0 + j] += acc[j];
      }
    }
  }
}

}  // namespace kernels

template <typename Real>
Matrix<Real> gemm(const Matrix<Real>& a, const Matrix<Real>& b, FlopCounter* flops) {
  if (a.cols != b.rows) throw Error("engine", "gemm shape mismatch");
  Matrix<Real> c(a.rows, b.cols);
  gemm_blocked<Real>(a.rows, b.cols, a.cols, a.data.data(), a.cols, b.data.data(), b.cols, c.data.data(), c.cols);
  if (flops) flops->add(8ULL * static_cast<std::uint64_t>(a.rows * b.cols * a.cols));
  return c;
}

// ---------------------------------------------------------------- dump

static_assert(std::endian::native == std::endian::little, "tensor dumps assume a little-endian host");

void write_tensor_dump(std::ostream& out, const DenseTensor& t) {
  const auto rank = static_cast<std::uint32_t>(t.rank());
  out.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
  for (auto d : t.dims()) {
    const auto du = static_cast<std::uint64_t>(d);
    out.write(reinterpret_cast<const char*>(&du), sizeof(du));
  }
  const auto prec = static_cast<std::uint8_t>(t.precision());
  out.write(reinterpret_cast<const char*>(&prec), sizeof(prec));
  const auto se = static_cast<std::int32_t>(t.scale_exp());
  out.write(reinterpret_cast<const char*>(&se), sizeof(se));
  out.write(reinterpret_cast<const char*>(t.data().data()),
            static_cast<std::streamsize>(t.size() * sizeof(std::complex<float>)));
}

DenseTensor read_tensor_dump(std::istream& in) {
  std::uint32_t rank = 0;
  if (!in.read(reinterpret_cast<char*>(&rank), sizeof(rank))) throw Error("engine", "truncated tensor dump");
  if (rank > 64) throw Error("engine", "tensor dump rank is implausible");
  std::vector<std::int64_t> dims(rank);
  std::vector<IndexId> idx(rank);
  for (std::uint32_t i = 0; i < rank; ++i) {
    std::uint64_t d = 0;
    if (!in.read(reinterpret_cast<char*>(&d), sizeof(d))) throw Error("engine", "truncated tensor dump");
    dims[i] = static_cast<std::int64_t>(d);
    idx[i] = make_index(static_cast<std::int32_t>(i));
  }
  std::uint8_t prec = 0;
  std::int32_t se = 0;
  if (!in.read(reinterpret_cast<char*>(&prec), sizeof(prec)) || !in.read(reinterpret_cast<char*>(&se), sizeof(se))) {
    throw Error("engine", "truncated tensor dump");
  }
  if (prec > 1) throw Error("engine", "unknown precision tag in tensor dump");
  DenseTensor t(idx, dims);
  if (!in.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(std::complex<float>)))) {
    throw Error("engine", "truncated tensor dump payload");
  }
  t.set_precision(static_cast<Precision>(prec));
  t.set_scale_exp(se);
  return t;
}

// ---------------------------------------------------------------- benchmark cases

namespace {

DenseTensor normal_tensor(std::vector<IndexId> idx, std::vector<std::int64_t> dims, std::mt19937_64& rng) {
  DenseTensor t(std::move(idx), std::move(dims));
  std::normal_distribution<float> nd;
  for (auto& v : t.data()) v = {nd(rng), nd(rng)};
  return t;
}

std::vector<IndexId> id_range(int lo, int hi) {
  std::vector<IndexId> v;
  for (int i = lo; i < hi; ++i) v.push_back(make_index(i));
  return v;
}

ContractionCase make_case(std::string name, DenseTensor a, DenseTensor b, const std::vector<IndexId>& out) {
  auto spec = ContractionSpec::from_labels(a.indices(), b.indices(), out);
  return {std::move(name), std::move(a), std::move(b), std::move(spec)};
}

}  // namespace

std::vector<ContractionCase> imbalanced_contraction_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ContractionCase> cases;
  auto without = [](std::vector<IndexId> v, std::initializer_list<int> drop) {
    for (int d : drop) v.erase(std::find(v.begin(), v.end(), make_index(d)));
    return v;
  };

  {  // rank 20 x rank 4, two shared axes, B's free axes land mid-output.
    auto a = normal_tensor(id_range(0, 20), std::vector<std::int64_t>(20, 2), rng);
    auto b = normal_tensor({make_index(30), make_index(3), make_index(31), make_index(17)}, {2, 2, 2, 2}, rng);
    auto out = without(id_range(0, 20), {3, 17});
    out.insert(out.begin() + 5, make_index(31));
    out.push_back(make_index(30));
    cases.push_back(make_case("r20_x_r4", std::move(a), std::move(b), out));
  }
  {  // A[a, ..., 21 more] x B[h, a, f, i] with f deep inside A.
    auto a = normal_tensor(id_range(0, 22), std::vector<std::int64_t>(22, 2), rng);
    auto b = normal_tensor({make_index(40), make_index(0), make_index(5), make_index(41)}, {2, 2, 2, 2}, rng);
    auto out = without(id_range(0, 22), {0, 5});
    out.push_back(make_index(40));
    out.push_back(make_index(41));
    cases.push_back(make_case("r22_x_r4_front", std::move(a), std::move(b), out));
  }
  {  // rank 18 x rank 6, three shared axes, output reversed.
    auto a = normal_tensor(id_range(0, 18), std::vector<std::int64_t>(18, 2), rng);
    auto b = normal_tensor({make_index(2), make_index(50), make_index(9), make_index(51), make_index(15), make_index(52)},
                           std::vector<std::int64_t>(6, 2), rng);
    auto out = without(id_range(0, 18), {2, 9, 15});
    out.push_back(make_index(50));
    out.push_back(make_index(51));
    out.push_back(make_index(52));
    std::reverse(out.begin(), out.end());
    cases.push_back(make_case("r18_x_r6_reversed", std::move(a), std::move(b), out));
  }
  {  // rank 7 at dim 8 x rank 3 at dim 8, two shared axes.
    auto a = normal_tensor(id_range(0, 7), std::vector<std::int64_t>(7, 8), rng);
    auto b = normal_tensor({make_index(4), make_index(60), make_index(1)}, {8, 8, 8}, rng);
    const std::vector<IndexId> out{make_index(6), make_index(60), make_index(0), make_index(5), make_index(2),
                                   make_index(3)};
    cases.push_back(make_case("r7d8_x_r3d8", std::move(a), std::move(b), out));
  }
  return cases;
}

// ---------------------------------------------------------------- instantiations

#define RQCSIM_INSTANTIATE(R)                                                                              \
  template class Tensor<R>;                                                                                \
  template Tensor<R> permute<R>(const Tensor<R>&, std::span<const int>);                                   \
  template Tensor<R> permute_to<R>(const Tensor<R>&, std::span<const IndexId>);                            \
  template Tensor<R> restrict_indices<R>(const Tensor<R>&, std::span<const std::pair<IndexId, std::int64_t>>); \
  template Tensor<R> contract_pair_naive<R>(const Tensor<R>&, const Tensor<R>&, const ContractionSpec&,    \
                                            FlopCounter*);                                                 \
  template Tensor<R> contract_pair_ttgt<R>(const Tensor<R>&, const Tensor<R>&, const ContractionSpec&,     \
                                           FlopCounter*, const TtgtOptions&);                              \
  template Tensor<R> contract_pair_unfused<R>(const Tensor<R>&, const Tensor<R>&, const ContractionSpec&,  \
                                              FlopCounter*);                                               \
  template Matrix<R> gemm<R>(const Matrix<R>&, const Matrix<R>&, FlopCounter*);                            \
  template void kernels::gemm_accumulate<R>(std::int64_t, std::int64_t, std::int64_t, const std::complex<R>*, \
                                            std::int64_t, const std::complex<R>*, std::int64_t,           \
                                            std::complex<R>*, std::int64_t) noexcept;

RQCSIM_INSTANTIATE(float)
RQCSIM_INSTANTIATE(double)

#undef RQCSIM_INSTANTIATE

}  // namespace rqcsim
