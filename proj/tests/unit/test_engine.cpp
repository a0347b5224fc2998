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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "rqcsim/engine.hpp"

using namespace rqcsim;

namespace {

DenseTensor random_tensor(std::vector<IndexId> idx, std::vector<std::int64_t> dims, std::mt19937_64& rng) {
  DenseTensor t(std::move(idx), std::move(dims));
  std::normal_distribution<float> nd;
  for (auto& v : t.data()) v = {nd(rng), nd(rng)};
  return t;
}

std::vector<IndexId> labels(std::initializer_list<int> ids) {
  std::vector<IndexId> v;
  for (int i : ids) v.push_back(make_index(i));
  return v;
}

double max_rel_error(const DenseTensor& a, const DenseTensor& b) {
  REQUIRE(a.size() == b.size());
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, static_cast<double>(std::abs(b.data()[i])));
    err = std::max(err, static_cast<double>(std::abs(a.data()[i] - b.data()[i])));
  }
  return scale > 0 ? err / scale : err;
}

// Independent einsum by enumerating every joint assignment of all labels.
TensorD brute_force(const TensorD& a, const TensorD& b, const std::vector<IndexId>& out) {
  std::vector<IndexId> all = a.indices();
  std::vector<std::int64_t> dims = a.dims();
  for (std::size_t i = 0; i < b.indices().size(); ++i) {
    if (std::find(all.begin(), all.end(), b.indices()[i]) == all.end()) {
      all.push_back(b.indices()[i]);
      dims.push_back(b.dims()[i]);
    }
  }
  std::vector<std::int64_t> out_dims;
  for (auto id : out) out_dims.push_back(dims[static_cast<std::size_t>(std::find(all.begin(), all.end(), id) - all.begin())]);
  TensorD r(out, out_dims);
  std::vector<std::int64_t> val(all.size(), 0);
  auto offset = [&](const TensorD& t) {
    std::int64_t off = 0;
    for (std::size_t ax = 0; ax < t.indices().size(); ++ax) {
      const auto pos = std::find(all.begin(), all.end(), t.indices()[ax]) - all.begin();
      off = off * t.dims()[ax] + val[static_cast<std::size_t>(pos)];
    }
    return off;
  };
  while (true) {
    r.data()[static_cast<std::size_t>(offset(r))] += a.data()[static_cast<std::size_t>(offset(a))] *
                                                     b.data()[static_cast<std::size_t>(offset(b))];
    std::size_t k = all.size();
    while (k-- > 0) {
      if (++val[k] < dims[k]) break;
      val[k] = 0;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  return r;
}

}  // namespace

TEST_CASE("permute identity and transpose") {
  std::mt19937_64 rng(1);
  const auto t = random_tensor(labels({0, 1, 2}), {2, 3, 4}, rng);
  const std::vector<int> id{0, 1, 2};
  const auto same = permute(t, std::span<const int>(id));
  CHECK(std::equal(same.data().begin(), same.data().end(), t.data().begin()));

  const auto m = random_tensor(labels({0, 1}), {3, 5}, rng);
  const std::vector<int> sw{1, 0};
  const auto mt = permute(m, std::span<const int>(sw));
  CHECK(mt.dims() == std::vector<std::int64_t>{5, 3});
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 5; ++j) CHECK(m.data()[static_cast<std::size_t>(i * 5 + j)] == mt.data()[static_cast<std::size_t>(j * 3 + i)]);
  }
  const std::vector<int> bad{0, 0};
  CHECK_THROWS_AS((void)permute(m, std::span<const int>(bad)), Error);
}

TEST_CASE("permute inverse composition up to rank 8") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int r = 1 + trial % 8;
    std::vector<IndexId> idx;
    std::vector<std::int64_t> dims;
    for (int i = 0; i < r; ++i) {
      idx.push_back(make_index(i));
      dims.push_back(1 + static_cast<std::int64_t>(rng() % 4));
    }
    const auto t = random_tensor(idx, dims, rng);
    std::vector<int> p(static_cast<std::size_t>(r));
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    std::vector<int> inv(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) inv[static_cast<std::size_t>(p[j])] = static_cast<int>(j);
    const auto back = permute(permute(t, std::span<const int>(p)), std::span<const int>(inv));
    CHECK(back.dims() == t.dims());
    CHECK(back.indices() == t.indices());
    CHECK(std::equal(back.data().begin(), back.data().end(), t.data().begin()));
    // Multiset of values preserved.
    auto key = [](const std::complex<float>& v) { return std::pair(v.real(), v.imag()); };
    std::vector<std::pair<float, float>> x, y;
    for (auto v : t.data()) x.push_back(key(v));
    const auto permuted = permute(t, std::span<const int>(p));
    for (auto v : permuted.data()) y.push_back(key(v));
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    CHECK(x == y);
  }
}

TEST_CASE("naive identity and dot product") {
  DenseTensor eye(labels({0, 1}), {2, 2});
  eye.data()[0] = eye.data()[3] = 1.0F;
  std::mt19937_64 rng(3);
  const auto m = random_tensor(labels({1, 2}), {2, 2}, rng);
  FlopCounter f;
  const auto r = contract_pair_naive(eye, m, ContractionSpec::from_labels(eye.indices(), m.indices(), labels({0, 2})), &f);
  CHECK(std::equal(r.data().begin(), r.data().end(), m.data().begin()));
  CHECK(f.total() == 64);

  DenseTensor u(labels({5}), {3}, {{1, 0}, {2, 0}, {0, 1}});
  DenseTensor v(labels({5}), {3}, {{1, 0}, {1, 1}, {2, 0}});
  const auto dot = contract_pair_naive(u, v, ContractionSpec::from_labels(u.indices(), v.indices(), {}));
  CHECK(dot.rank() == 0);
  CHECK(dot.data()[0] == std::complex<float>(3, 4));
}

TEST_CASE("naive rank-5 x rank-5 against enumeration") {
  std::mt19937_64 rng(4);
  const auto a = random_tensor(labels({0, 1, 2, 3, 4}), {2, 3, 2, 3, 2}, rng);
  const auto b = random_tensor(labels({5, 3, 6, 1, 7}), {2, 3, 3, 3, 2}, rng);
  const auto out = labels({7, 0, 2, 6, 4, 5});
  const auto r = contract_pair_naive(a, b, ContractionSpec::from_labels(a.indices(), b.indices(), out));
  const auto want = brute_force(a.cast<double>(), b.cast<double>(), out);
  CHECK(max_rel_error(r, want.cast<float>()) < 1e-6);
}

TEST_CASE("dim mismatch and bad output") {
  DenseTensor a(labels({0, 1}), {2, 3});
  DenseTensor b(labels({1, 2}), {4, 2});
  ContractionSpec spec;
  spec.contracted = {{1, 0}};
  spec.output = {{OutputLeg::Source::A, 0}, {OutputLeg::Source::B, 1}};
  CHECK_THROWS_AS((void)contract_pair_naive(a, b, spec), Error);
  CHECK_THROWS_AS((void)contract_pair_ttgt(a, b, spec), Error);
  DenseTensor c(labels({1, 2}), {3, 2});
  spec.output = {{OutputLeg::Source::A, 0}};
  CHECK_THROWS_AS((void)contract_pair_ttgt(a, c, spec), Error);
}

TEST_CASE("worked index example") {
  // A[a,b,c,d,e,f,g] x B[h,a,f,i] -> C[b,c,d,e,g,h,i], all dims 2.
  std::mt19937_64 rng(5);
  enum { a_, b_, c_, d_, e_, f_, g_, h_, i_ };
  const auto A = random_tensor(labels({a_, b_, c_, d_, e_, f_, g_}), std::vector<std::int64_t>(7, 2), rng);
  const auto B = random_tensor(labels({h_, a_, f_, i_}), std::vector<std::int64_t>(4, 2), rng);
  const auto out = labels({b_, c_, d_, e_, g_, h_, i_});
  const auto spec = ContractionSpec::from_labels(A.indices(), B.indices(), out);
  const auto n = contract_pair_naive(A, B, spec);
  const auto t = contract_pair_ttgt(A, B, spec);
  CHECK(t.indices() == out);
  CHECK(max_rel_error(t, n) < 1e-6);
}

TEST_CASE("balanced rank-4 dim-32 case and flop count") {
  std::mt19937_64 rng(6);
  const auto A = random_tensor(labels({0, 1, 2, 3}), {32, 32, 32, 32}, rng);
  const auto B = random_tensor(labels({4, 2, 5, 0}), {32, 32, 32, 32}, rng);
  const auto out = labels({1, 4, 3, 5});
  const auto spec = ContractionSpec::from_labels(A.indices(), B.indices(), out);
  FlopCounter f;
  const auto t = contract_pair_ttgt(A, B, spec, &f);
  CHECK(f.total() == 8ULL * (1ULL << 30));
  // Spot-check a sample of outputs against direct sums.
  for (int trial = 0; trial < 40; ++trial) {
    const std::int64_t i1 = static_cast<std::int64_t>(rng() % 32), i4 = static_cast<std::int64_t>(rng() % 32), i3 = static_cast<std::int64_t>(rng() % 32), i5 = static_cast<std::int64_t>(rng() % 32);
    std::complex<double> acc;
    for (std::int64_t i0 = 0; i0 < 32; ++i0) {
      for (std::int64_t i2 = 0; i2 < 32; ++i2) {
        const auto x = A.data()[static_cast<std::size_t>(((i0 * 32 + i1) * 32 + i2) * 32 + i3)];
        const auto y = B.data()[static_cast<std::size_t>(((i4 * 32 + i2) * 32 + i5) * 32 + i0)];
        acc += std::complex<double>(x) * std::complex<double>(y);
      }
    }
    const auto got = t.data()[static_cast<std::size_t>(((i1 * 32 + i4) * 32 + i3) * 32 + i5)];
    CHECK(std::abs(std::complex<double>(got) - acc) < 1e-4 * (1 + std::abs(acc)));
  }
}

TEST_CASE("imbalanced rank-20 x rank-4") {
  std::mt19937_64 rng(7);
  std::vector<IndexId> ai;
  for (int i = 0; i < 20; ++i) ai.push_back(make_index(i));
  const auto A = random_tensor(ai, std::vector<std::int64_t>(20, 2), rng);
  const auto B = random_tensor(labels({30, 3, 31, 17}), {2, 2, 2, 2}, rng);
  std::vector<IndexId> out;
  for (int i = 0; i < 20; ++i) {
    if (i != 3 && i != 17) out.push_back(make_index(i));
  }
  out.insert(out.begin() + 5, make_index(31));
  out.push_back(make_index(30));
  const auto spec = ContractionSpec::from_labels(A.indices(), B.indices(), out);
  const auto n = contract_pair_naive(A, B, spec);
  const auto t = contract_pair_ttgt(A, B, spec);
  const auto u = contract_pair_unfused(A, B, spec);
  CHECK(max_rel_error(t, n) < 1e-5);
  CHECK(max_rel_error(u, n) < 1e-5);
}

TEST_CASE("fuzzed ttgt against naive") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 120; ++trial) {
    const int ra = 1 + static_cast<int>(rng() % 6);
    const int rb = 1 + static_cast<int>(rng() % 5);
    const int nc = static_cast<int>(rng() % (std::min(ra, rb) + 1));
    const int nh = static_cast<int>(rng() % (std::min(ra, rb) - nc + 1));
    const std::int64_t dmax = trial % 2 ? 6 : 2;
    std::vector<IndexId> ai, bi;
    std::vector<std::int64_t> ad, bd;
    int next = 0;
    for (int i = 0; i < nc + nh; ++i) {
      const auto d = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(dmax));
      ai.push_back(make_index(next));
      bi.push_back(make_index(next++));
      ad.push_back(d);
      bd.push_back(d);
    }
    while (static_cast<int>(ai.size()) < ra) {
      ai.push_back(make_index(next++));
      ad.push_back(1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(dmax)));
    }
    while (static_cast<int>(bi.size()) < rb) {
      bi.push_back(make_index(next++));
      bd.push_back(1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(dmax)));
    }
    std::vector<int> pa(ai.size()), pb(bi.size());
    std::iota(pa.begin(), pa.end(), 0);
    std::iota(pb.begin(), pb.end(), 0);
    std::shuffle(pa.begin(), pa.end(), rng);
    std::shuffle(pb.begin(), pb.end(), rng);
    const auto A = permute(random_tensor(ai, ad, rng), std::span<const int>(pa));
    const auto B = permute(random_tensor(bi, bd, rng), std::span<const int>(pb));
    std::vector<IndexId> out;
    for (int i = nc; i < next; ++i) out.push_back(make_index(i));
    std::shuffle(out.begin(), out.end(), rng);
    const auto spec = ContractionSpec::from_labels(A.indices(), B.indices(), out);
    const auto n = contract_pair_naive(A, B, spec);
    TtgtOptions small;
    small.scratch_bytes = 4096;
    CHECK(max_rel_error(contract_pair_ttgt(A, B, spec), n) < 1e-5);
    CHECK(max_rel_error(contract_pair_ttgt(A, B, spec, nullptr, small), n) < 1e-5);
    CHECK(max_rel_error(contract_pair_unfused(A, B, spec), n) < 1e-5);
  }
}

TEST_CASE("scratch below one tile is rejected") {
  std::mt19937_64 rng(9);
  const auto A = random_tensor(labels({0, 1}), {4, 4}, rng);
  const auto B = random_tensor(labels({1, 2}), {4, 4}, rng);
  TtgtOptions tiny;
  tiny.scratch_bytes = 16;
  CHECK_THROWS_AS((void)contract_pair_ttgt(A, B, ContractionSpec::from_labels(A.indices(), B.indices(), labels({0, 2})), nullptr, tiny), Error);
}

TEST_CASE("scale exponents add under contraction") {
  std::mt19937_64 rng(10);
  auto A = random_tensor(labels({0, 1}), {3, 4}, rng);
  auto B = random_tensor(labels({1, 2}), {4, 2}, rng);
  const auto spec = ContractionSpec::from_labels(A.indices(), B.indices(), labels({0, 2}));
  const auto base = contract_pair_ttgt(A, B, spec);
  A.set_scale_exp(5);
  B.set_scale_exp(-2);
  const auto scaled = contract_pair_ttgt(A, B, spec);
  CHECK(scaled.scale_exp() == 3);
  CHECK(std::equal(scaled.data().begin(), scaled.data().end(), base.data().begin()));
}

TEST_CASE("gemm") {
  std::mt19937_64 rng(11);
  std::normal_distribution<float> nd;
  Matrix<float> eye(4, 4), m(4, 3);
  for (int i = 0; i < 4; ++i) eye(i, i) = 1.0F;
  for (auto& v : m.data) v = {nd(rng), nd(rng)};
  FlopCounter f;
  const auto r = gemm(eye, m, &f);
  CHECK(r.data == m.data);
  CHECK(f.total() == 8ULL * 4 * 3 * 4);

  Matrix<float> row(1, 5), col(5, 1);
  std::complex<float> dot;
  for (int k = 0; k < 5; ++k) {
    row(0, k) = {nd(rng), nd(rng)};
    col(k, 0) = {nd(rng), nd(rng)};
    dot += row(0, k) * col(k, 0);
  }
  CHECK(std::abs(gemm(row, col)(0, 0) - dot) < 1e-5F);

  Matrix<float> a(37, 29), b(29, 41);
  for (auto& v : a.data) v = {nd(rng), nd(rng)};
  for (auto& v : b.data) v = {nd(rng), nd(rng)};
  const auto c = gemm(a, b);
  for (int i = 0; i < 37; ++i) {
    for (int j = 0; j < 41; ++j) {
      std::complex<float> acc;
      for (int k = 0; k < 29; ++k) acc += a(i, k) * b(k, j);
      // 4 ulp of the accumulated magnitude scale.
      float mag = 0;
      for (int k = 0; k < 29; ++k) mag += std::abs(a(i, k)) * std::abs(b(k, j));
      CHECK(std::abs(c(i, j) - acc) <= 4 * mag * std::numeric_limits<float>::epsilon());
    }
  }
  CHECK_THROWS_AS((void)gemm(a, a), Error);

  Matrix<float> two(2, 2);
  FlopCounter g;
  (void)gemm(two, two, &g);
  CHECK(g.total() == 64);
}

TEST_CASE("permute adds no flops") {
  FlopCounter f;
  std::mt19937_64 rng(12);
  const auto t = random_tensor(labels({0, 1}), {2, 2}, rng);
  const std::vector<int> p{1, 0};
  (void)permute(t, std::span<const int>(p));
  CHECK(f.total() == 0);
}

TEST_CASE("restrict indices") {
  std::mt19937_64 rng(13);
  const auto t = random_tensor(labels({0, 1, 2}), {2, 3, 4}, rng);
  const std::vector<std::pair<IndexId, std::int64_t>> pins{{make_index(1), 2}};
  const auto r = restrict_indices(t, std::span(pins));
  CHECK(r.dims() == std::vector<std::int64_t>{2, 4});
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 4; ++k) CHECK(r.data()[static_cast<std::size_t>(i * 4 + k)] == t.data()[static_cast<std::size_t>((i * 3 + 2) * 4 + k)]);
  }
}

TEST_CASE("tensor dump round trip") {
  std::mt19937_64 rng(14);
  auto t = random_tensor(labels({0, 1, 2}), {2, 3, 5}, rng);
  t.set_scale_exp(-7);
  t.set_precision(Precision::HalfStored);
  std::stringstream ss;
  write_tensor_dump(ss, t);
  const auto back = read_tensor_dump(ss);
  CHECK(back.dims() == t.dims());
  CHECK(back.scale_exp() == -7);
  CHECK(back.precision() == Precision::HalfStored);
  CHECK(std::equal(back.data().begin(), back.data().end(), t.data().begin()));
  std::stringstream cut(ss.str().substr(0, 10));
  CHECK_THROWS_AS((void)read_tensor_dump(cut), Error);
}
