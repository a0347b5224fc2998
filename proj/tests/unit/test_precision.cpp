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

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "rqcsim/precision.hpp"

using namespace rqcsim;

TEST_CASE("half rounding basics") {
  HalfFlags f;
  CHECK(round_to_half(1.0F, &f) == 1.0F);
  CHECK_FALSE(f.any());

  HalfFlags u;
  CHECK(round_to_half(1e-9F, &u) == 0.0F);
  CHECK(u.underflow_hit);
  CHECK_FALSE(u.overflow_hit);

  HalfFlags o;
  CHECK(std::isinf(round_to_half(70000.0F, &o)));
  CHECK(o.overflow_hit);

  CHECK(round_to_half(65504.0F) == 65504.0F);
  CHECK(round_to_half(std::ldexp(1.0F, -24)) == std::ldexp(1.0F, -24));
  CHECK(std::isnan(round_to_half(std::numeric_limits<float>::quiet_NaN())));
  CHECK(std::isinf(round_to_half(-std::numeric_limits<float>::infinity())));
}

TEST_CASE("round to nearest even") {
  // 1 + 2^-11 sits halfway between 1 and 1 + 2^-10: ties to the even mantissa (1).
  CHECK(round_to_half(1.0F + std::ldexp(1.0F, -11)) == 1.0F);
  // 1 + 3*2^-11 sits halfway between 1+2^-10 and 1+2^-9: ties to 1+2^-9.
  CHECK(round_to_half(1.0F + 3 * std::ldexp(1.0F, -11)) == 1.0F + std::ldexp(1.0F, -9));
  CHECK(round_to_half(1.0F + std::ldexp(1.0F, -11) + std::ldexp(1.0F, -20)) == 1.0F + std::ldexp(1.0F, -10));
  // Subnormal tie: 1.5 * 2^-24 rounds to 2 * 2^-24.
  CHECK(round_to_half(1.5F * std::ldexp(1.0F, -24)) == std::ldexp(1.0F, -23));
  CHECK(round_to_half(0.5F * std::ldexp(1.0F, -24)) == 0.0F);
}

TEST_CASE("exhaustive half round trip") {
  for (std::uint32_t b = 0; b < 0x10000; ++b) {
    const Half16 h = Half16::from_bits(static_cast<std::uint16_t>(b));
    const float x = h.to_single();
    if (std::isnan(x)) continue;
    CHECK(Half16::from_single(x).bits() == h.bits());
  }
}

TEST_CASE("round_to_half tensor is idempotent and tags precision") {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> nd;
  DenseTensor t({make_index(0)}, {64});
  for (auto& v : t.data()) v = {nd(rng), nd(rng) * 1e-6F};
  const auto [once, f1] = round_to_half(t);
  const auto [twice, f2] = round_to_half(once);
  CHECK(once.precision() == Precision::HalfStored);
  CHECK(std::equal(once.data().begin(), once.data().end(), twice.data().begin()));
}

TEST_CASE("adaptive scale") {
  DenseTensor t({make_index(0)}, {3}, {{0.25F, 0}, {-3.0F, 0}, {0, 1.5F}});
  const auto s = adaptive_scale(t);
  CHECK(s.scale_exp() == 1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(s.logical(i) == t.data()[i]);

  DenseTensor small({make_index(0)}, {2}, {{std::ldexp(1.0F, -20), 0}, {0, std::ldexp(1.0F, -27)}});
  ScalingState st;
  const auto ss = adaptive_scale(small, &st);
  CHECK(ss.scale_exp() == -20);
  CHECK(st.scale_exp == -20);
  double mx = 0;
  for (auto v : ss.data()) mx = std::max(mx, static_cast<double>(std::abs(v)));
  CHECK(mx >= 0.25);
  CHECK(mx <= 4.0);
  HalfFlags f;
  (void)round_to_half(ss.data()[0].real(), &f);
  CHECK_FALSE(f.any());
  CHECK(ss.logical(1) == small.data()[1]);

  DenseTensor zero({make_index(0)}, {4});
  CHECK(adaptive_scale(zero).scale_exp() == 0);
}

TEST_CASE("filter paths") {
  std::vector<PathResult> clean(5, PathResult{{1.0F, 0.0F}, 0, {}});
  const auto a = filter_paths(clean);
  CHECK(a.discarded_fraction == 0.0);
  CHECK(a.kept.size() == 5);

  std::vector<PathResult> mixed(100, PathResult{{1.0F, 0.0F}, -3, {}});
  mixed[7].flags.underflow_hit = true;
  mixed[42].flags.overflow_hit = true;
  const auto b = filter_paths(mixed);
  CHECK(b.discarded_fraction == doctest::Approx(0.02));
  CHECK(b.rescale == doctest::Approx(100.0 / 98.0));
  CHECK(b.estimate.real() == doctest::Approx(98 * 0.125 * 100.0 / 98.0));
  for (const auto& k : b.kept) CHECK(k.value == std::complex<float>(1.0F, 0.0F));

  std::vector<PathResult> bad(3, PathResult{{1.0F, 0.0F}, 0, {true, false}});
  CHECK_THROWS_AS((void)filter_paths(bad), Error);
}

TEST_CASE("fraction of paths is unbiased") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<std::complex<double>> paths(40);
  std::complex<double> full;
  for (auto& p : paths) {
    p = {nd(rng), nd(rng)};
    full += p;
  }
  std::complex<double> mean;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    std::vector<PathResult> r;
    for (const auto& p : paths) {
      PathResult x{{static_cast<float>(p.real()), static_cast<float>(p.imag())}, 0, {}};
      x.flags.underflow_hit = (rng() % 4) == 0;
      r.push_back(x);
    }
    bool any_kept = false;
    for (auto& x : r) any_kept |= !x.flags.any();
    if (!any_kept) continue;
    mean += filter_paths(r).estimate;
  }
  mean /= static_cast<double>(trials);
  CHECK(std::abs(mean - full) < 0.05 * std::abs(full) + 0.2);
}

TEST_CASE("error curve") {
  BlockAccumulator same(4);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 40; ++i) {
    const std::complex<float> v(static_cast<float>(nd(rng)), static_cast<float>(nd(rng)));
    same.add({v, 0, {}}, PathResult{v, 0, {}}.logical());
  }
  for (double e : error_curve(same, ErrorReference::Prefix)) CHECK(e == 0.0);
  const auto total = error_curve(same, ErrorReference::Total);
  CHECK(total.size() == 10);
  CHECK(total.back() == 0.0);

  BlockAccumulator partial(90);
  for (int i = 0; i < 200; ++i) partial.add({{1, 0}, 0, {}}, 1.0);
  CHECK(error_curve(partial).size() == 2);

  BlockAccumulator zero(2);
  zero.add({{0, 0}, 0, {}}, 0.0);
  zero.add({{0, 0}, 0, {}}, 0.0);
  CHECK_THROWS_AS((void)error_curve(zero), Error);
}

TEST_CASE("perturbation model curve trends down") {
  // Paths carry a common signal plus noise; each mixed value has an extra
  // relative perturbation. Against the full reference the curve must shrink.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  BlockAccumulator acc(90);
  for (int i = 0; i < 30 * 90; ++i) {
    const std::complex<double> ref(1.0 + 0.3 * nd(rng), 0.3 * nd(rng));
    const std::complex<double> mixed = ref * (1.0 + 1e-3 * nd(rng));
    acc.add({{static_cast<float>(mixed.real()), static_cast<float>(mixed.imag())}, 0, {}}, ref);
  }
  const auto curve = error_curve(acc);
  CHECK(curve.size() == 30);
  CHECK(least_squares_slope(curve) <= 0.0);
  CHECK(curve.back() < 1e-2);
}

TEST_CASE("slope and csv") {
  CHECK(least_squares_slope({3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(least_squares_slope({1}) == 0.0);
  std::ostringstream os;
  write_error_curve_csv(os, {0.5, 0.25}, "abc");
  CHECK(os.str() == "# manifest abc\nblock_index,relative_error\n0,0.5\n1,0.25\n");
}
