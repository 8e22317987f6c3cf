// Copyright 2026 The reuseg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <thread>

#include "reuseg/constant_pool.hpp"
#include "reuseg/random.hpp"
#include "reuseg/tensor.hpp"
#include "test_util.hpp"

namespace reuseg {
namespace {

TEST(Tensor, ShapeAndIndexing) {
  const Tensor t = Tensor::from_list({2, 3}, {0, 1, 2, 3, 4, 5});
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.numel(), 6);
  EXPECT_EQ(t.at({1, 2}), 5.0f);
  EXPECT_EQ(t.reshaped({3, 2}).at({2, 0}), 4.0f);
  EXPECT_THROW(t.dim(2), DimensionError);
  EXPECT_THROW(t.at({2, 0}), DimensionError);
  EXPECT_THROW(t.reshaped({4, 2}), DimensionError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>(3)), DimensionError);
  EXPECT_EQ(shape_str({2, 3}), "[2x3]");
}

TEST(Tensor, MatrixViewSharesStorage) {
  Tensor t = Tensor::zeros({2, 2});
  as_matrix(t)(1, 0) = 7.0f;
  EXPECT_EQ(t.at({1, 0}), 7.0f);
  EXPECT_EQ(as_matrix(Tensor::zeros({5})).rows(), 1);
  EXPECT_THROW(as_matrix(Tensor::zeros({1, 2, 2})), DimensionError);
}

TEST(Half, OneIsExactAndTenthRoundTripsWithinHalfUlp) {
  EXPECT_EQ(round_to_half(1.0f), 1.0f);
  EXPECT_LE(std::fabs(round_to_half(0.1f) - 0.1f), std::ldexp(0.1f, -11));
  EXPECT_EQ(round_to_half(0.1f), 0.0999755859375f);
  EXPECT_EQ(round_to_half(65504.0f), 65504.0f);
  EXPECT_TRUE(std::isinf(round_to_half(70000.0f)));
  EXPECT_TRUE(std::isinf(round_to_half(-70000.0f)));
  EXPECT_LT(round_to_half(-70000.0f), 0.0f);
  EXPECT_TRUE(std::isnan(round_to_half(std::numeric_limits<float>::quiet_NaN())));
  // Smallest subnormal 2^-24; half of it ties to even (zero).
  EXPECT_EQ(round_to_half(std::ldexp(1.0f, -24)), std::ldexp(1.0f, -24));
  EXPECT_EQ(round_to_half(std::ldexp(1.0f, -25)), 0.0f);
  EXPECT_EQ(round_to_half(std::ldexp(3.0f, -25)), std::ldexp(1.0f, -23));
}

TEST(Half, MatchesEigenHalfOnEveryExponent) {
  PortableRng rng(7);
  for (int e = -30; e <= 17; ++e) {
    for (int i = 0; i < 2000; ++i) {
      const auto mant = static_cast<float>(1.0 + rng.uniform());
      const float v = std::ldexp(i % 2 ? -mant : mant, e);
      const float ref = static_cast<float>(Eigen::half(v));
      ASSERT_EQ(std::bit_cast<std::uint32_t>(round_to_half(v)), std::bit_cast<std::uint32_t>(ref))
          << v;
    }
  }
  for (std::uint32_t h = 0; h < 0x7c00u; ++h) {  // every finite half is a fixed point
    const float v = half_from_bits(static_cast<std::uint16_t>(h));
    ASSERT_EQ(round_to_half(v), v);
    ASSERT_EQ(half_bits(v), h);
  }
}

TEST(Half, F16TensorsLiveOnTheHalfGrid) {
  const Tensor t = testing::random_tensor({64}, 3, 1.0, DType::F16);
  for (float v : t.data()) EXPECT_EQ(round_to_half(v), v);
  EXPECT_EQ(dtype_size(DType::F16), 2u);
  EXPECT_EQ(dtype_size(DType::F32), 4u);
}

TEST(Tensor, BitwiseEqualDistinguishesDtypeAndShape) {
  const Tensor a = Tensor::full({2, 2}, 1.0f);
  EXPECT_TRUE(a.bitwise_equal(Tensor::full({2, 2}, 1.0f)));
  EXPECT_FALSE(a.bitwise_equal(Tensor::full({2, 2}, 1.0f, DType::F16)));
  EXPECT_FALSE(a.bitwise_equal(Tensor::full({4}, 1.0f)));
  EXPECT_EQ(max_abs_diff(a, Tensor::full({2, 2}, 0.25f)), 0.75f);
  EXPECT_THROW(max_abs_diff(a, Tensor::full({4}, 1.0f)), DimensionError);
}

TEST(ConstantPool, SameKeyReturnsSameObject) {
  ConstantPool pool;
  auto a = pool.zeros({2, 3});
  auto b = pool.zeros({2, 3});
  EXPECT_EQ(a.get(), b.get());
  EXPECT_EQ(pool.allocations(), 1u);
  auto c = pool.zeros({2, 3}, DType::F16);
  EXPECT_NE(a.get(), c.get());
  auto m = pool.causal_mask(4);
  EXPECT_EQ(m.get(), pool.causal_mask(4).get());
  EXPECT_EQ(pool.allocations(), 3u);
  EXPECT_EQ(pool.size(), 3u);
  EXPECT_EQ(m->at({0, 0}), 0.0f);
  EXPECT_TRUE(std::isinf(m->at({0, 1})));
  EXPECT_THROW(pool.get(ConstantKind::CausalMask, {2, 3}), DimensionError);
  pool.clear();
  EXPECT_EQ(pool.size(), 0u);
}

TEST(ConstantPool, ConcurrentLookupsMaterializeOnce) {
  ConstantPool pool;
  std::vector<std::thread> threads;
  std::vector<const Tensor*> seen(8);
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      for (int k = 0; k < 200; ++k) seen[i] = pool.causal_mask(16).get();
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(pool.allocations(), 1u);
  for (auto* p : seen) EXPECT_EQ(p, seen[0]);
}

TEST(Random, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64("", 0), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a", 1), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar", 6), 0x85944171f73967e8ULL);
}

TEST(Random, Mt19937_64StandardValue) {
  // The standard pins the 10000th output of a default-seeded engine.
  PortableRng rng(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ULL);
}

TEST(Random, PortableLogMatchesLibm) {
  for (double x : {1e-300, 1e-9, 0.1, 0.5, 1.0, 2.0, 3.14159, 1e6, 1e300}) {
    EXPECT_NEAR(portable_log(x), std::log(x), 1e-14 * std::max(1.0, std::fabs(std::log(x))));
  }
}

TEST(Random, NormalMoments) {
  PortableRng rng(11);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Random, UniformAndBelowRanges) {
  PortableRng a(3), b(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(a.below(7), 7u);
    EXPECT_EQ(u, b.uniform());
    b.below(7);
  }
}

}  // namespace
}  // namespace reuseg
