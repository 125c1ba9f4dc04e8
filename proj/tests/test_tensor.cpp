// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "motionlab/tensor.hpp"

using namespace motionlab;

TEST_CASE("tensor shape and accessors") {
  Tensor t({2, 3, 4, 5});
  CHECK(t.numel() == 120);
  CHECK(t.ndim() == 4);
  CHECK(t.dim(3) == 5);
  t.at4(1, 2, 3, 4) = 7.0f;
  CHECK(t[t.numel() - 1] == 7.0f);
  CHECK(t.shape_str() == "(2,3,4,5)");

  CHECK_THROWS_AS(Tensor({2, 2}, {1.0f, 2.0f, 3.0f}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({-1, 2}), std::invalid_argument);
}

TEST_CASE("tensor fill and finite checks") {
  Tensor t = Tensor::full({3, 3}, 2.5f);
  CHECK(std::all_of(t.v.begin(), t.v.end(), [](float x) { return x == 2.5f; }));
  CHECK(t.all_finite());
  t[4] = std::numeric_limits<float>::infinity();
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("rng streams are deterministic and seed-sensitive") {
  Rng a(42), b(42), c(43);
  bool same = true, diff = false;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t x = a.next_u64();
    same = same && (x == b.next_u64());
    diff = diff || (x != c.next_u64());
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("rng uniform bounds and moments") {
  Rng rng(7);
  double sum = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));

  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-2.0, 3.0);
    REQUIRE(u >= -2.0);
    REQUIRE(u < 3.0);
  }
  std::set<std::int64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::int64_t k = rng.uniform_int(6);
    REQUIRE(k >= 0);
    REQUIRE(k < 6);
    seen.insert(k);
  }
  CHECK(seen.size() == 6);
}

TEST_CASE("rng gaussian moments") {
  Rng rng(11);
  const int n = 20000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sumsq += g * g;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(mean == doctest::Approx(0.0).epsilon(1.0).scale(0.05));
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("rng randn honors shape and stddev") {
  Rng rng(3);
  const Tensor t = rng.randn({50, 40}, 0.1f);
  CHECK(t.shape == std::vector<int>{50, 40});
  double sumsq = 0;
  for (float x : t.v) sumsq += static_cast<double>(x) * x;
  CHECK(std::sqrt(sumsq / t.numel()) == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("rng shuffle permutes") {
  Rng rng(5);
  std::vector<int> xs(100);
  std::iota(xs.begin(), xs.end(), 0);
  std::vector<int> orig = xs;
  rng.shuffle(xs);
  CHECK(xs != orig);
  std::sort(xs.begin(), xs.end());
  CHECK(xs == orig);
}

TEST_CASE("fnv1a64 known vectors") {
  // reference values of the standard FNV-1a 64-bit algorithm
  CHECK(fnv1a64(nullptr, 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("hash_tensor is content-sensitive") {
  Tensor a = Tensor::full({4, 4}, 1.0f);
  Tensor b = a;
  CHECK(hash_tensor(a) == hash_tensor(b));
  b[7] = 1.0001f;
  CHECK(hash_tensor(a) != hash_tensor(b));
  Tensor c({16});
  c.fill(1.0f);
  // same bytes, different shape
  CHECK(hash_tensor(a) != hash_tensor(c));
}
