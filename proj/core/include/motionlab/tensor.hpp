// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace motionlab {

/// Dense row-major float32 tensor with value semantics.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(numel_of(shape), 0.0f) {}
  Tensor(std::vector<int> s, std::vector<float> data) : shape(std::move(s)), v(std::move(data)) {
    if (static_cast<std::int64_t>(v.size()) != numel_of(shape))
      throw std::invalid_argument("Tensor: data size does not match shape");
  }

  static std::int64_t numel_of(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
  int dim(int i) const { return shape.at(static_cast<size_t>(i)); }
  int ndim() const { return static_cast<int>(shape.size()); }

  float& operator[](std::int64_t i) { return v[static_cast<size_t>(i)]; }
  float operator[](std::int64_t i) const { return v[static_cast<size_t>(i)]; }

  // 4-d accessor, used by image/video code paths.
  float& at4(int a, int b, int c, int d) {
    return v[static_cast<size_t>(((static_cast<std::int64_t>(a) * shape[1] + b) * shape[2] + c) * shape[3] + d)];
  }
  float at4(int a, int b, int c, int d) const {
    return v[static_cast<size_t>(((static_cast<std::int64_t>(a) * shape[1] + b) * shape[2] + c) * shape[3] + d)];
  }
  float& at3(int a, int b, int c) {
    return v[static_cast<size_t>((static_cast<std::int64_t>(a) * shape[1] + b) * shape[2] + c)];
  }
  float at3(int a, int b, int c) const {
    return v[static_cast<size_t>((static_cast<std::int64_t>(a) * shape[1] + b) * shape[2] + c)];
  }
  float& at2(int a, int b) { return v[static_cast<size_t>(static_cast<std::int64_t>(a) * shape[1] + b)]; }
  float at2(int a, int b) const { return v[static_cast<size_t>(static_cast<std::int64_t>(a) * shape[1] + b)]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  void fill(float x) { std::fill(v.begin(), v.end(), x); }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, float x) {
    Tensor t(std::move(s));
    t.fill(x);
    return t;
  }

  bool all_finite() const;
  std::string shape_str() const;
};

/// Deterministic RNG. splitmix64-seeded xoshiro256** with an explicit
/// Box-Muller gaussian so streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::int64_t uniform_int(std::int64_t n);
  float gaussian();

  Tensor randn(std::vector<int> shape, float stddev = 1.0f);
  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (std::int64_t i = static_cast<std::int64_t>(xs.size()) - 1; i > 0; --i) {
      std::int64_t j = uniform_int(i + 1);
      std::swap(xs[static_cast<size_t>(i)], xs[static_cast<size_t>(j)]);
    }
  }

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  float spare_ = 0.0f;
};

/// FNV-1a 64-bit over raw bytes. Used for parameter-change censuses and
/// checkpoint fingerprints.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t hash_tensor(const Tensor& t);

}  // namespace motionlab
