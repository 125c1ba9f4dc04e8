// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "motionlab/tensor.hpp"

namespace motionlab::ag {

struct Node;
using Var = std::shared_ptr<Node>;

/// One value in the computation graph. Gradients accumulate into `grad`
/// during backward(); leaves created via leaf() keep theirs until zeroed.
struct Node {
  Tensor val;
  Tensor grad;
  bool is_leaf = false;
  std::uint64_t id = 0;
  std::vector<Var> parents;
  std::function<void(Node&)> backfn;

  Tensor& grad_buf() {
    if (grad.v.empty() && val.numel() > 0) grad = Tensor(val.shape);
    return grad;
  }
};

Var constant(Tensor t);
Var leaf(Tensor t);

/// Runs reverse-mode accumulation from `root` (typically a scalar loss).
void backward(const Var& root);

// --- elementwise / broadcast ---
Var add(const Var& a, const Var& b);
Var scale(const Var& a, float s);
Var mul(const Var& a, const Var& b);
Var silu(const Var& x);
/// x: (N, C, H, W), bias: (C). Adds bias[c] to every spatial position.
Var add_channel_bias(const Var& x, const Var& bias);

// --- shape ---
Var reshape(const Var& x, std::vector<int> shape);
/// Generic 4-d axis permutation.
Var permute4(const Var& x, std::array<int, 4> axes);
/// Concatenate along axis 1 of (N, C, H, W).
Var concat_ch(const Var& a, const Var& b);
/// x: (S, C) -> (B, S, C), repeated along the new batch axis.
Var expand0(const Var& x, int B);

// --- dense ---
/// x: (..., in), w: (out, in), optional bias (out). 3-d inputs are processed
/// slice-by-slice along dim 0 so per-slice arithmetic is independent.
Var linear(const Var& x, const Var& w, const Var& b = nullptr);
/// table: (V, D); returns (ids.size(), D).
Var embedding(const Var& table, const std::vector<int>& ids);

// --- attention ---
/// Multi-head scaled dot-product attention.
/// q: (B, Sq, C), k/v: (B, Sk, C); heads must divide C. Batch entries are
/// processed independently (identical arithmetic per entry).
Var sdpa(const Var& q, const Var& k, const Var& v, int heads);

// --- conv / norm ---
/// x: (N, Cin, H, W), w: (Cout, Cin, kh, kw), bias: (Cout).
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad_h, int pad_w);
Var group_norm(const Var& x, int groups, const Var& gamma, const Var& beta, float eps = 1e-5f);
/// Normalizes over the last dimension. x: (..., C), gamma/beta: (C).
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, float eps = 1e-5f);
Var upsample_nearest2x(const Var& x);

// --- reductions ---
/// Mean squared error over all elements; returns a scalar (shape {1}).
Var mse(const Var& a, const Var& b);

}  // namespace motionlab::ag
