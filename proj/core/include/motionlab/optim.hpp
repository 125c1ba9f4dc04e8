// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "motionlab/autograd.hpp"

namespace motionlab {

/// Adam over a named parameter group. State is keyed by name, so the same
/// optimizer instance can be reused across graph rebuilds as long as the
/// leaf Vars are stable.
class Adam {
 public:
  explicit Adam(float lr, float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  float lr() const { return lr_; }
  void set_lr(float lr) { lr_ = lr; }

  /// Applies one update from the accumulated gradients, then clears them.
  void step(const std::map<std::string, ag::Var>& params);
  void zero_grad(const std::map<std::string, ag::Var>& params);

 private:
  struct Slot {
    Tensor m, v;
  };
  float lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::map<std::string, Slot> state_;
};

}  // namespace motionlab
