// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "motionlab/optim.hpp"

#include <cmath>

#include "motionlab/errors.hpp"

namespace motionlab {

void Adam::step(const std::map<std::string, ag::Var>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(static_cast<double>(beta1_), static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(static_cast<double>(beta2_), static_cast<double>(t_));
  for (const auto& [name, var] : params) {
    if (!var || !var->is_leaf) throw ContractError("optimizer: '" + name + "' is not a leaf");
    if (var->grad.v.empty()) continue;
    Slot& slot = state_[name];
    if (slot.m.v.empty()) {
      slot.m = Tensor(var->val.shape);
      slot.v = Tensor(var->val.shape);
    }
    Tensor& g = var->grad;
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      slot.m[i] = beta1_ * slot.m[i] + (1.0f - beta1_) * g[i];
      slot.v[i] = beta2_ * slot.v[i] + (1.0f - beta2_) * g[i] * g[i];
      const double mh = slot.m[i] / bc1;
      const double vh = slot.v[i] / bc2;
      var->val[i] -= static_cast<float>(lr_ * mh / (std::sqrt(vh) + eps_));
    }
    g.fill(0.0f);
  }
}

void Adam::zero_grad(const std::map<std::string, ag::Var>& params) {
  for (const auto& [name, var] : params) {
    (void)name;
    if (var && !var->grad.v.empty()) var->grad.fill(0.0f);
  }
}

}  // namespace motionlab
