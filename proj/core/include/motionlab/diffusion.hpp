// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "motionlab/model.hpp"
#include "motionlab/tensor.hpp"

namespace motionlab {

/// Linear-beta DDPM schedule with precomputed cumulative tables.
struct NoiseSchedule {
  int T = 0;
  std::vector<float> beta;
  std::vector<float> alpha;
  std::vector<float> alpha_bar;

  static NoiseSchedule linear(int T, double beta_start = 1e-4, double beta_end = 0.02);

  /// alpha_bar at step t; t = -1 is the clean-data endpoint (== 1).
  float abar(int t) const;
  void check_step(int t) const;
};

struct SamplerConfig {
  int steps = 50;           // DDIM substeps, 1 <= steps <= T
  float guidance = 1.0f;    // classifier-free guidance scale; 1 = off
  // eta is fixed at 0: sampling is deterministic
};

/// x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps
Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& sched);

/// Mean squared error over all elements (the shared loss kernel).
double diffusion_loss(const Tensor& eps_pred, const Tensor& eps);

/// The network's regression target: v = sqrt(abar_t) * eps - sqrt(1 - abar_t) * x0.
/// Velocity stays well-conditioned at every noise level (at high noise it is
/// close to -x0), unlike raw epsilon, which degenerates into copying the input.
Tensor v_target(const Tensor& x0, const Tensor& eps, int t, const NoiseSchedule& sched);

/// Epsilon recovered from the network's velocity prediction,
/// eps = sqrt(abar_t) * v + sqrt(1 - abar_t) * x_t, with optional
/// classifier-free guidance (applied in v-space; with w == 1 the
/// unconditional forward is skipped entirely).
Tensor guided_epsilon(const Denoiser& model, const Tensor& x_t, int t, const Tensor& text_cond,
                      const Tensor* text_uncond, float w, const NoiseSchedule& sched);

/// One deterministic DDIM update from step t down to t_prev (t_prev may be -1,
/// meaning the clean-data endpoint).
Tensor ddim_step(const Denoiser& model, const Tensor& x_t, int t, int t_prev,
                 const Tensor& text_cond, const Tensor* text_uncond, float w,
                 const NoiseSchedule& sched);

/// The evenly spaced substep grid over [0, T), ascending.
std::vector<int> ddim_grid(int T, int steps);

Tensor ddim_sample(const Denoiser& model, const Tensor& z_T, const Tensor& text_cond,
                   const Tensor* text_uncond, const NoiseSchedule& sched,
                   const SamplerConfig& cfg);

/// Runs the DDIM update in reverse to recover the initial latent of x0.
Tensor ddim_invert(const Denoiser& model, const Tensor& x0, const Tensor& text_cond,
                   const Tensor* text_uncond, const NoiseSchedule& sched,
                   const SamplerConfig& cfg);

}  // namespace motionlab
