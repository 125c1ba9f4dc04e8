// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "motionlab/diffusion.hpp"

#include <cmath>

#include "motionlab/errors.hpp"

namespace motionlab {

NoiseSchedule NoiseSchedule::linear(int T, double beta_start, double beta_end) {
  if (T < 1) throw ConfigError("schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw ConfigError("schedule: need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.T = T;
  s.beta.resize(static_cast<size_t>(T));
  s.alpha.resize(static_cast<size_t>(T));
  s.alpha_bar.resize(static_cast<size_t>(T));
  double prod = 1.0;
  for (int t = 0; t < T; ++t) {
    const double b = T == 1 ? beta_start
                            : beta_start + (beta_end - beta_start) * t / (T - 1);
    s.beta[static_cast<size_t>(t)] = static_cast<float>(b);
    s.alpha[static_cast<size_t>(t)] = static_cast<float>(1.0 - b);
    prod *= 1.0 - b;
    s.alpha_bar[static_cast<size_t>(t)] = static_cast<float>(prod);
  }
  return s;
}

float NoiseSchedule::abar(int t) const {
  if (t == -1) return 1.0f;
  check_step(t);
  return alpha_bar[static_cast<size_t>(t)];
}

void NoiseSchedule::check_step(int t) const {
  if (t < 0 || t >= T)
    throw StepError("step " + std::to_string(t) + " outside [0, " + std::to_string(T) + ")");
}

Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& sched) {
  sched.check_step(t);
  if (!x0.same_shape(eps)) throw ShapeError("q_sample: x0/eps shape mismatch");
  const float a = sched.abar(t);
  const float sa = std::sqrt(a), sb = std::sqrt(1.0f - a);
  Tensor out = x0;
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = sa * x0[i] + sb * eps[i];
  return out;
}

double diffusion_loss(const Tensor& eps_pred, const Tensor& eps) {
  if (!eps_pred.same_shape(eps)) throw ShapeError("diffusion_loss: shape mismatch");
  double acc = 0;
  for (std::int64_t i = 0; i < eps.numel(); ++i) {
    const double d = static_cast<double>(eps_pred[i]) - eps[i];
    acc += d * d;
  }
  return acc / static_cast<double>(eps.numel());
}

Tensor v_target(const Tensor& x0, const Tensor& eps, int t, const NoiseSchedule& sched) {
  sched.check_step(t);
  if (!x0.same_shape(eps)) throw ShapeError("v_target: x0/eps shape mismatch");
  const float a = sched.abar(t);
  const float sa = std::sqrt(a), sb = std::sqrt(1.0f - a);
  Tensor out = x0;
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = sa * eps[i] - sb * x0[i];
  return out;
}

Tensor guided_epsilon(const Denoiser& model, const Tensor& x_t, int t, const Tensor& text_cond,
                      const Tensor* text_uncond, float w, const NoiseSchedule& sched) {
  Tensor v = model.predict(x_t, t, text_cond);
  if (w != 1.0f) {
    if (!text_uncond) throw ConfigError("guidance: scale != 1 requires an unconditional prompt");
    Tensor v_u = model.predict(x_t, t, *text_uncond);
    for (std::int64_t i = 0; i < v.numel(); ++i) v[i] = v_u[i] + w * (v[i] - v_u[i]);
  }
  const float a = sched.abar(t);
  const float sa = std::sqrt(a), sb = std::sqrt(1.0f - a);
  for (std::int64_t i = 0; i < v.numel(); ++i) v[i] = sa * v[i] + sb * x_t[i];
  return v;
}

Tensor ddim_step(const Denoiser& model, const Tensor& x_t, int t, int t_prev,
                 const Tensor& text_cond, const Tensor* text_uncond, float w,
                 const NoiseSchedule& sched) {
  if (t_prev >= t) throw StepError("ddim_step: t_prev must be < t");
  if (t_prev < -1) throw StepError("ddim_step: t_prev must be >= -1");
  sched.check_step(t);
  const Tensor eps = guided_epsilon(model, x_t, t, text_cond, text_uncond, w, sched);
  const float a_t = sched.abar(t), a_p = sched.abar(t_prev);
  const float sa_t = std::sqrt(a_t), sb_t = std::sqrt(1.0f - a_t);
  const float sa_p = std::sqrt(a_p), sb_p = std::sqrt(1.0f - a_p);
  Tensor out = x_t;
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    const float x0 = (x_t[i] - sb_t * eps[i]) / sa_t;
    out[i] = sa_p * x0 + sb_p * eps[i];
  }
  return out;
}

std::vector<int> ddim_grid(int T, int steps) {
  if (steps < 1 || steps > T) throw ConfigError("sampler: need 1 <= steps <= T");
  std::vector<int> taus(static_cast<size_t>(steps));
  for (int i = 0; i < steps; ++i)
    taus[static_cast<size_t>(i)] = static_cast<int>(static_cast<std::int64_t>(i) * T / steps);
  return taus;
}

Tensor ddim_sample(const Denoiser& model, const Tensor& z_T, const Tensor& text_cond,
                   const Tensor* text_uncond, const NoiseSchedule& sched,
                   const SamplerConfig& cfg) {
  const auto taus = ddim_grid(sched.T, cfg.steps);
  Tensor x = z_T;
  for (int i = static_cast<int>(taus.size()) - 1; i >= 0; --i) {
    const int t = taus[static_cast<size_t>(i)];
    const int t_prev = i > 0 ? taus[static_cast<size_t>(i - 1)] : -1;
    x = ddim_step(model, x, t, t_prev, text_cond, text_uncond, cfg.guidance, sched);
  }
  return x;
}

Tensor ddim_invert(const Denoiser& model, const Tensor& x0, const Tensor& text_cond,
                   const Tensor* text_uncond, const NoiseSchedule& sched,
                   const SamplerConfig& cfg) {
  const auto taus = ddim_grid(sched.T, cfg.steps);
  Tensor x = x0;
  int s = -1;  // current noise level (grid index value), -1 = clean data
  for (int tau : taus) {
    const Tensor eps = guided_epsilon(model, x, std::max(s, 0), text_cond, text_uncond,
                                      cfg.guidance, sched);
    const float a_s = sched.abar(s), a_t = sched.abar(tau);
    const float sa_s = std::sqrt(a_s), sb_s = std::sqrt(1.0f - a_s);
    const float sa_t = std::sqrt(a_t), sb_t = std::sqrt(1.0f - a_t);
    for (std::int64_t i = 0; i < x.numel(); ++i) {
      const float xhat0 = (x[i] - sb_s * eps[i]) / sa_s;
      x[i] = sa_t * xhat0 + sb_t * eps[i];
    }
    s = tau;
  }
  return x;
}

}  // namespace motionlab
