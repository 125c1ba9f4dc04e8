// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "motionlab/autograd.hpp"
#include "motionlab/tensor.hpp"
#include "motionlab/text.hpp"

namespace motionlab {

struct DenoiserConfig {
  int frames = 8;
  int height = 32;
  int width = 32;
  int channels = 3;
  int base_width = 32;
  std::vector<int> width_multipliers = {1, 2};
  int heads = 4;
  int text_dim = 32;
  int max_text_len = 8;
  int time_embed_dim = 64;

  int levels() const { return static_cast<int>(width_multipliers.size()); }
  int level_width(int lvl) const { return base_width * width_multipliers[static_cast<size_t>(lvl)]; }
  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Stable textual form, used for fingerprints and checkpoint metadata.
  std::string canonical() const;
  static DenoiserConfig from_canonical(const std::string& s);
};

enum class AttnFamily { SSA, SCA, TCFA };
const char* family_name(AttnFamily f);

/// One attention projection weight in the parameter tree.
struct ProjInfo {
  std::string name;  // hierarchical, e.g. "down0.tcfa.wq"
  AttnFamily family = AttnFamily::SSA;
  std::string proj;  // wq | wk | wv | wo
  int d = 0;         // weight shape (d, k)
  int k = 0;
};

/// A low-rank delta routed through a projection at forward time.
struct AttachedAdapter {
  std::string set_id;
  ag::Var B;  // (d, r)
  ag::Var A;  // (r, k)
  float alpha = 1.0f;
};

/// Text-conditioned video denoiser: per resolution level a 2D residual conv
/// block, spatial self-attention, spatial cross-attention to the prompt and a
/// temporal block (cross-frame attention + temporal 1D conv), with a UNet
/// down/mid/up skeleton. All temporal contributions are residual, so the
/// bypass switch turns the network into an exact per-frame image model.
class Denoiser {
 public:
  Denoiser() = default;
  Denoiser(const DenoiserConfig& cfg, std::uint64_t seed);

  const DenoiserConfig& config() const { return cfg_; }
  std::map<std::string, ag::Var>& params() { return params_; }
  const std::map<std::string, ag::Var>& params() const { return params_; }
  const std::vector<ProjInfo>& census() const { return census_; }
  std::vector<ProjInfo> census_family(AttnFamily f) const;

  void set_temporal_bypass(bool on) { bypass_ = on; }
  bool temporal_bypass() const { return bypass_; }
  /// Debug knob: scales every temporal residual path; 1 is normal operation.
  void set_temporal_gate(float g) { tgate_ = g; }

  void attach(const std::string& target, AttachedAdapter ad);
  void detach_set(const std::string& set_id);
  bool set_attached(const std::string& set_id) const;
  const std::map<std::string, std::vector<AttachedAdapter>>& attachments() const {
    return attached_;
  }
  std::map<std::string, std::vector<AttachedAdapter>>& attachments_mut() { return attached_; }

  /// x: (F, channels, H, W) noisy clip, t: diffusion step, text: (L, text_dim)
  /// prompt embedding. Returns the velocity prediction (see v_target), same
  /// shape as x.
  ag::Var forward(const ag::Var& x, int t, const ag::Var& text) const;
  Tensor predict(const Tensor& x, int t, const Tensor& text) const;

  /// Deep copy of the parameter tree; adapter attachments are not copied.
  Denoiser clone() const;

 private:
  ag::Var proj(const std::string& name, const ag::Var& x) const;
  ag::Var res_block(const std::string& p, const ag::Var& h, const ag::Var& temb) const;
  ag::Var spatial_self(const std::string& p, const ag::Var& h) const;
  ag::Var spatial_cross(const std::string& p, const ag::Var& h, const ag::Var& text) const;
  ag::Var temporal_block(const std::string& p, const ag::Var& h) const;

  DenoiserConfig cfg_;
  std::map<std::string, ag::Var> params_;
  std::vector<ProjInfo> census_;
  bool bypass_ = false;
  float tgate_ = 1.0f;
  std::map<std::string, std::vector<AttachedAdapter>> attached_;
};

Denoiser build_denoiser(const DenoiserConfig& cfg, std::uint64_t seed);

/// Fingerprint of (config, sorted parameter-census names); adapter artifacts
/// bind to it.
std::uint64_t model_fingerprint(const DenoiserConfig& cfg,
                                const std::vector<std::string>& param_names);
std::uint64_t model_fingerprint(const Denoiser& d);
std::string fingerprint_hex(std::uint64_t fp);

/// Base-model checkpoint: denoiser ("unet.*") plus text encoder ("text.*").
void save_model(const std::string& path, const Denoiser& d, const TextEncoder& te);
std::pair<Denoiser, TextEncoder> load_model(const std::string& path);

/// Standalone attention kernels matching the in-model blocks (also used by
/// tests to pin the reshape contracts).
ag::Var spatial_self_attention(const ag::Var& x_bf_hw_c, const ag::Var& wq, const ag::Var& wk,
                               const ag::Var& wv, const ag::Var& wo, int heads);
ag::Var spatial_cross_attention(const ag::Var& x_bf_hw_c, const ag::Var& text, const ag::Var& wq,
                                const ag::Var& wk, const ag::Var& wv, const ag::Var& wo, int heads);
ag::Var temporal_cross_frame_attention(const ag::Var& x_bhw_f_c, const ag::Var& wq,
                                       const ag::Var& wk, const ag::Var& wv, const ag::Var& wo,
                                       int heads);

/// Sinusoidal timestep features of length `dim`.
Tensor timestep_embedding(int t, int dim);

}  // namespace motionlab
