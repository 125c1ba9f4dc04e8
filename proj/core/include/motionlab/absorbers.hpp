// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "motionlab/diffusion.hpp"
#include "motionlab/lora.hpp"
#include "motionlab/text.hpp"

namespace motionlab {

struct CropConfig {
  double ratio_min = 0.33;
  double ratio_max = 0.67;
  bool enabled = true;

  void validate() const;
};

/// Crops a uniform window at a ratio drawn from [ratio_min, ratio_max] and
/// bilinearly resizes it back to the input size. Frames with H or W < 4 are
/// returned unchanged and noted in `warnings`.
Tensor random_patch_crop(const Tensor& frame, Rng& rng, const CropConfig& cfg,
                         std::vector<std::string>* warnings = nullptr);
/// The ratio draw alone, exposed for distribution tests.
double draw_crop_ratio(Rng& rng, const CropConfig& cfg);

/// Learnable placeholder-token embeddings appended past the base vocabulary.
struct TokenDelta {
  std::vector<std::string> placeholders;
  std::vector<std::string> init_words;
  Tensor embeddings;  // (n_tokens, D)

  int n_tokens() const { return static_cast<int>(placeholders.size()); }
  /// "<s0> <s1> ..." ready for prompt substitution.
  std::string phrase() const;
};

constexpr int kMinInversionTokens = 2;
constexpr int kMaxInversionTokens = 6;

/// Registers n placeholder tokens "<s0>".."<s{n-1}>" in the encoder's
/// vocabulary and copies each initializer word's embedding row.
TokenDelta init_textual_inversion(TextEncoder& enc, int n_tokens,
                                  const std::vector<std::string>& init_words);
/// Re-registers a loaded delta's placeholders with an encoder.
void register_token_delta(TextEncoder& enc, const TokenDelta& delta);

void save_token_delta(const TokenDelta& delta, const std::string& path);
TokenDelta load_token_delta(const std::string& path);

struct AbsorberTrainConfig {
  int steps = 200;
  int batch = 4;
  float lr = 5e-5f;
  std::uint64_t seed = 0;
  CropConfig crop;
};

struct StageTrace {
  std::vector<double> losses;
  std::vector<std::string> warnings;
  /// Trainable tensors whose content actually changed over the run.
  std::vector<std::string> changed;
};

/// Trains a spatial-LoRA appearance absorber on an unordered frame pool with
/// the appearance-only caption. Requires the temporal bypass to be engaged;
/// only the injected spatial adapters change.
AdapterSet train_slora_absorber(Denoiser& model, const TextEncoder& enc,
                                const NoiseSchedule& sched, const std::vector<Tensor>& frames,
                                const std::string& y_s, int rank, float alpha,
                                const AbsorberTrainConfig& cfg, StageTrace* trace = nullptr);

/// Trains the placeholder-token embeddings; model weights and the base
/// embedding table stay bit-unchanged. The prompt must contain every
/// placeholder.
TokenDelta train_textinv_absorber(Denoiser& model, const TextEncoder& enc,
                                  const NoiseSchedule& sched, const std::vector<Tensor>& frames,
                                  const std::string& y_s_with_placeholders, TokenDelta delta,
                                  const AbsorberTrainConfig& cfg, StageTrace* trace = nullptr);

}  // namespace motionlab
