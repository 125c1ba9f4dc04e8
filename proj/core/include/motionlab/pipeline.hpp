// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "motionlab/absorbers.hpp"
#include "motionlab/config.hpp"
#include "motionlab/data.hpp"
#include "motionlab/diffusion.hpp"
#include "motionlab/lora.hpp"
#include "motionlab/model.hpp"

namespace motionlab {

struct StageReport {
  std::string stage;
  int steps_run = 0;
  bool aborted = false;
  std::vector<double> losses;
  /// Names of tensors whose content hash changed during the stage.
  std::vector<std::string> census;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;
};

struct BaseModel {
  Denoiser model;
  TextEncoder enc;
};

/// Fresh base (standard vocabulary) from the config and seed.
BaseModel make_base(const DenoiserConfig& cfg, std::uint64_t seed);

/// Content hashes over model + encoder parameters plus any named adapter sets
/// and token delta, for stage-isolation censuses.
std::map<std::string, std::uint64_t> hash_state(
    const Denoiser& model, const TextEncoder* enc,
    const std::vector<std::pair<std::string, const AdapterSet*>>& sets = {},
    const TokenDelta* delta = nullptr);
std::vector<std::string> census_diff(const std::map<std::string, std::uint64_t>& before,
                                     const std::map<std::string, std::uint64_t>& after);

/// Joint denoiser + text-encoder pretraining on the synthetic corpus, with
/// prompt dropping for classifier-free guidance. A non-finite loss aborts the
/// run before the offending update, keeping the last finite parameters.
BaseModel pretrain_base(const Corpus& corpus, const RunConfig& cfg,
                        StageReport* report = nullptr);

struct Stage1Artifacts {
  std::optional<AdapterSet> slora;
  std::optional<TokenDelta> token_delta;
};

/// Splits a clip into an unordered single-frame pool.
std::vector<Tensor> clip_frames(const VideoTensor& video);
/// Uniform temporal subsampling to exactly F frames.
VideoTensor subsample_frames(const VideoTensor& video, int F);

/// Initializer words for textual inversion: the content words of the spatial
/// caption, repeated or truncated to n_tokens.
std::vector<std::string> subject_words(const std::string& y_s, int n_tokens);
/// Replaces the caption's subject span (the spatial caption's content words)
/// with a placeholder phrase.
std::string substitute_subject(const std::string& caption, const std::string& y_s,
                               const std::string& phrase);

/// Trains the selected appearance absorbers on the reference clip's frame
/// pool with the spatial caption, under temporal bypass.
Stage1Artifacts stage1(BaseModel& base, const VideoTensor& reference, const PromptPair& prompts,
                       const RunConfig& cfg, std::vector<StageReport>* reports = nullptr);

/// Trains the temporal LoRA on the full clip with absorbers loaded frozen and
/// the temporal path active.
AdapterSet stage2(BaseModel& base, const Stage1Artifacts& absorbers,
                  const VideoTensor& reference, const PromptPair& prompts, const RunConfig& cfg,
                  StageReport* report = nullptr);

struct InferRequest {
  std::string prompt;
  std::vector<std::uint64_t> seeds = {0};
  SamplerConfig sampler;
  std::optional<Tensor> init_latent;  // overrides seeded noise when present
};

/// Stage-3 generation: composes the given T-LoRA sets onto a copy of the base
/// (absorbers are never loaded here) and samples one clip per seed.
std::vector<VideoTensor> infer(const BaseModel& base,
                               const std::vector<const AdapterSet*>& t_loras,
                               const InferRequest& req, const NoiseSchedule& sched);

/// Inverts a clean clip to its DDIM initial latent under the same model view.
Tensor invert_reference(const BaseModel& base, const std::vector<const AdapterSet*>& t_loras,
                        const VideoTensor& video, const std::string& prompt,
                        const SamplerConfig& sampler, const NoiseSchedule& sched);

/// Writes manifest.json (config snapshot + artifact hashes) into `dir`.
void write_manifest(const std::string& dir, const RunConfig& cfg,
                    const std::map<std::string, std::string>& artifacts);

}  // namespace motionlab
