// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "motionlab/model.hpp"

namespace motionlab {

/// Low-rank pair bound to one named projection: delta = alpha * B * A.
struct Adapter {
  std::string target;
  ag::Var B;  // (d, r), zero-initialized
  ag::Var A;  // (r, k), Gaussian(0, 1/r)
  int d = 0;
  int k = 0;
  int rank = 0;
  float alpha = 1.0f;
};

enum class LoraFamily { Temporal, Spatial, Custom };
const char* lora_family_name(LoraFamily f);
LoraFamily lora_family_from_name(const std::string& s);

/// A trained (or trainable) group of adapters over one layer family.
struct AdapterSet {
  std::string id;
  LoraFamily family = LoraFamily::Custom;
  int rank = 0;
  float alpha = 1.0f;
  std::uint64_t base_fingerprint = 0;
  bool consumed = false;  // set once merged; guards double application
  std::map<std::string, Adapter> adapters;

  std::vector<ag::Var> trainable() const;
};

Adapter make_adapter(const std::string& target, int d, int k, int r, float alpha,
                     std::uint64_t seed);

/// W0*x + alpha * B * (A * x), computed via the low-rank path.
Tensor adapter_forward(const Tensor& w0, const Adapter& ad, const Tensor& x);

/// Creates zero-initialized adapters on every W_q/W_k/W_v of the selected
/// family and routes the model's forward through them. The fresh model is
/// functionally bit-identical to its base.
AdapterSet inject(Denoiser& model, LoraFamily family, int r, float alpha, std::uint64_t seed,
                  const std::vector<std::string>& custom_targets = {});

/// Attaches an already-built set (e.g. loaded from disk) to a model.
void attach_set(Denoiser& model, const AdapterSet& set,
                std::optional<float> alpha_override = std::nullopt);
void detach_set(Denoiser& model, const AdapterSet& set);

/// Returns a model with W0 + alpha*B*A folded in and no attachments; marks
/// the set consumed. A consumed set cannot be merged again.
Denoiser merge(const Denoiser& model, AdapterSet& set);

/// Attaches several sets; on shared targets deltas sum, in a canonical order
/// (target name, then set id) so composition is order-independent.
void compose(Denoiser& model, const std::vector<const AdapterSet*>& sets,
             const std::vector<float>* alpha_overrides = nullptr);

/// Sum over adapters of r * (d + k).
std::int64_t count_params(const AdapterSet& set);

void save_adapters(const AdapterSet& set, const std::string& path);
AdapterSet load_adapters(const std::string& path);

}  // namespace motionlab
