// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "motionlab/lora.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "motionlab/checkpoint.hpp"
#include "motionlab/errors.hpp"

namespace motionlab {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

const char* lora_family_name(LoraFamily f) {
  switch (f) {
    case LoraFamily::Temporal: return "temporal";
    case LoraFamily::Spatial: return "spatial";
    case LoraFamily::Custom: return "custom";
  }
  return "?";
}

LoraFamily lora_family_from_name(const std::string& s) {
  if (s == "temporal") return LoraFamily::Temporal;
  if (s == "spatial") return LoraFamily::Spatial;
  if (s == "custom") return LoraFamily::Custom;
  throw SelectorError("unknown LoRA family '" + s + "'");
}

std::vector<ag::Var> AdapterSet::trainable() const {
  std::vector<ag::Var> out;
  for (const auto& [_, ad] : adapters) {
    out.push_back(ad.B);
    out.push_back(ad.A);
  }
  return out;
}

Adapter make_adapter(const std::string& target, int d, int k, int r, float alpha,
                     std::uint64_t seed) {
  if (r < 1 || r > std::min(d, k))
    throw RankError("rank " + std::to_string(r) + " out of range [1, " +
                    std::to_string(std::min(d, k)) + "]");
  Adapter ad;
  ad.target = target;
  ad.d = d;
  ad.k = k;
  ad.rank = r;
  ad.alpha = alpha;
  ad.B = ag::leaf(Tensor::zeros({d, r}));
  Rng rng(seed);
  ad.A = ag::leaf(rng.randn({r, k}, 1.0f / std::sqrt(static_cast<float>(r))));
  return ad;
}

Tensor adapter_forward(const Tensor& w0, const Adapter& ad, const Tensor& x) {
  if (w0.ndim() != 2 || w0.dim(0) != ad.d || w0.dim(1) != ad.k)
    throw ShapeError("adapter_forward: W0 shape mismatch");
  const int rows = x.ndim() == 1 ? 1 : x.dim(0);
  if (x.shape.back() != ad.k) throw ShapeError("adapter_forward: input dim mismatch");
  Eigen::Map<const RowMat> X(x.v.data(), rows, ad.k);
  Eigen::Map<const RowMat> W(w0.v.data(), ad.d, ad.k);
  Eigen::Map<const RowMat> B(ad.B->val.v.data(), ad.d, ad.rank);
  Eigen::Map<const RowMat> A(ad.A->val.v.data(), ad.rank, ad.k);
  Tensor out(x.ndim() == 1 ? std::vector<int>{ad.d} : std::vector<int>{rows, ad.d});
  Eigen::Map<RowMat> Y(out.v.data(), rows, ad.d);
  Y.noalias() = X * W.transpose();
  Y.noalias() += ad.alpha * ((X * A.transpose()) * B.transpose());
  return out;
}

namespace {

std::vector<ProjInfo> select_targets(const Denoiser& model, LoraFamily family,
                                     const std::vector<std::string>& custom_targets) {
  std::vector<ProjInfo> out;
  auto want_proj = [](const ProjInfo& p) {
    return p.proj == "wq" || p.proj == "wk" || p.proj == "wv";
  };
  switch (family) {
    case LoraFamily::Temporal:
      for (const auto& p : model.census())
        if (p.family == AttnFamily::TCFA && want_proj(p)) out.push_back(p);
      break;
    case LoraFamily::Spatial:
      for (const auto& p : model.census())
        if ((p.family == AttnFamily::SSA || p.family == AttnFamily::SCA) && want_proj(p))
          out.push_back(p);
      break;
    case LoraFamily::Custom:
      for (const auto& name : custom_targets) {
        bool found = false;
        for (const auto& p : model.census())
          if (p.name == name) {
            out.push_back(p);
            found = true;
            break;
          }
        if (!found) throw SelectorError("inject: unknown target '" + name + "'");
      }
      break;
  }
  return out;
}

void sort_attachments(Denoiser& model) {
  // canonical summation order within a target: by set id
  for (auto& [_, v] : model.attachments_mut())
    std::stable_sort(v.begin(), v.end(), [](const AttachedAdapter& a, const AttachedAdapter& b) {
      return a.set_id < b.set_id;
    });
}

}  // namespace

AdapterSet inject(Denoiser& model, LoraFamily family, int r, float alpha, std::uint64_t seed,
                  const std::vector<std::string>& custom_targets) {
  const auto targets = select_targets(model, family, custom_targets);
  if (targets.empty()) throw SelectorError("inject: selector matched no targets");

  AdapterSet set;
  set.family = family;
  set.rank = r;
  set.alpha = alpha;
  set.base_fingerprint = model_fingerprint(model);

  std::uint64_t idh = fnv1a64(&seed, sizeof(seed), set.base_fingerprint);
  for (const auto& p : targets) idh = fnv1a64(p.name.data(), p.name.size(), idh);
  set.id = std::string(lora_family_name(family)) + ":" + fingerprint_hex(idh);

  const std::string fam = lora_family_name(family);
  for (const auto& t : targets) {
    auto it = model.attachments().find(t.name);
    if (it == model.attachments().end()) continue;
    for (const auto& at : it->second)
      if (at.set_id.rfind(fam + ":", 0) == 0)
        throw SelectorError("inject: target '" + t.name + "' already carries a " + fam +
                            " adapter; use compose() to stack sets");
  }

  std::uint64_t s = seed;
  for (const auto& p : targets) {
    s = fnv1a64(p.name.data(), p.name.size(), s ^ seed);
    set.adapters.emplace(p.name, make_adapter(p.name, p.d, p.k, r, alpha, s));
  }
  attach_set(model, set);
  return set;
}

void attach_set(Denoiser& model, const AdapterSet& set, std::optional<float> alpha_override) {
  if (set.base_fingerprint != model_fingerprint(model))
    throw CompatError("adapter set fingerprint does not match model");
  if (model.set_attached(set.id))
    throw SelectorError("adapter set '" + set.id + "' already attached");
  const float a = alpha_override.value_or(set.alpha);
  for (const auto& [target, ad] : set.adapters)
    model.attach(target, AttachedAdapter{set.id, ad.B, ad.A, a});
  sort_attachments(model);
}

void detach_set(Denoiser& model, const AdapterSet& set) { model.detach_set(set.id); }

Denoiser merge(const Denoiser& model, AdapterSet& set) {
  if (set.consumed) throw ContractError("merge: adapter set was already merged");
  if (set.base_fingerprint != model_fingerprint(model))
    throw CompatError("merge: adapter set fingerprint does not match model");
  Denoiser out = model.clone();
  for (const auto& [target, ad] : set.adapters) {
    Tensor& w = out.params().at(target)->val;
    Eigen::Map<RowMat> W(w.v.data(), ad.d, ad.k);
    Eigen::Map<const RowMat> B(ad.B->val.v.data(), ad.d, ad.rank);
    Eigen::Map<const RowMat> A(ad.A->val.v.data(), ad.rank, ad.k);
    W.noalias() += ad.alpha * (B * A);
  }
  set.consumed = true;
  return out;
}

void compose(Denoiser& model, const std::vector<const AdapterSet*>& sets,
             const std::vector<float>* alpha_overrides) {
  if (alpha_overrides && alpha_overrides->size() != sets.size())
    throw ShapeError("compose: alpha override count mismatch");
  // attach in set-id order; per-target summation order is canonicalized anyway
  std::vector<size_t> order(sets.size());
  for (size_t i = 0; i < sets.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return sets[a]->id < sets[b]->id; });
  for (size_t i : order) {
    std::optional<float> a;
    if (alpha_overrides) a = (*alpha_overrides)[i];
    attach_set(model, *sets[i], a);
  }
}

std::int64_t count_params(const AdapterSet& set) {
  std::int64_t n = 0;
  for (const auto& [_, ad] : set.adapters)
    n += static_cast<std::int64_t>(ad.rank) * (ad.d + ad.k);
  return n;
}

void save_adapters(const AdapterSet& set, const std::string& path) {
  Checkpoint ck;
  for (const auto& [target, ad] : set.adapters) {
    ck.put(target + ".B", ad.B->val);
    ck.put(target + ".A", ad.A->val);
  }
  ck.metadata["kind"] = "adapter_set";
  ck.metadata["family"] = lora_family_name(set.family);
  ck.metadata["rank"] = std::to_string(set.rank);
  ck.metadata["alpha"] = std::to_string(set.alpha);
  ck.metadata["base_fingerprint"] = fingerprint_hex(set.base_fingerprint);
  ck.metadata["id"] = set.id;
  ck.save(path);
}

AdapterSet load_adapters(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.metadata.count("kind") && ck.metadata.at("kind") != "adapter_set")
    throw ContainerError("load_adapters: '" + path + "' is not an adapter set");
  AdapterSet set;
  set.family = lora_family_from_name(ck.metadata.at("family"));
  set.rank = std::stoi(ck.metadata.at("rank"));
  set.alpha = std::stof(ck.metadata.at("alpha"));
  set.base_fingerprint = std::stoull(ck.metadata.at("base_fingerprint"), nullptr, 16);
  set.id = ck.metadata.count("id") ? ck.metadata.at("id") : ("custom:" + path);

  for (const auto& [name, t] : ck.tensors) {
    if (name.size() < 2 || name.substr(name.size() - 2) != ".B") continue;
    const std::string target = name.substr(0, name.size() - 2);
    const Tensor& B = t;
    if (!ck.has(target + ".A")) throw ContainerError("load_adapters: missing A for " + target);
    const Tensor& A = ck.get(target + ".A");
    if (B.ndim() != 2 || A.ndim() != 2 || B.dim(1) != A.dim(0))
      throw ContainerError("load_adapters: inconsistent shapes for " + target);
    Adapter ad;
    ad.target = target;
    ad.d = B.dim(0);
    ad.k = A.dim(1);
    ad.rank = B.dim(1);
    ad.alpha = set.alpha;
    ad.B = ag::leaf(B);
    ad.A = ag::leaf(A);
    set.adapters.emplace(target, std::move(ad));
  }
  if (set.adapters.empty()) throw ContainerError("load_adapters: no adapters in '" + path + "'");
  return set;
}

}  // namespace motionlab
