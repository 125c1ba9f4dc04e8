// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "motionlab/errors.hpp"
#include "motionlab/lora.hpp"

using namespace motionlab;
namespace fs = std::filesystem;

namespace {

DenoiserConfig tiny_config() {
  DenoiserConfig cfg;
  cfg.frames = 4;
  cfg.height = 8;
  cfg.width = 8;
  cfg.base_width = 8;
  cfg.width_multipliers = {1, 2};
  cfg.heads = 2;
  cfg.text_dim = 8;
  cfg.max_text_len = 4;
  cfg.time_embed_dim = 16;
  return cfg;
}

void perturb(Denoiser& model, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& [name, var] : model.params())
    for (auto& x : var->val.v) x += 0.05f * rng.gaussian();
}

void randomize_set(AdapterSet& set, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& [target, ad] : set.adapters)
    for (auto& x : ad.B->val.v) x = 0.1f * rng.gaussian();
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape &&
         std::memcmp(a.v.data(), b.v.data(), a.v.size() * sizeof(float)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

}  // namespace

TEST_CASE("make_adapter init and rank bounds") {
  Adapter ad = make_adapter("t", 8, 6, 3, 0.5f, 7);
  CHECK(ad.B->val.shape == std::vector<int>{8, 3});
  CHECK(ad.A->val.shape == std::vector<int>{3, 6});
  for (float x : ad.B->val.v) CHECK(x == 0.0f);
  bool nonzero = false;
  for (float x : ad.A->val.v) nonzero = nonzero || x != 0.0f;
  CHECK(nonzero);
  CHECK_THROWS_AS(make_adapter("t", 8, 6, 0, 1.0f, 7), RankError);
  CHECK_THROWS_AS(make_adapter("t", 8, 6, 7, 1.0f, 7), RankError);
}

TEST_CASE("adapter low-rank path equals the explicit dense delta") {
  Rng rng(1);
  const int d = 6, k = 5, r = 2;
  Adapter ad = make_adapter("t", d, k, r, 0.7f, 2);
  for (auto& x : ad.B->val.v) x = rng.gaussian();
  const Tensor w0 = rng.randn({d, k});
  const Tensor x = rng.randn({3, k});

  const Tensor low = adapter_forward(w0, ad, x);

  // dense oracle: y = x (W0 + alpha B A)^T
  Tensor weff = w0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < k; ++j) {
      double acc = 0;
      for (int rr = 0; rr < r; ++rr) acc += ad.B->val.at2(i, rr) * ad.A->val.at2(rr, j);
      weff.at2(i, j) += 0.7f * static_cast<float>(acc);
    }
  Tensor dense({3, d});
  for (int n = 0; n < 3; ++n)
    for (int i = 0; i < d; ++i) {
      double acc = 0;
      for (int j = 0; j < k; ++j) acc += x.at2(n, j) * weff.at2(i, j);
      dense.at2(n, i) = static_cast<float>(acc);
    }
  CHECK(max_abs_diff(low, dense) <= 1e-5);
}

TEST_CASE("inject targets q/k/v of the selected family only") {
  Denoiser model(tiny_config(), 1);
  AdapterSet set = inject(model, LoraFamily::Temporal, 4, 1.0f, 0);
  CHECK(set.family == LoraFamily::Temporal);
  CHECK(set.rank == 4);
  CHECK(set.base_fingerprint == model_fingerprint(model));
  for (const auto& [target, ad] : set.adapters) {
    CHECK(target.find("tcfa") != std::string::npos);
    CHECK(target.find(".wo") == std::string::npos);
  }
  CHECK(set.adapters.size() == model.census_family(AttnFamily::TCFA).size() / 4 * 3);
  detach_set(model, set);

  AdapterSet sset = inject(model, LoraFamily::Spatial, 1, 0.5f, 0);
  for (const auto& [target, ad] : sset.adapters)
    CHECK((target.find("ssa") != std::string::npos || target.find("sca") != std::string::npos));
  detach_set(model, sset);
}

TEST_CASE("zero-init injection leaves the model bit-identical") {
  Denoiser model(tiny_config(), 2);
  perturb(model, 3);
  Rng rng(4);
  const auto cfg = model.config();
  const Tensor clip = rng.randn({cfg.frames, cfg.channels, cfg.height, cfg.width});
  const Tensor text = rng.randn({cfg.max_text_len, cfg.text_dim});
  const Tensor before = model.predict(clip, 9, text);

  AdapterSet t = inject(model, LoraFamily::Temporal, 4, 1.0f, 5);
  AdapterSet s = inject(model, LoraFamily::Spatial, 1, 0.5f, 6);
  CHECK(bit_equal(model.predict(clip, 9, text), before));
  detach_set(model, t);
  detach_set(model, s);
}

TEST_CASE("double injection of a family is rejected") {
  Denoiser model(tiny_config(), 2);
  AdapterSet t = inject(model, LoraFamily::Temporal, 4, 1.0f, 5);
  CHECK_THROWS_WITH_AS(inject(model, LoraFamily::Temporal, 2, 1.0f, 6),
                       doctest::Contains("compose"), SelectorError);
  detach_set(model, t);
}

TEST_CASE("attach_set enforces fingerprint compatibility") {
  Denoiser model(tiny_config(), 2);
  AdapterSet set = inject(model, LoraFamily::Temporal, 2, 1.0f, 5);
  detach_set(model, set);

  DenoiserConfig other_cfg = tiny_config();
  other_cfg.base_width = 16;
  Denoiser other(other_cfg, 2);
  CHECK_THROWS_AS(attach_set(other, set), CompatError);

  attach_set(model, set);
  CHECK(model.set_attached(set.id));
  CHECK_THROWS_AS(attach_set(model, set), SelectorError);
  detach_set(model, set);
  CHECK_FALSE(model.set_attached(set.id));
}

TEST_CASE("merge equals the adapter path within 1e-5") {
  Denoiser model(tiny_config(), 7);
  perturb(model, 8);
  AdapterSet set = inject(model, LoraFamily::Temporal, 3, 0.8f, 9);
  randomize_set(set, 10);

  Rng rng(11);
  const auto cfg = model.config();
  const Tensor text = rng.randn({cfg.max_text_len, cfg.text_dim});

  AdapterSet copy = set;
  Denoiser merged = merge(model, copy);
  CHECK(copy.consumed);
  CHECK_THROWS_AS(merge(model, copy), ContractError);

  for (int trial = 0; trial < 20; ++trial) {
    const Tensor clip = rng.randn({cfg.frames, cfg.channels, cfg.height, cfg.width});
    const Tensor via_adapters = model.predict(clip, trial % 30, text);
    const Tensor via_merge = merged.predict(clip, trial % 30, text);
    CHECK(max_abs_diff(via_adapters, via_merge) <= 1e-5);
  }
  detach_set(model, set);
}

TEST_CASE("compose is order-independent") {
  Denoiser a(tiny_config(), 12);
  perturb(a, 13);
  Denoiser b = a.clone();

  AdapterSet s1 = inject(a, LoraFamily::Temporal, 2, 1.0f, 14);
  detach_set(a, s1);
  AdapterSet s2 = inject(a, LoraFamily::Spatial, 1, 0.5f, 15);
  detach_set(a, s2);
  randomize_set(s1, 16);
  randomize_set(s2, 17);

  compose(a, {&s1, &s2});
  compose(b, {&s2, &s1});

  Rng rng(18);
  const auto cfg = a.config();
  const Tensor clip = rng.randn({cfg.frames, cfg.channels, cfg.height, cfg.width});
  const Tensor text = rng.randn({cfg.max_text_len, cfg.text_dim});
  CHECK(bit_equal(a.predict(clip, 1, text), b.predict(clip, 1, text)));
}

TEST_CASE("count_params matches the closed form") {
  Denoiser model(tiny_config(), 19);
  AdapterSet set = inject(model, LoraFamily::Temporal, 4, 1.0f, 20);
  std::int64_t expect = 0;
  for (const auto& [target, ad] : set.adapters) expect += 4LL * (ad.d + ad.k);
  CHECK(count_params(set) == expect);
  detach_set(model, set);
}

TEST_CASE("adapter save/load round-trips bit-exactly") {
  Denoiser model(tiny_config(), 21);
  AdapterSet set = inject(model, LoraFamily::Spatial, 2, 0.25f, 22);
  detach_set(model, set);
  randomize_set(set, 23);

  const std::string path = (fs::temp_directory_path() / "motionlab_adapters.ckpt").string();
  save_adapters(set, path);
  const AdapterSet back = load_adapters(path);
  CHECK(back.id == set.id);
  CHECK(back.family == set.family);
  CHECK(back.rank == set.rank);
  CHECK(back.alpha == set.alpha);
  CHECK(back.base_fingerprint == set.base_fingerprint);
  REQUIRE(back.adapters.size() == set.adapters.size());
  for (const auto& [target, ad] : set.adapters) {
    CHECK(bit_equal(back.adapters.at(target).B->val, ad.B->val));
    CHECK(bit_equal(back.adapters.at(target).A->val, ad.A->val));
  }
  fs::remove(path);
}

TEST_CASE("trainable lists both factors of every adapter") {
  Denoiser model(tiny_config(), 24);
  AdapterSet set = inject(model, LoraFamily::Temporal, 2, 1.0f, 25);
  CHECK(set.trainable().size() == 2 * set.adapters.size());
  detach_set(model, set);
}
