// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "motionlab/absorbers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "motionlab/checkpoint.hpp"
#include "motionlab/errors.hpp"
#include "motionlab/optim.hpp"

namespace motionlab {

void CropConfig::validate() const {
  if (!(ratio_min > 0.0 && ratio_min <= ratio_max && ratio_max <= 1.0))
    throw ConfigError("crop: need 0 < ratio_min <= ratio_max <= 1");
}

double draw_crop_ratio(Rng& rng, const CropConfig& cfg) {
  cfg.validate();
  return rng.uniform(cfg.ratio_min, cfg.ratio_max);
}

namespace {

Tensor bilinear_resize(const Tensor& src, int H, int W) {
  const int C = src.dim(0), h = src.dim(1), w = src.dim(2);
  Tensor out({C, H, W});
  const double sy = static_cast<double>(h) / H;
  const double sx = static_cast<double>(w) / W;
  for (int y = 0; y < H; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < W; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - x0;
      for (int c = 0; c < C; ++c) {
        const double top = (1 - wx) * src.at3(c, y0, x0) + wx * src.at3(c, y0, x1);
        const double bot = (1 - wx) * src.at3(c, y1, x0) + wx * src.at3(c, y1, x1);
        out.at3(c, y, x) = static_cast<float>((1 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

}  // namespace

Tensor random_patch_crop(const Tensor& frame, Rng& rng, const CropConfig& cfg,
                         std::vector<std::string>* warnings) {
  cfg.validate();
  if (!cfg.enabled) return frame;
  if (frame.ndim() != 3) throw ShapeError("crop: frame must be (C, H, W)");
  const int C = frame.dim(0), H = frame.dim(1), W = frame.dim(2);
  if (H < 4 || W < 4) {
    if (warnings)
      warnings->push_back("crop skipped: frame " + frame.shape_str() + " below 4px minimum");
    return frame;
  }
  const double ratio = rng.uniform(cfg.ratio_min, cfg.ratio_max);
  const int ch = std::max(1, static_cast<int>(std::lround(ratio * H)));
  const int cw = std::max(1, static_cast<int>(std::lround(ratio * W)));
  const int oy = static_cast<int>(rng.uniform_int(H - ch + 1));
  const int ox = static_cast<int>(rng.uniform_int(W - cw + 1));
  Tensor patch({C, ch, cw});
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) patch.at3(c, y, x) = frame.at3(c, oy + y, ox + x);
  return bilinear_resize(patch, H, W);
}

// ---------------------------------------------------------------------------
// textual inversion
// ---------------------------------------------------------------------------

std::string TokenDelta::phrase() const {
  std::string s;
  for (size_t i = 0; i < placeholders.size(); ++i) {
    if (i) s += ' ';
    s += placeholders[i];
  }
  return s;
}

TokenDelta init_textual_inversion(TextEncoder& enc, int n_tokens,
                                  const std::vector<std::string>& init_words) {
  if (n_tokens < kMinInversionTokens || n_tokens > kMaxInversionTokens)
    throw RankError("textual inversion: n_tokens must be in [" +
                    std::to_string(kMinInversionTokens) + ", " +
                    std::to_string(kMaxInversionTokens) + "]");
  if (static_cast<int>(init_words.size()) != n_tokens)
    throw ConfigError("textual inversion: need one initializer word per token");
  TokenDelta delta;
  delta.embeddings = Tensor({n_tokens, enc.dim()});
  for (int i = 0; i < n_tokens; ++i) {
    const Tensor row = enc.embedding_row(init_words[static_cast<size_t>(i)]);
    std::copy(row.v.begin(), row.v.end(),
              delta.embeddings.v.begin() + static_cast<std::ptrdiff_t>(i) * enc.dim());
    const std::string name = "<s" + std::to_string(i) + ">";
    enc.vocab().add_placeholder(name);
    delta.placeholders.push_back(name);
    delta.init_words.push_back(init_words[static_cast<size_t>(i)]);
  }
  return delta;
}

void register_token_delta(TextEncoder& enc, const TokenDelta& delta) {
  if (delta.embeddings.ndim() != 2 || delta.embeddings.dim(1) != enc.dim())
    throw CompatError("token delta: embedding width does not match encoder");
  for (const auto& p : delta.placeholders)
    if (!enc.vocab().contains(p)) enc.vocab().add_placeholder(p);
}

void save_token_delta(const TokenDelta& delta, const std::string& path) {
  Checkpoint ck;
  ck.put("delta", delta.embeddings);
  ck.metadata["kind"] = "token_delta";
  std::string ps, ws;
  for (size_t i = 0; i < delta.placeholders.size(); ++i) {
    if (i) {
      ps += ' ';
      ws += ' ';
    }
    ps += delta.placeholders[i];
    ws += delta.init_words[i];
  }
  ck.metadata["placeholders"] = ps;
  ck.metadata["init_words"] = ws;
  ck.save(path);
}

TokenDelta load_token_delta(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.metadata.count("kind") == 0 || ck.metadata.at("kind") != "token_delta")
    throw ContainerError("'" + path + "' is not a token-delta artifact");
  TokenDelta delta;
  delta.embeddings = ck.get("delta");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string w;
    while (iss >> w) out.push_back(w);
    return out;
  };
  delta.placeholders = split(ck.metadata.at("placeholders"));
  delta.init_words = split(ck.metadata.at("init_words"));
  if (delta.placeholders.size() != static_cast<size_t>(delta.embeddings.dim(0)))
    throw ContainerError("token delta: placeholder count does not match embedding rows");
  return delta;
}

// ---------------------------------------------------------------------------
// stage-1 training
// ---------------------------------------------------------------------------

namespace {

/// Canonical pool order: content hash, so the trajectory does not depend on
/// how the unordered frame set happened to be listed.
std::vector<int> canonical_order(const std::vector<Tensor>& frames) {
  std::vector<int> idx(frames.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return hash_tensor(frames[static_cast<size_t>(a)]) <
           hash_tensor(frames[static_cast<size_t>(b)]);
  });
  return idx;
}

void clear_grads(const std::map<std::string, ag::Var>& params) {
  for (const auto& [k, v] : params) {
    (void)k;
    if (v && !v->grad.v.empty()) v->grad.fill(0.0f);
  }
}

using TextFn = std::function<ag::Var()>;

void run_stage1(Denoiser& model, const NoiseSchedule& sched, const std::vector<Tensor>& frames,
                const TextFn& make_text, const std::map<std::string, ag::Var>& trainable,
                const std::map<std::string, ag::Var>* extra_to_clear,
                const AbsorberTrainConfig& cfg, StageTrace* trace) {
  if (frames.empty()) throw DataError("stage 1: empty frame set");
  for (const auto& f : frames)
    if (f.ndim() != 3 || f.dim(0) != model.config().channels ||
        f.dim(1) != model.config().height || f.dim(2) != model.config().width)
      throw ShapeError("stage 1: frame shape " + f.shape_str() + " does not match model");

  Adam opt(cfg.lr);
  Rng rng(cfg.seed);
  const std::vector<int> canon = canonical_order(frames);
  std::vector<int> order;
  size_t cursor = 0;
  const int C = model.config().channels, H = model.config().height, W = model.config().width;

  for (int step = 0; step < cfg.steps; ++step) {
    ag::Var loss;
    for (int b = 0; b < cfg.batch; ++b) {
      if (cursor >= order.size()) {
        order = canon;
        rng.shuffle(order);
        cursor = 0;
      }
      const Tensor& raw = frames[static_cast<size_t>(order[cursor++])];
      Tensor frame = random_patch_crop(raw, rng, cfg.crop, trace ? &trace->warnings : nullptr);
      const int t = static_cast<int>(rng.uniform_int(sched.T));
      Tensor eps = rng.randn({1, C, H, W});
      Tensor x0(frame);
      x0.shape = {1, C, H, W};
      const Tensor x_t = q_sample(x0, t, eps, sched);
      ag::Var pred = model.forward(ag::constant(x_t), t, make_text());
      ag::Var term = ag::mse(pred, ag::constant(v_target(x0, eps, t, sched)));
      loss = loss ? ag::add(loss, term) : term;
    }
    loss = ag::scale(loss, 1.0f / static_cast<float>(cfg.batch));
    const double val = loss->val[0];
    if (!std::isfinite(val))
      throw StepError("stage 1: non-finite loss at step " + std::to_string(step));
    if (trace) trace->losses.push_back(val);
    ag::backward(loss);
    opt.step(trainable);
    clear_grads(model.params());
    if (extra_to_clear) clear_grads(*extra_to_clear);
  }
}

}  // namespace

AdapterSet train_slora_absorber(Denoiser& model, const TextEncoder& enc,
                                const NoiseSchedule& sched, const std::vector<Tensor>& frames,
                                const std::string& y_s, int rank, float alpha,
                                const AbsorberTrainConfig& cfg, StageTrace* trace) {
  if (!model.temporal_bypass())
    throw ContractError("train_slora_absorber: temporal bypass must be engaged");
  AdapterSet set = inject(model, LoraFamily::Spatial, rank, alpha, cfg.seed);
  std::map<std::string, ag::Var> trainable;
  for (auto& [target, ad] : set.adapters) {
    trainable[target + ".B"] = ad.B;
    trainable[target + ".A"] = ad.A;
  }
  std::map<std::string, std::uint64_t> h0;
  for (const auto& [name, var] : trainable) h0[name] = hash_tensor(var->val);
  const Tensor text = enc.encode_value(y_s);
  try {
    run_stage1(
        model, sched, frames, [&] { return ag::constant(text); }, trainable, nullptr, cfg, trace);
  } catch (...) {
    detach_set(model, set);
    throw;
  }
  detach_set(model, set);
  if (trace)
    for (const auto& [name, var] : trainable)
      if (hash_tensor(var->val) != h0.at(name)) trace->changed.push_back("slora:" + name);
  return set;
}

TokenDelta train_textinv_absorber(Denoiser& model, const TextEncoder& enc,
                                  const NoiseSchedule& sched, const std::vector<Tensor>& frames,
                                  const std::string& y_s_with_placeholders, TokenDelta delta,
                                  const AbsorberTrainConfig& cfg, StageTrace* trace) {
  if (!model.temporal_bypass())
    throw ContractError("train_textinv_absorber: temporal bypass must be engaged");
  const std::vector<int> ids = enc.vocab().tokenize(y_s_with_placeholders);
  for (const auto& p : delta.placeholders) {
    const int pid = enc.vocab().id(p);
    if (pid == Vocabulary::kUnk || std::find(ids.begin(), ids.end(), pid) == ids.end())
      throw ContractError("train_textinv_absorber: placeholder '" + p +
                          "' missing from the prompt");
  }
  ag::Var dvar = ag::leaf(delta.embeddings);
  const std::uint64_t h0 = hash_tensor(delta.embeddings);
  std::map<std::string, ag::Var> trainable{{"delta", dvar}};
  run_stage1(
      model, sched, frames, [&] { return enc.encode_ids(ids, dvar); }, trainable, &enc.params(),
      cfg, trace);
  delta.embeddings = dvar->val;
  if (trace && hash_tensor(delta.embeddings) != h0) trace->changed.push_back("token_delta");
  return delta;
}

}  // namespace motionlab
