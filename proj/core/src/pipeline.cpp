// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "motionlab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "motionlab/checkpoint.hpp"
#include "motionlab/errors.hpp"
#include "motionlab/optim.hpp"

namespace motionlab {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> words_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string w;
  while (iss >> w) out.push_back(w);
  return out;
}

bool is_article(const std::string& w) { return w == "a" || w == "an" || w == "the"; }

}  // namespace

BaseModel make_base(const DenoiserConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  BaseModel b;
  b.model = Denoiser(cfg, seed);
  b.enc = TextEncoder(cfg.text_dim, cfg.max_text_len, Vocabulary::standard(), seed + 1);
  return b;
}

std::map<std::string, std::uint64_t> hash_state(
    const Denoiser& model, const TextEncoder* enc,
    const std::vector<std::pair<std::string, const AdapterSet*>>& sets, const TokenDelta* delta) {
  std::map<std::string, std::uint64_t> h;
  for (const auto& [name, var] : model.params()) h["unet." + name] = hash_tensor(var->val);
  if (enc)
    for (const auto& [name, var] : enc->params()) h["text." + name] = hash_tensor(var->val);
  for (const auto& [prefix, set] : sets)
    for (const auto& [target, ad] : set->adapters) {
      h[prefix + ":" + target + ".B"] = hash_tensor(ad.B->val);
      h[prefix + ":" + target + ".A"] = hash_tensor(ad.A->val);
    }
  if (delta) h["token_delta"] = hash_tensor(delta->embeddings);
  return h;
}

std::vector<std::string> census_diff(const std::map<std::string, std::uint64_t>& before,
                                     const std::map<std::string, std::uint64_t>& after) {
  std::vector<std::string> out;
  for (const auto& [name, h] : after) {
    const auto it = before.find(name);
    if (it == before.end() || it->second != h) out.push_back(name);
  }
  return out;
}

BaseModel pretrain_base(const Corpus& corpus, const RunConfig& cfg, StageReport* report) {
  cfg.validate();
  if (corpus.items.empty()) throw DataError("pretrain: empty corpus");
  const auto t0 = std::chrono::steady_clock::now();

  BaseModel base = make_base(cfg.model, cfg.seed);
  const auto before = hash_state(base.model, &base.enc);

  std::map<std::string, ag::Var> trainable;
  for (const auto& [name, var] : base.model.params()) trainable["unet." + name] = var;
  for (const auto& [name, var] : base.enc.params()) trainable["text." + name] = var;

  Adam opt(cfg.pretrain.lr);
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const NoiseSchedule sched = cfg.schedule.build();
  // optional weight EMA: the shadow copy is what the caller receives
  const bool use_ema = cfg.pretrain.ema > 0.0f;
  std::map<std::string, Tensor> ema;
  if (use_ema)
    for (const auto& [name, var] : trainable) ema[name] = var->val;
  const int F = cfg.model.frames, C = cfg.model.channels, H = cfg.model.height,
            W = cfg.model.width;

  if (report) report->stage = "pretrain";
  for (int step = 0; step < cfg.pretrain.steps; ++step) {
    ag::Var loss;
    for (int b = 0; b < cfg.pretrain.batch; ++b) {
      const auto& item = corpus.items[static_cast<size_t>(rng.uniform_int(
          static_cast<std::int64_t>(corpus.items.size())))];
      if (item.video.shape != std::vector<int>{F, C, H, W})
        throw DataError("pretrain: corpus clip shape " + item.video.shape_str() +
                        " does not match model config");
      const bool drop = rng.uniform() < cfg.pretrain.cond_drop;
      ag::Var text = base.enc.encode(drop ? std::string() : item.prompts.full);
      const int t = static_cast<int>(rng.uniform_int(sched.T));
      const Tensor eps = rng.randn({F, C, H, W});
      const Tensor x_t = q_sample(item.video, t, eps, sched);
      ag::Var term = ag::mse(base.model.forward(ag::constant(x_t), t, text),
                             ag::constant(v_target(item.video, eps, t, sched)));
      loss = loss ? ag::add(loss, term) : term;
    }
    loss = ag::scale(loss, 1.0f / static_cast<float>(cfg.pretrain.batch));
    const double val = loss->val[0];
    if (!std::isfinite(val)) {
      if (report) report->aborted = true;
      break;
    }
    if (report) {
      report->losses.push_back(val);
      report->steps_run = step + 1;
    }
    ag::backward(loss);
    if (cfg.pretrain.lr_final > 0.0f && cfg.pretrain.steps > 1) {
      const double frac = static_cast<double>(step) / (cfg.pretrain.steps - 1);
      const double cosw = 0.5 * (1.0 + std::cos(frac * 3.14159265358979323846));
      opt.set_lr(cfg.pretrain.lr_final +
                 (cfg.pretrain.lr - cfg.pretrain.lr_final) * static_cast<float>(cosw));
    }
    opt.step(trainable);
    if (use_ema) {
      const float d = cfg.pretrain.ema;
      for (const auto& [name, var] : trainable) {
        Tensor& e = ema[name];
        for (std::int64_t i = 0; i < e.numel(); ++i)
          e[i] = d * e[i] + (1.0f - d) * var->val[i];
      }
    }
  }
  if (use_ema)
    for (const auto& [name, var] : trainable) var->val = ema[name];

  if (report) {
    report->census = census_diff(before, hash_state(base.model, &base.enc));
    report->wall_seconds = seconds_since(t0);
  }
  return base;
}

std::vector<Tensor> clip_frames(const VideoTensor& video) {
  const int F = video.dim(0), C = video.dim(1), H = video.dim(2), W = video.dim(3);
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(F));
  for (int f = 0; f < F; ++f) {
    Tensor frame({C, H, W});
    std::copy_n(&video.v[static_cast<size_t>(f) * C * H * W], static_cast<size_t>(C) * H * W,
                frame.v.begin());
    out.push_back(std::move(frame));
  }
  return out;
}

VideoTensor subsample_frames(const VideoTensor& video, int F) {
  const int F0 = video.dim(0);
  if (F < 1 || F > F0) throw DataError("subsample: need 1 <= F <= source frames");
  if (F == F0) return video;
  const int C = video.dim(1), H = video.dim(2), W = video.dim(3);
  VideoTensor out({F, C, H, W});
  const std::int64_t per = static_cast<std::int64_t>(C) * H * W;
  for (int i = 0; i < F; ++i) {
    const int src = static_cast<int>(static_cast<std::int64_t>(i) * F0 / F);
    std::copy_n(&video.v[static_cast<size_t>(src) * per], static_cast<size_t>(per),
                out.v.begin() + static_cast<std::ptrdiff_t>(i) * per);
  }
  return out;
}

std::vector<std::string> subject_words(const std::string& y_s, int n_tokens) {
  std::vector<std::string> content;
  for (const auto& w : words_of(y_s))
    if (!is_article(w)) content.push_back(w);
  if (content.empty()) throw ConfigError("spatial caption has no content words");
  while (static_cast<int>(content.size()) < n_tokens) content.push_back(content.back());
  content.resize(static_cast<size_t>(n_tokens));
  return content;
}

std::string substitute_subject(const std::string& caption, const std::string& y_s,
                               const std::string& phrase) {
  std::vector<std::string> subject;
  for (const auto& w : words_of(y_s))
    if (!is_article(w)) subject.push_back(w);
  std::string out;
  bool substituted = false;
  for (const auto& w : words_of(caption)) {
    const bool is_subject = std::find(subject.begin(), subject.end(), w) != subject.end();
    std::string emit;
    if (is_subject) {
      if (substituted) continue;
      substituted = true;
      emit = phrase;
    } else {
      emit = w;
    }
    if (!out.empty()) out += ' ';
    out += emit;
  }
  return out;
}

Stage1Artifacts stage1(BaseModel& base, const VideoTensor& reference, const PromptPair& prompts,
                       const RunConfig& cfg, std::vector<StageReport>* reports) {
  cfg.validate();
  Stage1Artifacts out;
  const auto& sel = cfg.stage1.absorber;
  if (sel.mode == AbsorberMode::None) return out;

  if (sel.mode == AbsorberMode::External) {
    Checkpoint ck = Checkpoint::load(sel.external_path);
    if (ck.metadata.count("kind") && ck.metadata.at("kind") == "token_delta") {
      out.token_delta = load_token_delta(sel.external_path);
      register_token_delta(base.enc, *out.token_delta);
    } else {
      out.slora = load_adapters(sel.external_path);
    }
    return out;
  }

  const VideoTensor clip = subsample_frames(reference, cfg.model.frames);
  const std::vector<Tensor> frames = clip_frames(clip);
  AbsorberTrainConfig acfg;
  acfg.steps = cfg.stage1.steps;
  acfg.batch = cfg.stage1.batch;
  acfg.lr = cfg.stage1.lr;
  acfg.seed = cfg.seed;
  acfg.crop = cfg.stage1.crop;

  const bool was_bypassed = base.model.temporal_bypass();
  base.model.set_temporal_bypass(true);
  try {
    if (sel.mode == AbsorberMode::SLora || sel.mode == AbsorberMode::Dual) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto before = hash_state(base.model, &base.enc);
      StageTrace trace;
      out.slora = train_slora_absorber(base.model, base.enc, cfg.schedule.build(), frames,
                                       prompts.spatial, cfg.stage1.rank, cfg.stage1.alpha, acfg,
                                       &trace);
      if (reports) {
        StageReport r;
        r.stage = "stage1.slora";
        r.steps_run = acfg.steps;
        r.losses = trace.losses;
        r.warnings = trace.warnings;
        r.census = census_diff(before, hash_state(base.model, &base.enc));
        r.census.insert(r.census.end(), trace.changed.begin(), trace.changed.end());
        r.wall_seconds = seconds_since(t0);
        reports->push_back(std::move(r));
      }
    }
    if (sel.mode == AbsorberMode::TextInv || sel.mode == AbsorberMode::Dual) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto words = subject_words(prompts.spatial, cfg.stage1.n_tokens);
      TokenDelta delta = init_textual_inversion(base.enc, cfg.stage1.n_tokens, words);
      const std::string prompt = substitute_subject(prompts.spatial, prompts.spatial,
                                                    delta.phrase());
      const auto before = hash_state(base.model, &base.enc);
      StageTrace trace;
      out.token_delta = train_textinv_absorber(base.model, base.enc, cfg.schedule.build(), frames,
                                               prompt, std::move(delta), acfg, &trace);
      if (reports) {
        StageReport r;
        r.stage = "stage1.textinv";
        r.steps_run = acfg.steps;
        r.losses = trace.losses;
        r.warnings = trace.warnings;
        r.census = census_diff(before, hash_state(base.model, &base.enc));
        r.census.insert(r.census.end(), trace.changed.begin(), trace.changed.end());
        r.wall_seconds = seconds_since(t0);
        reports->push_back(std::move(r));
      }
    }
  } catch (...) {
    base.model.set_temporal_bypass(was_bypassed);
    throw;
  }
  base.model.set_temporal_bypass(was_bypassed);
  return out;
}

AdapterSet stage2(BaseModel& base, const Stage1Artifacts& absorbers, const VideoTensor& reference,
                  const PromptPair& prompts, const RunConfig& cfg, StageReport* report) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  if (base.model.temporal_bypass())
    throw ContractError("stage 2: temporal bypass must be off");

  const VideoTensor clip = subsample_frames(reference, cfg.model.frames);
  if (clip.dim(1) != cfg.model.channels || clip.dim(2) != cfg.model.height ||
      clip.dim(3) != cfg.model.width)
    throw DataError("stage 2: reference clip shape " + clip.shape_str() +
                    " does not match model config");

  // absorbers load frozen; fingerprint mismatches surface here
  if (absorbers.slora) attach_set(base.model, *absorbers.slora);
  const Tensor* delta_rows = nullptr;
  std::string y = prompts.full;
  if (absorbers.token_delta) {
    register_token_delta(base.enc, *absorbers.token_delta);
    delta_rows = &absorbers.token_delta->embeddings;
    y = substitute_subject(prompts.full, prompts.spatial, absorbers.token_delta->phrase());
  }

  std::vector<std::pair<std::string, const AdapterSet*>> frozen;
  if (absorbers.slora) frozen.emplace_back("slora", &*absorbers.slora);
  const auto before = hash_state(base.model, &base.enc, frozen,
                                 absorbers.token_delta ? &*absorbers.token_delta : nullptr);

  AdapterSet tlora = inject(base.model, LoraFamily::Temporal, cfg.stage2.rank, cfg.stage2.alpha,
                            cfg.seed);
  std::map<std::string, ag::Var> trainable;
  for (auto& [target, ad] : tlora.adapters) {
    trainable[target + ".B"] = ad.B;
    trainable[target + ".A"] = ad.A;
  }
  std::map<std::string, std::uint64_t> tl0;
  for (const auto& [name, var] : trainable) tl0[name] = hash_tensor(var->val);

  const Tensor text = base.enc.encode_value(y, delta_rows);
  const NoiseSchedule sched = cfg.schedule.build();
  Adam opt(cfg.stage2.lr);
  Rng rng(cfg.seed ^ 0xa076bc9b1d1c1f2bULL);

  try {
    for (int step = 0; step < cfg.stage2.steps; ++step) {
      ag::Var loss;
      for (int b = 0; b < cfg.stage2.batch; ++b) {
        const int t = static_cast<int>(rng.uniform_int(sched.T));
        const Tensor eps = rng.randn(clip.shape);
        const Tensor x_t = q_sample(clip, t, eps, sched);
        ag::Var term =
            ag::mse(base.model.forward(ag::constant(x_t), t, ag::constant(text)),
                    ag::constant(v_target(clip, eps, t, sched)));
        loss = loss ? ag::add(loss, term) : term;
      }
      loss = ag::scale(loss, 1.0f / static_cast<float>(cfg.stage2.batch));
      const double val = loss->val[0];
      if (!std::isfinite(val))
        throw StepError("stage 2: non-finite loss at step " + std::to_string(step));
      if (report) {
        report->losses.push_back(val);
        report->steps_run = step + 1;
      }
      ag::backward(loss);
      opt.step(trainable);
      for (const auto& [name, var] : base.model.params()) {
        (void)name;
        if (!var->grad.v.empty()) var->grad.fill(0.0f);
      }
    }
  } catch (...) {
    detach_set(base.model, tlora);
    if (absorbers.slora) detach_set(base.model, *absorbers.slora);
    throw;
  }

  if (report) {
    report->stage = "stage2";
    auto after = hash_state(base.model, &base.enc, frozen,
                            absorbers.token_delta ? &*absorbers.token_delta : nullptr);
    report->census = census_diff(before, after);
    for (const auto& [name, var] : trainable)
      if (hash_tensor(var->val) != tl0.at(name)) report->census.push_back("tlora:" + name);
    report->wall_seconds = seconds_since(t0);
  }

  detach_set(base.model, tlora);
  if (absorbers.slora) detach_set(base.model, *absorbers.slora);

  // Re-key the set by its trained weights: two adapters trained on different
  // references against the same base must have distinct ids so they can be
  // attached together at inference.
  std::uint64_t idh = tlora.base_fingerprint;
  for (const auto& [target, ad] : tlora.adapters) {
    idh = fnv1a64(target.data(), target.size(), idh);
    idh = fnv1a64(ad.B->val.v.data(), ad.B->val.v.size() * sizeof(float), idh);
    idh = fnv1a64(ad.A->val.v.data(), ad.A->val.v.size() * sizeof(float), idh);
  }
  tlora.id = "temporal:" + fingerprint_hex(idh);
  return tlora;
}

namespace {

Denoiser compose_view(const BaseModel& base, const std::vector<const AdapterSet*>& t_loras) {
  Denoiser view = base.model.clone();
  view.set_temporal_bypass(false);
  if (!t_loras.empty()) compose(view, t_loras);
  return view;
}

}  // namespace

std::vector<VideoTensor> infer(const BaseModel& base,
                               const std::vector<const AdapterSet*>& t_loras,
                               const InferRequest& req, const NoiseSchedule& sched) {
  const Denoiser view = compose_view(base, t_loras);
  const auto& cfg = base.model.config();
  const Tensor cond = base.enc.encode_value(req.prompt);
  Tensor uncond;
  const bool guided = req.sampler.guidance != 1.0f;
  if (guided) uncond = base.enc.encode_value("");

  std::vector<VideoTensor> out;
  for (const std::uint64_t seed : req.seeds) {
    Tensor z;
    if (req.init_latent) {
      if (req.init_latent->shape != std::vector<int>{cfg.frames, cfg.channels, cfg.height,
                                                     cfg.width})
        throw ShapeError("infer: init latent shape " + req.init_latent->shape_str() +
                         " does not match model config");
      z = *req.init_latent;
    } else {
      Rng rng(seed);
      z = rng.randn({cfg.frames, cfg.channels, cfg.height, cfg.width});
    }
    out.push_back(ddim_sample(view, z, cond, guided ? &uncond : nullptr, sched, req.sampler));
  }
  return out;
}

Tensor invert_reference(const BaseModel& base, const std::vector<const AdapterSet*>& t_loras,
                        const VideoTensor& video, const std::string& prompt,
                        const SamplerConfig& sampler, const NoiseSchedule& sched) {
  const Denoiser view = compose_view(base, t_loras);
  const Tensor cond = base.enc.encode_value(prompt);
  Tensor uncond;
  const bool guided = sampler.guidance != 1.0f;
  if (guided) uncond = base.enc.encode_value("");
  return ddim_invert(view, video, cond, guided ? &uncond : nullptr, sched, sampler);
}

void write_manifest(const std::string& dir, const RunConfig& cfg,
                    const std::map<std::string, std::string>& artifacts) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["config"] = run_config_text(cfg);
  j["artifacts"] = artifacts;
  std::ofstream f(std::filesystem::path(dir) / "manifest.json", std::ios::trunc);
  if (!f) throw DataError("cannot write manifest under '" + dir + "'");
  f << j.dump(2) << "\n";
}

}  // namespace motionlab
