// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: one pass/fail line per criterion. Criteria 1-5 and 11 run
// on small randomized models; criteria 6-10 share one pretrained toy base
// (cached in the work directory across runs, keyed by its recipe).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "motionlab/absorbers.hpp"
#include "motionlab/errors.hpp"
#include "motionlab/config.hpp"
#include "motionlab/data.hpp"
#include "motionlab/diffusion.hpp"
#include "motionlab/lora.hpp"
#include "motionlab/metrics.hpp"
#include "motionlab/model.hpp"
#include "motionlab/pipeline.hpp"
#include "motionlab/tensor.hpp"

namespace fs = std::filesystem;
using namespace motionlab;

namespace {

// ---------------------------------------------------------------------------
// harness
// ---------------------------------------------------------------------------

struct Result {
  int id = 0;
  bool pass = false;
  std::string detail;
};
std::vector<Result> g_results;

void record(int id, bool pass, const std::string& detail) {
  g_results.push_back({id, pass, detail});
  std::fprintf(stderr, "  criterion %d -> %s (%s)\n", id, pass ? "pass" : "FAIL",
               detail.c_str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename F>
void criterion(int id, const char* what, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::fprintf(stderr, "running criterion %d: %s\n", id, what);
  try {
    body();
  } catch (const std::exception& e) {
    record(id, false, std::string("exception: ") + e.what());
  }
  std::fprintf(stderr, "  criterion %d took %.1f s\n", id, seconds_since(t0));
}

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

DenoiserConfig tiny_config() {
  DenoiserConfig cfg;
  cfg.frames = 4;
  cfg.height = 8;
  cfg.width = 8;
  cfg.base_width = 8;
  cfg.width_multipliers = {1, 2};
  cfg.heads = 2;
  cfg.text_dim = 8;
  cfg.max_text_len = 8;
  cfg.time_embed_dim = 16;
  return cfg;
}

// A fresh model's output head is zero-initialized, which makes behavioural
// comparisons vacuous and gradients identically zero; every functional test
// runs on a perturbed copy instead.
void perturb(Denoiser& model, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& [name, var] : model.params()) {
    (void)name;
    for (auto& v : var->val.v) v += 0.05f * rng.gaussian();
  }
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape &&
         std::memcmp(a.v.data(), b.v.data(), a.v.size() * sizeof(float)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i)
    m = std::max(m, static_cast<double>(std::fabs(a.v[i] - b.v[i])));
  return m;
}

double mse(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const double d = a.v[i] - b.v[i];
    s += d * d;
  }
  return s / static_cast<double>(a.v.size());
}

Tensor random_clip(Rng& rng, const DenoiserConfig& cfg) {
  return rng.randn({cfg.frames, cfg.channels, cfg.height, cfg.width});
}

Tensor random_text(Rng& rng, const DenoiserConfig& cfg) {
  return rng.randn({cfg.max_text_len, cfg.text_dim});
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

// ---------------------------------------------------------------------------
// criteria 1-3: adapter identities on a small perturbed model
// ---------------------------------------------------------------------------

void criterion1() {
  const DenoiserConfig cfg = tiny_config();
  Denoiser model(cfg, 11);
  perturb(model, 21);
  const Denoiser ref = model.clone();
  inject(model, LoraFamily::Temporal, 4, 1.0f, 1);
  inject(model, LoraFamily::Spatial, 1, 0.5f, 2);
  Rng rng(31);
  for (int i = 0; i < 10; ++i) {
    const Tensor x = random_clip(rng, cfg);
    const Tensor text = random_text(rng, cfg);
    const int t = static_cast<int>(rng.uniform_int(300));
    if (!bit_equal(model.predict(x, t, text), ref.predict(x, t, text))) {
      record(1, false, "forward " + std::to_string(i) + " differs from base");
      return;
    }
  }
  record(1, true, "10 forwards bit-identical after zero-init T-LoRA(r=4) + S-LoRA(r=1)");
}

void criterion2() {
  const DenoiserConfig cfg = tiny_config();
  Denoiser model(cfg, 12);
  perturb(model, 22);
  AdapterSet set = inject(model, LoraFamily::Temporal, 4, 1.0f, 3);
  Rng rng(32);
  for (auto& [target, ad] : set.adapters) {
    (void)target;
    for (auto& v : ad.B->val.v) v = 0.1f * rng.gaussian();
    for (auto& v : ad.A->val.v) v = 0.1f * rng.gaussian();
  }
  const Denoiser merged = merge(model, set);
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    const Tensor x = random_clip(rng, cfg);
    const Tensor text = random_text(rng, cfg);
    const int t = static_cast<int>(rng.uniform_int(300));
    worst = std::max(worst, max_abs_diff(model.predict(x, t, text), merged.predict(x, t, text)));
  }
  record(2, worst <= 1e-5,
         "merged vs adapter path max-abs diff " + std::to_string(worst) + " over 20 inputs");
}

void criterion3() {
  const DenoiserConfig cfg = tiny_config();
  Denoiser model(cfg, 13);
  perturb(model, 23);
  model.set_temporal_bypass(true);
  Rng rng(33);
  for (int i = 0; i < 10; ++i) {
    const Tensor x = random_clip(rng, cfg);
    const Tensor text = random_text(rng, cfg);
    const int t = static_cast<int>(rng.uniform_int(300));
    const Tensor video = model.predict(x, t, text);
    for (int f = 0; f < cfg.frames; ++f) {
      Tensor frame({1, cfg.channels, cfg.height, cfg.width});
      const std::int64_t n = frame.numel();
      std::copy_n(x.v.begin() + f * n, n, frame.v.begin());
      const Tensor y = model.predict(frame, t, text);
      if (std::memcmp(y.v.data(), video.v.data() + f * n, n * sizeof(float)) != 0) {
        record(3, false, "clip " + std::to_string(i) + " frame " + std::to_string(f) + " differs");
        return;
      }
    }
  }
  record(3, true, "bypassed video forward equals per-frame forward bit-exactly for 10 clips");
}

// ---------------------------------------------------------------------------
// criterion 4: gradient isolation census
// ---------------------------------------------------------------------------

RunConfig tiny_run_config() {
  const std::string ini =
      "[model]\nframes = 4\nheight = 8\nwidth = 8\nbase_width = 8\n"
      "width_multipliers = 1,2\nheads = 2\ntext_dim = 8\ntime_embed_dim = 16\n"
      "[schedule]\nT = 40\n"
      "[stage1]\nsteps = 50\nbatch = 2\n"
      "[stage2]\nsteps = 50\nbatch = 1\n"
      "[infer]\nsteps = 10\n"
      "[pretrain]\nseed = 5\n";
  return run_config_from_ini(IniFile::parse(ini));
}

bool census_equals(std::vector<std::string> census, std::vector<std::string> declared,
                   std::string* why) {
  std::sort(census.begin(), census.end());
  std::sort(declared.begin(), declared.end());
  if (census == declared) return true;
  *why = "census {" + join(census) + "} != declared {" + join(declared) + "}";
  return false;
}

void criterion4() {
  RunConfig run = tiny_run_config();
  const VideoTensor reference =
      render_scene(SceneSpec{Shape::Square, 0, 1, 0.4, Motion::Right, 1.0, 2.5, 4.0}, 4, 8, 8);
  const PromptPair prompts{"a red square moving right", "a red square"};
  std::string why;

  for (const char* mode : {"slora", "textinv", "dual"}) {
    run.stage1.absorber = parse_absorber_selection(mode);
    BaseModel base = make_base(run.model, 41);
    perturb(base.model, 42);
    std::vector<StageReport> reports;
    const Stage1Artifacts art = stage1(base, reference, prompts, run, &reports);
    for (const StageReport& r : reports) {
      std::vector<std::string> declared;
      if (r.stage == "stage1.slora") {
        for (const auto& [target, ad] : art.slora->adapters) {
          (void)ad;
          declared.push_back("slora:" + target + ".B");
          declared.push_back("slora:" + target + ".A");
        }
      } else {
        declared = {"token_delta"};
      }
      if (!census_equals(r.census, declared, &why)) {
        record(4, false, r.stage + " (" + mode + "): " + why);
        return;
      }
    }
  }

  // stage 2 on top of dual absorbers
  run.stage1.absorber = parse_absorber_selection("dual");
  BaseModel base = make_base(run.model, 41);
  perturb(base.model, 42);
  std::vector<StageReport> s1r;
  const Stage1Artifacts art = stage1(base, reference, prompts, run, &s1r);
  StageReport s2r;
  const AdapterSet tlora = stage2(base, art, reference, prompts, run, &s2r);
  std::vector<std::string> declared;
  for (const auto& [target, ad] : tlora.adapters) {
    (void)ad;
    declared.push_back("tlora:" + target + ".B");
    declared.push_back("tlora:" + target + ".A");
  }
  if (!census_equals(s2r.census, declared, &why)) {
    record(4, false, "stage2: " + why);
    return;
  }
  record(4, true, "50-step censuses match declared trainable sets for all stages");
}

// ---------------------------------------------------------------------------
// criterion 5: crop-ratio law
// ---------------------------------------------------------------------------

void criterion5() {
  const int n = 10000;
  CropConfig cfg;  // documented defaults [0.33, 0.67]
  Rng rng(55);
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) {
    const double r = draw_crop_ratio(rng, cfg);
    if (r < cfg.ratio_min || r > cfg.ratio_max) {
      record(5, false, "draw " + std::to_string(r) + " outside [0.33, 0.67]");
      return;
    }
    u[static_cast<std::size_t>(i)] = (r - cfg.ratio_min) / (cfg.ratio_max - cfg.ratio_min);
  }
  std::sort(u.begin(), u.end());
  double d = 0;
  for (int i = 0; i < n; ++i) {
    d = std::max(d, std::fabs((i + 1.0) / n - u[static_cast<std::size_t>(i)]));
    d = std::max(d, std::fabs(u[static_cast<std::size_t>(i)] - static_cast<double>(i) / n));
  }
  const double crit = 1.628 / std::sqrt(static_cast<double>(n));  // KS p = 0.01
  record(5, d < crit,
         "10^4 draws in range, KS D = " + std::to_string(d) + " < " + std::to_string(crit));
}

// ---------------------------------------------------------------------------
// criterion 11: parameter counting
// ---------------------------------------------------------------------------

void criterion11() {
  Rng rng(2026);
  for (int trial = 0; trial < 3; ++trial) {
    DenoiserConfig cfg = tiny_config();
    cfg.base_width = 8 * (1 + static_cast<int>(rng.uniform_int(2)));
    cfg.width_multipliers =
        rng.uniform_int(2) ? std::vector<int>{1, 2} : std::vector<int>{1};
    cfg.heads = 2;
    Denoiser model(cfg, 60 + static_cast<std::uint64_t>(trial));
    const int r = 1 + static_cast<int>(rng.uniform_int(4));
    AdapterSet set = inject(model, LoraFamily::Temporal, r, 1.0f, 61);
    // independent oracle: walk the projection census
    std::int64_t oracle = 0;
    for (const ProjInfo& p : model.census_family(AttnFamily::TCFA))
      if (p.proj == "wq" || p.proj == "wk" || p.proj == "wv")
        oracle += static_cast<std::int64_t>(r) * (p.d + p.k);
    if (count_params(set) != oracle) {
      record(11, false,
             "trial " + std::to_string(trial) + ": count_params " +
                 std::to_string(count_params(set)) + " != census oracle " +
                 std::to_string(oracle));
      return;
    }
  }
  // formula spot check by hand: one rank-4 adapter on a 32x32 projection
  // contributes exactly 4 * (32 + 32) = 256 parameters.
  AdapterSet one;
  one.rank = 4;
  one.adapters["x"] = make_adapter("x", 32, 32, 4, 1.0f, 7);
  if (count_params(one) != 256) {
    record(11, false, "hand formula r*(d+k) mismatch: " + std::to_string(count_params(one)));
    return;
  }
  record(11, true, "count_params matches census-walk oracle on 3 configs and r*(d+k) by hand");
}

// ---------------------------------------------------------------------------
// shared pretrained toy base for criteria 6-10
// ---------------------------------------------------------------------------

constexpr int kPretrainSteps = 10000;

RunConfig toy_run_config() {
  const std::string ini =
      "[model]\nframes = 8\nheight = 16\nwidth = 16\nbase_width = 16\n"
      "width_multipliers = 1,2\nheads = 4\ntext_dim = 16\ntime_embed_dim = 32\n"
      "[schedule]\nT = 300\n"
      "[pretrain]\nsteps = " + std::to_string(kPretrainSteps) +
      "\nbatch = 4\nlr = 0.001\nlr_final = 0.0001\nema = 0.999\nseed = 0\n"
      "[stage1]\nsteps = 200\nabsorber = dual\n"
      "[stage2]\nsteps = 400\n"
      "[infer]\nsteps = 50\n";
  return run_config_from_ini(IniFile::parse(ini));
}

// Pretraining corpus: a small curated world (3 colors x 2 shapes x 3 motions
// on a fixed background, randomized positions) the toy model can actually
// master within the CPU budget. The rightward motion class is entirely absent
// (as are grow/shrink), so those dynamics can only enter through a temporal
// adapter.
Corpus toy_corpus(int per_class, std::uint64_t seed, int F, int H, int W) {
  Corpus corpus;
  Rng rng(seed);
  for (int color : {0, 2, 1})  // red, blue, green
    for (Shape shape : {Shape::Square, Shape::Circle})
      for (Motion motion : {Motion::Left, Motion::Up, Motion::Down})
        for (int i = 0; i < per_class; ++i) {
          SceneSpec s;
          s.shape = shape;
          s.fill_color = color;
          s.background_color = 3;  // yellow
          s.size = 0.3;
          s.motion = motion;
          s.speed = 1.0;
          // rejection-sample a start position that stays in frame
          for (int tries = 0; tries < 1000; ++tries) {
            s.start_x = 2.0 + rng.uniform() * (W - 4);
            s.start_y = 2.0 + rng.uniform() * (H - 4);
            try {
              CorpusItem item;
              item.spec = s;
              item.video = render_scene(s, F, H, W);
              item.prompts = caption(s);
              corpus.items.push_back(std::move(item));
              break;
            } catch (const motionlab::ConfigError&) {
            }
          }
        }
  return corpus;
}

BaseModel acquire_pretrained(const fs::path& work, const RunConfig& run) {
  const fs::path ckpt =
      work / ("toy_base_s" + std::to_string(kPretrainSteps) + ".ckpt");
  if (fs::exists(ckpt)) {
    std::fprintf(stderr, "  reusing cached pretrained base %s\n", ckpt.string().c_str());
    auto [model, enc] = load_model(ckpt.string());
    BaseModel b;
    b.model = std::move(model);
    b.enc = std::move(enc);
    return b;
  }
  std::fprintf(stderr, "  pretraining toy base (%d steps)...\n", kPretrainSteps);
  const Corpus corpus =
      toy_corpus(12, 7, run.model.frames, run.model.height, run.model.width);
  StageReport rep;
  BaseModel base = pretrain_base(corpus, run, &rep);
  std::fprintf(stderr, "  pretrain loss %.4f -> %.4f (%.0f s)\n", rep.losses.front(),
               rep.losses.back(), rep.wall_seconds);
  save_model(ckpt.string(), base.model, base.enc);
  return base;
}

SceneSpec reference_spec(Motion motion) {
  SceneSpec s;
  s.shape = Shape::Square;
  s.fill_color = 0;        // red
  s.background_color = 3;  // yellow, matching the pretraining world
  s.size = 0.3;
  s.motion = motion;
  s.speed = motion == Motion::Grow ? 1.06 : 1.0;
  if (motion == Motion::Grow) {
    s.start_x = 8.0;
    s.start_y = 8.0;
  } else {
    s.start_x = 16 * 0.28;
    s.start_y = 16 * 0.55;
  }
  return s;
}

std::vector<std::uint64_t> seed_range(std::uint64_t lo, int n) {
  std::vector<std::uint64_t> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = lo + static_cast<std::uint64_t>(i);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// main
// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  // usage: motionlab_acceptance [work_dir] [cheap]
  // "cheap" skips the criteria that need the pretrained toy base (6-10).
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_work");
  const bool cheap_only = argc > 2 && std::string(argv[2]) == "cheap";
  fs::create_directories(work);

  criterion(1, "zero-init adapter identity", criterion1);
  criterion(2, "merge equivalence", criterion2);
  criterion(3, "temporal bypass equivalence", criterion3);
  criterion(4, "gradient isolation census", criterion4);
  criterion(5, "crop-ratio law", criterion5);
  criterion(11, "parameter counting", criterion11);

  if (cheap_only) {
    std::sort(g_results.begin(), g_results.end(),
              [](const Result& a, const Result& b) { return a.id < b.id; });
    bool ok = true;
    for (const Result& r : g_results) {
      std::printf("[%s] criterion %d: %s\n", r.pass ? "PASS" : "FAIL", r.id, r.detail.c_str());
      ok = ok && r.pass;
    }
    std::printf(ok ? "acceptance (cheap subset): all passed\n"
                   : "acceptance (cheap subset): FAILURES present\n");
    return ok ? 0 : 1;
  }

  RunConfig run = toy_run_config();
  const NoiseSchedule sched = run.schedule.build();
  BaseModel base = acquire_pretrained(work, run);
  const DenoiserConfig& mc = base.model.config();

  // ---- criterion 6: DDIM determinism and round trip --------------------
  criterion(6, "DDIM determinism and inversion round trip", [&] {
    const Tensor text = base.enc.encode_value("a green circle moving down");
    Rng rng(66);
    SamplerConfig sc;
    sc.steps = 50;
    const Tensor z0 = rng.randn({mc.frames, mc.channels, mc.height, mc.width});
    const Tensor a = ddim_sample(base.model, z0, text, nullptr, sched, sc);
    const Tensor b = ddim_sample(base.model, z0, text, nullptr, sched, sc);
    if (!bit_equal(a, b)) {
      record(6, false, "identical latents produced different samples");
      return;
    }
    std::map<int, double> err;
    for (const int steps : {10, 25, 50}) {
      SamplerConfig s2;
      s2.steps = steps;
      double acc = 0;
      for (int trial = 0; trial < 3; ++trial) {
        const Tensor z = Rng(100 + static_cast<std::uint64_t>(trial))
                             .randn({mc.frames, mc.channels, mc.height, mc.width});
        const Tensor x = ddim_sample(base.model, z, text, nullptr, sched, s2);
        acc += mse(ddim_invert(base.model, x, text, nullptr, sched, s2), z);
      }
      err[steps] = acc / 3.0;
    }
    const bool pass = err[50] <= 1e-2 && err[25] <= err[10] && err[50] <= err[25];
    record(6, pass,
           "invert(sample) MSE S=10:" + std::to_string(err[10]) + " S=25:" +
               std::to_string(err[25]) + " S=50:" + std::to_string(err[50]));
  });

  // ---- customization shared by criteria 7-10 ---------------------------
  const SceneSpec right_spec = reference_spec(Motion::Right);
  const SceneSpec grow_spec = reference_spec(Motion::Grow);
  const VideoTensor ref_right = render_scene(right_spec, mc.frames, mc.height, mc.width);
  const VideoTensor ref_grow = render_scene(grow_spec, mc.frames, mc.height, mc.width);
  const PromptPair right_prompts = caption(right_spec);
  const PromptPair grow_prompts = caption(grow_spec);
  const std::string eval_prompt = "a blue circle moving right";

  Stage1Artifacts absorbers;
  AdapterSet tlora_right, tlora_noaa, tlora_grow;
  std::vector<VideoTensor> with_t, without_t;
  bool customized = false;
  try {
    std::fprintf(stderr, "  training absorbers + temporal adapters...\n");
    absorbers = stage1(base, ref_right, right_prompts, run);
    tlora_right = stage2(base, absorbers, ref_right, right_prompts, run);
    tlora_noaa = stage2(base, Stage1Artifacts{}, ref_right, right_prompts, run);
    tlora_grow = stage2(base, absorbers, ref_grow, grow_prompts, run);
    customized = true;
  } catch (const std::exception& e) {
    const std::string why = std::string("customization failed: ") + e.what();
    for (int id : {7, 8, 9, 10}) record(id, false, why);
  }

  if (customized) {
    // ---- criterion 7: end-to-end motion transfer -----------------------
    criterion(7, "end-to-end motion transfer", [&] {
      InferRequest req;
      req.prompt = eval_prompt;
      req.seeds = seed_range(1, 10);
      req.sampler.steps = run.infer.steps;
      with_t = infer(base, {&tlora_right}, req, sched);
      without_t = infer(base, {}, req, sched);
      double mean_cos = 0, mean_cos_no = 0;
      int high = 0, appearance = 0;
      for (std::size_t i = 0; i < with_t.size(); ++i) {
        const double c =
            motion_fidelity(with_t[i], right_spec, mc.frames, mc.height, mc.width)
                .direction_cosine;
        mean_cos += c;
        if (c >= 0.7) ++high;
        const AppearanceResult ar = appearance_accuracy(with_t[i], Shape::Circle, 2);
        if (ar.color_match && ar.shape_match) ++appearance;
        mean_cos_no +=
            motion_fidelity(without_t[i], right_spec, mc.frames, mc.height, mc.width)
                .direction_cosine;
      }
      mean_cos /= 10.0;
      mean_cos_no /= 10.0;
      const bool pass =
          mean_cos >= 0.7 && high >= 6 && appearance >= 7 && mean_cos_no < mean_cos;
      record(7, pass,
             "mean cos " + std::to_string(mean_cos) + " (>=0.7 in " + std::to_string(high) +
                 "/10), appearance " + std::to_string(appearance) + "/10, without T-LoRA " +
                 std::to_string(mean_cos_no));
    });

    // ---- criterion 8: appearance-leakage ordering ----------------------
    criterion(8, "appearance-leakage ordering", [&] {
      double frac_no = 0, frac_dual = 0;
      for (std::uint64_t s = 0; s < 3; ++s) {
        InferRequest req;
        req.prompt = eval_prompt;
        req.seeds = seed_range(200 + s * 10, 4);
        req.sampler.steps = run.infer.steps;
        const auto no_aa = infer(base, {&tlora_noaa}, req, sched);
        const auto dual = infer(base, {&tlora_right}, req, sched);
        for (int i = 0; i < 4; ++i) {
          const auto cn = classify_color(no_aa[static_cast<std::size_t>(i)]);
          const auto cd = classify_color(dual[static_cast<std::size_t>(i)]);
          if (cn && *cn == 0) frac_no += 1.0 / 12.0;
          if (cd && *cd == 0) frac_dual += 1.0 / 12.0;
        }
      }
      record(8, frac_no >= frac_dual,
             "red-classified fraction: no-AA " + std::to_string(frac_no) + " vs dual-AA " +
                 std::to_string(frac_dual) + " over 3 seed groups");
    });

    // ---- criterion 9: diversity source ---------------------------------
    criterion(9, "diversity source", [&] {
      InferRequest req;
      req.prompt = eval_prompt;
      req.seeds = seed_range(1, 4);
      req.sampler.steps = run.infer.steps;
      const auto four = infer(base, {&tlora_right}, req, sched);
      const RandomProjectionEmbedder emb(3, 9);
      const double div = diversity(four, emb);
      bool distinct = true;
      std::vector<std::pair<double, double>> c0;
      for (const auto& v : four) {
        const Trajectory tr = track_centroid(v, estimate_background(v));
        c0.emplace_back(tr.cx[0], tr.cy[0]);
      }
      for (std::size_t i = 0; i < c0.size() && distinct; ++i)
        for (std::size_t j = i + 1; j < c0.size(); ++j)
          if (std::fabs(c0[i].first - c0[j].first) + std::fabs(c0[i].second - c0[j].second) <
              1e-9) {
            distinct = false;
            break;
          }
      // fixed initial latent -> repeats are deterministic
      const Tensor latent = invert_reference(base, {&tlora_right}, ref_right,
                                             right_prompts.full, req.sampler, sched);
      InferRequest fixed;
      fixed.prompt = eval_prompt;
      fixed.seeds = {1};
      fixed.sampler.steps = run.infer.steps;
      fixed.init_latent = latent;
      const auto rep1 = infer(base, {&tlora_right}, fixed, sched);
      const auto rep2 = infer(base, {&tlora_right}, fixed, sched);
      const double div_fixed = diversity({rep1[0], rep2[0]}, emb);
      const bool pass = div > 0 && distinct && bit_equal(rep1[0], rep2[0]) && div_fixed == 0.0;
      record(9, pass,
             "diversity " + std::to_string(div) + ", centroids distinct: " +
                 (distinct ? "yes" : "no") + ", fixed-latent diversity " +
                 std::to_string(div_fixed));
    });

    // ---- criterion 10: multi-motion composition ------------------------
    criterion(10, "multi-motion composition", [&] {
      InferRequest req;
      req.prompt = "a blue circle moving right growing larger";
      req.seeds = seed_range(1, 10);
      req.sampler.steps = run.infer.steps;
      const auto samples = infer(base, {&tlora_right, &tlora_grow}, req, sched);
      int good = 0;
      for (const auto& v : samples) {
        try {
          const double c =
              motion_fidelity(v, right_spec, mc.frames, mc.height, mc.width).direction_cosine;
          const Trajectory tr = track_centroid(v, estimate_background(v));
          if (c > 0 && log_area_slope(tr) > 0) ++good;
        } catch (const motionlab::Error&) {
          // untrackable sample counts against the criterion
        }
      }
      record(10, good >= 5,
             std::to_string(good) + "/10 samples have positive rightward cosine and "
             "positive log-area slope");
    });
  }

  // ---- report ----------------------------------------------------------
  std::sort(g_results.begin(), g_results.end(),
            [](const Result& a, const Result& b) { return a.id < b.id; });
  bool all = true;
  for (const Result& r : g_results) {
    std::printf("[%s] criterion %d: %s\n", r.pass ? "PASS" : "FAIL", r.id, r.detail.c_str());
    all = all && r.pass;
  }
  std::printf(all ? "acceptance: all criteria passed\n" : "acceptance: FAILURES present\n");
  return all ? 0 : 1;
}
