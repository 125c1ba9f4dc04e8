// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front door: reproducible runs over the staged motion-transfer
// pipeline. Every writing command puts its outputs plus a manifest under
// --out; the config file is authoritative and flags override it.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "motionlab/absorbers.hpp"
#include "motionlab/checkpoint.hpp"
#include "motionlab/config.hpp"
#include "motionlab/data.hpp"
#include "motionlab/diffusion.hpp"
#include "motionlab/errors.hpp"
#include "motionlab/lora.hpp"
#include "motionlab/metrics.hpp"
#include "motionlab/model.hpp"
#include "motionlab/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace motionlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::uint64_t file_hash(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for hashing");
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string s = ss.str();
  return fnv1a64(s.data(), s.size());
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::istringstream iss(s);
  std::string tok;
  while (std::getline(iss, tok, ',')) {
    try {
      out.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw ConfigError("--seeds: '" + tok + "' is not an unsigned integer");
    }
  }
  if (out.empty()) throw ConfigError("--seeds: empty list");
  return out;
}

Motion motion_from_name(const std::string& s) {
  static const std::map<std::string, Motion> table = {
      {"right", Motion::Right},   {"left", Motion::Left},     {"up", Motion::Up},
      {"down", Motion::Down},     {"diag_ur", Motion::DiagUR}, {"diag_dl", Motion::DiagDL},
      {"grow", Motion::Grow},     {"shrink", Motion::Shrink}, {"bounce_h", Motion::BounceH}};
  const auto it = table.find(s);
  if (it == table.end()) throw ConfigError("unknown motion name '" + s + "'");
  return it->second;
}

Shape shape_from_name(const std::string& s) {
  if (s == "square") return Shape::Square;
  if (s == "circle") return Shape::Circle;
  if (s == "triangle") return Shape::Triangle;
  throw ConfigError("unknown shape name '" + s + "'");
}

int color_from_name(const std::string& s) {
  for (int c = 0; c < kNumColors; ++c)
    if (s == color_name(c)) return c;
  throw ConfigError("unknown color name '" + s + "'");
}

HoldoutRule holdout_from_ini(const IniFile& ini) {
  HoldoutRule rule;
  std::istringstream ms(ini.get("data", "holdout_motions", ""));
  std::string tok;
  while (std::getline(ms, tok, ',')) {
    if (!tok.empty()) rule.excluded_motions.push_back(motion_from_name(tok));
  }
  std::istringstream ps(ini.get("data", "holdout_pairs", ""));
  while (std::getline(ps, tok, ',')) {
    if (tok.empty()) continue;
    std::istringstream fields(tok);
    std::string color, shape, motion;
    if (!std::getline(fields, color, ':') || !std::getline(fields, shape, ':') ||
        !std::getline(fields, motion, ':'))
      throw ConfigError("[data] holdout_pairs entries must be color:shape:motion");
    rule.excluded_pairs.push_back(
        {color_from_name(color), shape_from_name(shape), motion_from_name(motion)});
  }
  return rule;
}

std::string require_key(const IniFile& ini, const std::string& section, const std::string& key,
                        const std::string& override_value = "") {
  if (!override_value.empty()) return override_value;
  const std::string v = ini.get(section, key, "");
  if (v.empty())
    throw ConfigError("missing required config key [" + section + "] " + key);
  return v;
}

void require_artifact(const std::string& path, const std::string& what) {
  if (!fs::exists(path))
    throw ConfigError("missing " + what + " artifact: '" + path + "' does not exist");
}

void write_loss_csv(const std::string& path, const std::vector<double>& losses) {
  std::ofstream f(path, std::ios::trunc);
  f << "step,loss\n";
  for (size_t i = 0; i < losses.size(); ++i) f << i << "," << losses[i] << "\n";
}

struct CommonArgs {
  std::string config_path;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool json = false;
  int steps = -1;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_out = true) {
  cmd->add_option("--config", a.config_path, "Run configuration file");
  auto* out = cmd->add_option("--out", a.out, "Output directory");
  if (needs_out) out->capture_default_str();
  cmd->add_option("--seed", a.seed, "Seed for all stochastic components")
      ->each([&a](const std::string&) { a.seed_set = true; });
  cmd->add_option("--steps", a.steps, "Override the configured step count");
  cmd->add_flag("--json", a.json, "Print a machine-readable JSON summary");
}

RunConfig load_config(const CommonArgs& a, IniFile* ini_out = nullptr) {
  IniFile ini;
  if (!a.config_path.empty()) ini = IniFile::parse_file(a.config_path);
  RunConfig cfg = run_config_from_ini(ini);
  if (a.seed_set) cfg.seed = a.seed;
  if (ini_out) *ini_out = ini;
  return cfg;
}

void emit(const CommonArgs& a, const json& summary, const std::string& plain) {
  if (a.json)
    std::cout << summary.dump(2) << "\n";
  else
    std::cout << plain << "\n";
}

// --- commands -------------------------------------------------------------

int cmd_gen_data(const CommonArgs& a) {
  IniFile ini;
  RunConfig cfg = load_config(a, &ini);
  const int n = ini.get_int("data", "n", cfg.pretrain.corpus_size);
  const HoldoutRule holdout = holdout_from_ini(ini);
  const Corpus corpus =
      make_corpus(n, cfg.seed, holdout, cfg.model.frames, cfg.model.height, cfg.model.width);

  fs::create_directories(a.out);
  std::ofstream caps(fs::path(a.out) / "captions.csv", std::ios::trunc);
  caps << "index,file,full,spatial,shape,color,motion\n";
  std::map<std::string, std::string> artifacts;
  for (size_t i = 0; i < corpus.items.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04zu.vten", i);
    const std::string path = (fs::path(a.out) / name).string();
    save_vten(corpus.items[i].video, path);
    const auto& it = corpus.items[i];
    caps << i << "," << name << "," << it.prompts.full << "," << it.prompts.spatial << ","
         << shape_name(it.spec.shape) << "," << color_name(it.spec.fill_color) << ","
         << motion_phrase(it.spec.motion) << "\n";
    artifacts[name] = fingerprint_hex(file_hash(path));
  }
  caps.close();
  artifacts["captions.csv"] = fingerprint_hex(file_hash((fs::path(a.out) / "captions.csv").string()));
  write_manifest(a.out, cfg, artifacts);
  emit(a, {{"command", "gen-data"}, {"clips", corpus.items.size()}, {"out", a.out}},
       "wrote " + std::to_string(corpus.items.size()) + " clips to " + a.out);
  return kExitOk;
}

int cmd_pretrain(const CommonArgs& a) {
  IniFile ini;
  RunConfig cfg = load_config(a, &ini);
  if (a.steps >= 0) cfg.pretrain.steps = a.steps;
  const int n = ini.get_int("data", "n", cfg.pretrain.corpus_size);
  const HoldoutRule holdout = holdout_from_ini(ini);
  const Corpus corpus =
      make_corpus(n, cfg.seed, holdout, cfg.model.frames, cfg.model.height, cfg.model.width);

  StageReport report;
  BaseModel base = pretrain_base(corpus, cfg, &report);

  fs::create_directories(a.out);
  const std::string ckpt = (fs::path(a.out) / "base.ckpt").string();
  save_model(ckpt, base.model, base.enc);
  write_loss_csv((fs::path(a.out) / "pretrain_loss.csv").string(), report.losses);
  write_manifest(a.out, cfg, {{"base.ckpt", fingerprint_hex(file_hash(ckpt))}});

  json summary = {{"command", "pretrain"},
                  {"steps", report.steps_run},
                  {"aborted", report.aborted},
                  {"fingerprint", fingerprint_hex(model_fingerprint(base.model))},
                  {"out", a.out}};
  if (!report.losses.empty()) {
    summary["first_loss"] = report.losses.front();
    summary["last_loss"] = report.losses.back();
  }
  emit(a, summary,
       "pretrained " + std::to_string(report.steps_run) + " steps -> " + ckpt +
           (report.aborted ? " (aborted on non-finite loss)" : ""));
  return report.aborted ? kExitRuntime : kExitOk;
}

int cmd_train_absorber(const CommonArgs& a, const std::string& absorber_flag) {
  IniFile ini;
  RunConfig cfg = load_config(a, &ini);
  if (a.steps >= 0) cfg.stage1.steps = a.steps;
  if (!absorber_flag.empty()) cfg.stage1.absorber = parse_absorber_selection(absorber_flag);
  if (cfg.stage1.absorber.mode == AbsorberMode::None)
    throw ConfigError("train-absorber: absorber selection is 'none'");
  if (cfg.stage1.absorber.mode == AbsorberMode::External)
    require_artifact(cfg.stage1.absorber.external_path, "external absorber");

  const std::string base_path = require_key(ini, "stage1", "base");
  const std::string ref_path = require_key(ini, "stage1", "reference");
  require_artifact(base_path, "base checkpoint");
  auto [model, enc] = load_model(base_path);
  BaseModel base{std::move(model), std::move(enc)};
  const VideoTensor reference = load_video_frames(ref_path);

  PromptPair prompts;
  prompts.spatial = require_key(ini, "stage1", "prompt_spatial");
  prompts.full = ini.get("stage1", "prompt_full", prompts.spatial);

  std::vector<StageReport> reports;
  Stage1Artifacts artifacts = stage1(base, reference, prompts, cfg, &reports);

  fs::create_directories(a.out);
  std::map<std::string, std::string> hashes;
  if (artifacts.slora) {
    const std::string p = (fs::path(a.out) / "slora.ckpt").string();
    save_adapters(*artifacts.slora, p);
    hashes["slora.ckpt"] = fingerprint_hex(file_hash(p));
  }
  if (artifacts.token_delta) {
    const std::string p = (fs::path(a.out) / "token_delta.ckpt").string();
    save_token_delta(*artifacts.token_delta, p);
    hashes["token_delta.ckpt"] = fingerprint_hex(file_hash(p));
  }
  json jreports = json::array();
  for (const auto& r : reports) {
    write_loss_csv((fs::path(a.out) / (r.stage + "_loss.csv")).string(), r.losses);
    jreports.push_back({{"stage", r.stage},
                        {"steps", r.steps_run},
                        {"census", r.census},
                        {"wall_seconds", r.wall_seconds}});
  }
  write_manifest(a.out, cfg, hashes);
  emit(a, {{"command", "train-absorber"}, {"reports", jreports}, {"out", a.out}},
       "trained " + absorber_selection_name(cfg.stage1.absorber) + " absorber(s) -> " + a.out);
  return kExitOk;
}

Stage1Artifacts load_stage1_artifacts(const IniFile& ini, const RunConfig& cfg,
                                      TextEncoder& enc) {
  Stage1Artifacts out;
  const AbsorberMode mode = cfg.stage1.absorber.mode;
  const bool want_slora = mode == AbsorberMode::SLora || mode == AbsorberMode::Dual;
  const bool want_delta = mode == AbsorberMode::TextInv || mode == AbsorberMode::Dual;
  if (want_slora) {
    const std::string p = require_key(ini, "stage2", "slora");
    require_artifact(p, "stage-1 spatial LoRA");
    out.slora = load_adapters(p);
  }
  if (want_delta) {
    const std::string p = require_key(ini, "stage2", "token_delta");
    require_artifact(p, "stage-1 token delta");
    out.token_delta = load_token_delta(p);
    register_token_delta(enc, *out.token_delta);
  }
  if (mode == AbsorberMode::External) {
    const std::string p = cfg.stage1.absorber.external_path;
    require_artifact(p, "external absorber");
    Checkpoint ck = Checkpoint::load(p);
    if (ck.metadata.count("kind") && ck.metadata.at("kind") == "token_delta") {
      out.token_delta = load_token_delta(p);
      register_token_delta(enc, *out.token_delta);
    } else {
      out.slora = load_adapters(p);
    }
  }
  return out;
}

int cmd_train_motion(const CommonArgs& a, const std::string& absorber_flag) {
  IniFile ini;
  RunConfig cfg = load_config(a, &ini);
  if (a.steps >= 0) cfg.stage2.steps = a.steps;
  if (!absorber_flag.empty()) cfg.stage1.absorber = parse_absorber_selection(absorber_flag);

  const std::string base_path = require_key(ini, "stage2", "base");
  const std::string ref_path = require_key(ini, "stage2", "reference");
  require_artifact(base_path, "base checkpoint");
  auto [model, enc] = load_model(base_path);
  BaseModel base{std::move(model), std::move(enc)};
  const VideoTensor reference = load_video_frames(ref_path);

  PromptPair prompts;
  prompts.full = require_key(ini, "stage2", "prompt_full");
  prompts.spatial = ini.get("stage2", "prompt_spatial", "");

  Stage1Artifacts absorbers = load_stage1_artifacts(ini, cfg, base.enc);
  StageReport report;
  AdapterSet tlora = stage2(base, absorbers, reference, prompts, cfg, &report);

  fs::create_directories(a.out);
  const std::string p = (fs::path(a.out) / "tlora.ckpt").string();
  save_adapters(tlora, p);
  write_loss_csv((fs::path(a.out) / "stage2_loss.csv").string(), report.losses);
  write_manifest(a.out, cfg, {{"tlora.ckpt", fingerprint_hex(file_hash(p))}});
  emit(a,
       {{"command", "train-motion"},
        {"steps", report.steps_run},
        {"census", report.census},
        {"params", count_params(tlora)},
        {"out", a.out}},
       "trained temporal LoRA (" + std::to_string(count_params(tlora)) + " params) -> " + p);
  return kExitOk;
}

int cmd_generate(const CommonArgs& a, const std::vector<std::string>& tlora_flags,
                 const std::string& seeds_flag, const std::string& prompt_flag,
                 const std::string& init_latent_flag, double guidance_flag) {
  IniFile ini;
  RunConfig cfg = load_config(a, &ini);
  if (a.steps >= 0) cfg.infer.steps = a.steps;
  if (guidance_flag >= 0) cfg.infer.guidance = static_cast<float>(guidance_flag);
  cfg.validate();

  const std::string base_path = require_key(ini, "infer", "base");
  require_artifact(base_path, "base checkpoint");
  auto [model, enc] = load_model(base_path);
  BaseModel base{std::move(model), std::move(enc)};

  std::vector<std::string> tlora_paths = tlora_flags;
  if (tlora_paths.empty()) {
    std::istringstream ts(ini.get("infer", "tlora", ""));
    std::string tok;
    while (std::getline(ts, tok, ','))
      if (!tok.empty()) tlora_paths.push_back(tok);
  }
  std::vector<AdapterSet> sets;
  std::vector<const AdapterSet*> set_ptrs;
  for (const auto& p : tlora_paths) {
    require_artifact(p, "temporal LoRA");
    sets.push_back(load_adapters(p));
  }
  for (const auto& s : sets) set_ptrs.push_back(&s);

  InferRequest req;
  req.prompt = require_key(ini, "infer", "prompt", prompt_flag);
  req.sampler = cfg.infer;
  if (!seeds_flag.empty())
    req.seeds = parse_seeds(seeds_flag);
  else if (ini.has("infer", "seeds"))
    req.seeds = parse_seeds(ini.get("infer", "seeds", ""));
  else
    req.seeds = {cfg.seed};
  if (!init_latent_flag.empty()) {
    require_artifact(init_latent_flag, "initial latent");
    req.init_latent = load_vten(init_latent_flag);
  }

  const NoiseSchedule sched = cfg.schedule.build();
  const std::vector<VideoTensor> videos = infer(base, set_ptrs, req, sched);

  fs::create_directories(a.out);
  std::map<std::string, std::string> hashes;
  RandomProjectionEmbedder embedder(cfg.model.channels);
  std::vector<MetricsRow> rows;
  const double div = videos.size() >= 2 ? diversity(videos, embedder) : 0.0;
  for (size_t i = 0; i < videos.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof(name), "sample_seed%llu.vten",
                  static_cast<unsigned long long>(req.seeds[i]));
    const std::string p = (fs::path(a.out) / name).string();
    save_vten(videos[i], p);
    hashes[name] = fingerprint_hex(file_hash(p));
    MetricsRow row;
    row.run = "generate";
    row.prompt = req.prompt;
    row.seed = req.seeds[i];
    row.temporal_consistency = temporal_consistency(videos[i], embedder);
    row.diversity = div;
    rows.push_back(row);
  }
  const std::string csv = (fs::path(a.out) / "metrics.csv").string();
  write_metrics_csv(csv, rows);
  hashes["metrics.csv"] = fingerprint_hex(file_hash(csv));
  write_manifest(a.out, cfg, hashes);
  emit(a,
       {{"command", "generate"},
        {"samples", videos.size()},
        {"diversity", div},
        {"out", a.out}},
       "generated " + std::to_string(videos.size()) + " sample(s) -> " + a.out);
  return kExitOk;
}

int cmd_invert(const CommonArgs& a, const std::vector<std::string>& tlora_flags,
               const std::string& input_flag, double guidance_flag) {
  IniFile ini;
  RunConfig cfg = load_config(a, &ini);
  if (a.steps >= 0) cfg.infer.steps = a.steps;
  if (guidance_flag >= 0) cfg.infer.guidance = static_cast<float>(guidance_flag);
  cfg.validate();

  const std::string base_path = require_key(ini, "infer", "base");
  require_artifact(base_path, "base checkpoint");
  auto [model, enc] = load_model(base_path);
  BaseModel base{std::move(model), std::move(enc)};
  const std::string input = require_key(ini, "infer", "reference", input_flag);
  const VideoTensor video = subsample_frames(load_video_frames(input), cfg.model.frames);
  const std::string prompt = require_key(ini, "infer", "prompt");

  std::vector<AdapterSet> sets;
  std::vector<const AdapterSet*> set_ptrs;
  for (const auto& p : tlora_flags) {
    require_artifact(p, "temporal LoRA");
    sets.push_back(load_adapters(p));
  }
  for (const auto& s : sets) set_ptrs.push_back(&s);

  const Tensor latent =
      invert_reference(base, set_ptrs, video, prompt, cfg.infer, cfg.schedule.build());
  fs::create_directories(a.out);
  const std::string p = (fs::path(a.out) / "latent.vten").string();
  save_vten(latent, p);
  write_manifest(a.out, cfg, {{"latent.vten", fingerprint_hex(file_hash(p))}});
  emit(a, {{"command", "invert"}, {"latent", p}}, "inverted " + input + " -> " + p);
  return kExitOk;
}

int cmd_compose(const CommonArgs& a, const std::vector<std::string>& tlora_flags) {
  IniFile ini;
  RunConfig cfg = load_config(a, &ini);
  if (tlora_flags.empty()) throw ConfigError("compose: need at least one --tlora");
  const std::string base_path = require_key(ini, "infer", "base");
  require_artifact(base_path, "base checkpoint");
  auto [model, enc] = load_model(base_path);

  Denoiser merged = model.clone();
  std::int64_t total = 0;
  for (const auto& p : tlora_flags) {
    require_artifact(p, "temporal LoRA");
    AdapterSet set = load_adapters(p);
    total += count_params(set);
    merged = merge(merged, set);
  }
  fs::create_directories(a.out);
  const std::string p = (fs::path(a.out) / "merged.ckpt").string();
  save_model(p, merged, enc);
  write_manifest(a.out, cfg, {{"merged.ckpt", fingerprint_hex(file_hash(p))}});
  emit(a,
       {{"command", "compose"},
        {"sets", tlora_flags.size()},
        {"adapter_params", total},
        {"out", p}},
       "merged " + std::to_string(tlora_flags.size()) + " adapter set(s) -> " + p);
  return kExitOk;
}

int cmd_eval(const CommonArgs& a, const std::vector<std::string>& inputs,
             const std::string& ref_flag, const std::string& motion_flag,
             const std::string& color_flag, const std::string& shape_flag) {
  if (inputs.empty()) throw ConfigError("eval: no input videos given");
  std::vector<std::string> paths;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::directory_iterator(in))
        if (e.path().extension() == ".vten") paths.push_back(e.path().string());
      std::sort(paths.begin(), paths.end());
    } else {
      paths.push_back(in);
    }
  }
  if (paths.empty()) throw ConfigError("eval: no .vten inputs found");

  std::vector<VideoTensor> videos;
  for (const auto& p : paths) videos.push_back(load_video_frames(p));

  std::optional<Trajectory> ref_traj;
  std::optional<Motion> motion;
  if (!motion_flag.empty()) motion = motion_from_name(motion_flag);
  if (!ref_flag.empty()) {
    const VideoTensor ref = load_video_frames(ref_flag);
    ref_traj = track_centroid(ref, estimate_background(ref));
    if (!motion) throw ConfigError("eval: --ref requires --motion");
  }
  std::optional<Shape> shape;
  std::optional<int> color;
  if (!shape_flag.empty()) shape = shape_from_name(shape_flag);
  if (!color_flag.empty()) color = color_from_name(color_flag);

  RandomProjectionEmbedder embedder(videos[0].dim(1));
  const double div = videos.size() >= 2 ? diversity(videos, embedder) : 0.0;
  std::vector<MetricsRow> rows;
  for (size_t i = 0; i < videos.size(); ++i) {
    MetricsRow row;
    row.run = "eval";
    row.prompt = fs::path(paths[i]).filename().string();
    row.seed = i;
    row.temporal_consistency = temporal_consistency(videos[i], embedder);
    row.diversity = div;
    if (ref_traj) {
      const Trajectory g = track_centroid(videos[i], estimate_background(videos[i]));
      const MotionFidelity mf = motion_fidelity(g, *ref_traj, *motion);
      row.direction_cosine = mf.direction_cosine;
      row.speed_ratio = mf.speed_ratio;
    }
    if (shape && color) {
      const AppearanceResult ar = appearance_accuracy(videos[i], *shape, *color);
      row.color_match = ar.color_match ? 1 : 0;
      row.shape_match = ar.shape_match ? 1 : 0;
    }
    rows.push_back(row);
  }
  fs::create_directories(a.out);
  const std::string csv = (fs::path(a.out) / "metrics.csv").string();
  write_metrics_csv(csv, rows);
  RunConfig cfg = load_config(a);
  write_manifest(a.out, cfg, {{"metrics.csv", fingerprint_hex(file_hash(csv))}});

  json jrows = json::array();
  for (const auto& r : rows)
    jrows.push_back({{"file", r.prompt},
                     {"temporal_consistency", r.temporal_consistency},
                     {"direction_cosine", r.direction_cosine},
                     {"speed_ratio", r.speed_ratio},
                     {"color_match", r.color_match},
                     {"shape_match", r.shape_match}});
  emit(a, {{"command", "eval"}, {"diversity", div}, {"rows", jrows}, {"out", csv}},
       "evaluated " + std::to_string(rows.size()) + " clip(s) -> " + csv);
  return kExitOk;
}

int cmd_inspect(const CommonArgs& a, const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  const std::string kind = ck.metadata.count("kind") ? ck.metadata.at("kind") : "unknown";

  std::int64_t total = 0;
  json entries = json::array();
  std::map<std::string, int> families;
  for (const auto& [name, t] : ck.tensors) {
    total += t.numel();
    entries.push_back({{"name", name}, {"shape", t.shape}});
    if (name.find(".ssa.") != std::string::npos) ++families["ssa"];
    if (name.find(".sca.") != std::string::npos) ++families["sca"];
    if (name.find(".tcfa.") != std::string::npos) ++families["tcfa"];
  }
  json summary = {{"command", "inspect"},
                  {"path", path},
                  {"kind", kind},
                  {"tensors", ck.tensors.size()},
                  {"total_values", total},
                  {"entries", entries},
                  {"metadata", ck.metadata}};
  if (kind == "adapter_set") {
    const AdapterSet set = load_adapters(path);
    summary["adapter_params"] = count_params(set);
  }
  if (!families.empty()) summary["attention_entries"] = families;

  if (a.json) {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::cout << path << ": kind=" << kind << ", " << ck.tensors.size() << " tensors, " << total
              << " values\n";
    for (const auto& [k, v] : ck.metadata) std::cout << "  meta " << k << " = " << v << "\n";
    for (const auto& [name, t] : ck.tensors)
      std::cout << "  " << name << " " << t.shape_str() << "\n";
    if (summary.count("adapter_params"))
      std::cout << "  adapter params: " << summary["adapter_params"].get<std::int64_t>() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"motionlab: one-shot motion customization for a toy text-to-video model"};
  app.require_subcommand(1);

  CommonArgs a;
  std::vector<std::string> tloras;
  std::vector<std::string> eval_inputs;
  std::string absorber_flag, seeds_flag, prompt_flag, init_latent_flag, inspect_path;
  std::string ref_flag, motion_flag, color_flag, shape_flag, invert_input;
  double guidance_flag = -1.0;

  auto* gen_data = app.add_subcommand("gen-data", "Render a synthetic corpus");
  add_common(gen_data, a);

  auto* pretrain = app.add_subcommand("pretrain", "Pretrain the toy base model");
  add_common(pretrain, a);

  auto* train_absorber =
      app.add_subcommand("train-absorber", "Stage 1: train appearance absorbers");
  add_common(train_absorber, a);
  train_absorber->add_option("--absorber", absorber_flag,
                             "none|slora|textinv|dual|external:PATH");

  auto* train_motion = app.add_subcommand("train-motion", "Stage 2: train the temporal LoRA");
  add_common(train_motion, a);
  train_motion->add_option("--absorber", absorber_flag,
                           "none|slora|textinv|dual|external:PATH");

  auto* generate = app.add_subcommand("generate", "Stage 3: sample videos");
  add_common(generate, a);
  generate->add_option("--tlora", tloras, "Temporal LoRA artifact (repeatable)");
  generate->add_option("--seeds", seeds_flag, "Comma-separated seed list");
  generate->add_option("--prompt", prompt_flag, "Generation prompt");
  generate->add_option("--init-latent", init_latent_flag, "Initial latent (.vten)");
  generate->add_option("--guidance", guidance_flag, "Classifier-free guidance scale");

  auto* invert = app.add_subcommand("invert", "DDIM-invert a clip to its initial latent");
  add_common(invert, a);
  invert->add_option("--tlora", tloras, "Temporal LoRA artifact (repeatable)");
  invert->add_option("--input", invert_input, "Clip to invert (.vten or frame dir)");
  invert->add_option("--guidance", guidance_flag, "Classifier-free guidance scale");

  auto* compose_cmd = app.add_subcommand("compose", "Merge adapter sets into the base weights");
  add_common(compose_cmd, a);
  compose_cmd->add_option("--tlora", tloras, "Adapter artifact (repeatable)");

  auto* eval = app.add_subcommand("eval", "Compute metrics over generated clips");
  add_common(eval, a);
  eval->add_option("videos", eval_inputs, "Clip files or directories");
  eval->add_option("--ref", ref_flag, "Reference clip for motion fidelity");
  eval->add_option("--motion", motion_flag, "Reference motion class");
  eval->add_option("--color", color_flag, "Expected fill color");
  eval->add_option("--shape", shape_flag, "Expected shape");

  auto* inspect = app.add_subcommand("inspect", "Describe a checkpoint container");
  add_common(inspect, a, false);
  inspect->add_option("path", inspect_path, "Container file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (gen_data->parsed()) return cmd_gen_data(a);
    if (pretrain->parsed()) return cmd_pretrain(a);
    if (train_absorber->parsed()) return cmd_train_absorber(a, absorber_flag);
    if (train_motion->parsed()) return cmd_train_motion(a, absorber_flag);
    if (generate->parsed())
      return cmd_generate(a, tloras, seeds_flag, prompt_flag, init_latent_flag, guidance_flag);
    if (invert->parsed()) return cmd_invert(a, tloras, invert_input, guidance_flag);
    if (compose_cmd->parsed()) return cmd_compose(a, tloras);
    if (eval->parsed())
      return cmd_eval(a, eval_inputs, ref_flag, motion_flag, color_flag, shape_flag);
    if (inspect->parsed()) return cmd_inspect(a, inspect_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const VocabError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const RankError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const SelectorError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const CompatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}
