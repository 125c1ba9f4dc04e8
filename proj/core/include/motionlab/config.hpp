// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "motionlab/absorbers.hpp"
#include "motionlab/diffusion.hpp"
#include "motionlab/model.hpp"

namespace motionlab {

/// Sectioned key/value run-configuration text ("[section]" headers,
/// "key = value" lines, '#' or ';' comments).
struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static IniFile parse(const std::string& text);
  static IniFile parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_num(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
};

enum class AbsorberMode { None, SLora, TextInv, Dual, External };

struct AbsorberSelection {
  AbsorberMode mode = AbsorberMode::None;
  std::string external_path;
};
/// Parses "none|slora|textinv|dual|external:PATH"; ConfigError otherwise.
AbsorberSelection parse_absorber_selection(const std::string& s);
std::string absorber_selection_name(const AbsorberSelection& sel);

struct Stage1Config {
  int steps = 200;
  int batch = 4;
  float lr = 5e-5f;
  int rank = 1;
  float alpha = 0.5f;
  int n_tokens = 2;
  CropConfig crop;
  AbsorberSelection absorber;
};

struct Stage2Config {
  int steps = 400;
  int batch = 1;
  float lr = 5e-4f;
  int rank = 4;
  float alpha = 1.0f;
};

struct PretrainConfig {
  int steps = 1500;
  int batch = 4;
  float lr = 1e-3f;
  float cond_drop = 0.1f;  // prompt-drop probability for classifier-free guidance
  int corpus_size = 64;
  float ema = 0.0f;       // weight EMA decay per step; 0 disables
  float lr_final = 0.0f;  // cosine-decay target learning rate; 0 keeps lr constant
};

struct ScheduleConfig {
  int T = 300;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  NoiseSchedule build() const { return NoiseSchedule::linear(T, beta_start, beta_end); }
};

/// Everything one run needs; sections [model], [schedule], [stage1], [stage2],
/// [infer] plus the auxiliary [pretrain] and [data] sections.
struct RunConfig {
  DenoiserConfig model;
  ScheduleConfig schedule;
  PretrainConfig pretrain;
  Stage1Config stage1;
  Stage2Config stage2;
  SamplerConfig infer;
  std::uint64_t seed = 0;

  void validate() const;
};

RunConfig run_config_from_ini(const IniFile& ini);
RunConfig load_run_config(const std::string& path);
/// The config snapshot written into run manifests.
std::string run_config_text(const RunConfig& cfg);

}  // namespace motionlab
