// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "motionlab/config.hpp"

#include <fstream>
#include <sstream>

#include "motionlab/errors.hpp"

namespace motionlab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

IniFile IniFile::parse(const std::string& text) {
  IniFile ini;
  std::istringstream iss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(iss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
      ini.sections[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    if (section.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    ini.sections[section][key] = trim(t.substr(eq + 1));
  }
  return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  const auto it = sections.find(section);
  return it != sections.end() && it->second.count(key) > 0;
}

std::string IniFile::get(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
  const auto it = sections.find(section);
  if (it == sections.end()) return fallback;
  const auto kt = it->second.find(key);
  return kt == it->second.end() ? fallback : kt->second;
}

double IniFile::get_num(const std::string& section, const std::string& key,
                        double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string s = get(section, key, "");
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config [" + section + "] " + key + ": '" + s + "' is not a number");
  }
}

int IniFile::get_int(const std::string& section, const std::string& key, int fallback) const {
  const double v = get_num(section, key, fallback);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError("config [" + section + "] " + key + ": expected an integer");
  return i;
}

bool IniFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string s = get(section, key, "");
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config [" + section + "] " + key + ": expected a boolean");
}

AbsorberSelection parse_absorber_selection(const std::string& s) {
  AbsorberSelection sel;
  if (s == "none")
    sel.mode = AbsorberMode::None;
  else if (s == "slora")
    sel.mode = AbsorberMode::SLora;
  else if (s == "textinv")
    sel.mode = AbsorberMode::TextInv;
  else if (s == "dual")
    sel.mode = AbsorberMode::Dual;
  else if (s.rfind("external:", 0) == 0) {
    sel.mode = AbsorberMode::External;
    sel.external_path = s.substr(9);
    if (sel.external_path.empty()) throw ConfigError("absorber: external selection needs a path");
  } else {
    throw ConfigError("absorber: '" + s +
                      "' is not one of none|slora|textinv|dual|external:PATH");
  }
  return sel;
}

std::string absorber_selection_name(const AbsorberSelection& sel) {
  switch (sel.mode) {
    case AbsorberMode::None:
      return "none";
    case AbsorberMode::SLora:
      return "slora";
    case AbsorberMode::TextInv:
      return "textinv";
    case AbsorberMode::Dual:
      return "dual";
    case AbsorberMode::External:
      return "external:" + sel.external_path;
  }
  return "none";
}

void RunConfig::validate() const {
  model.validate();
  if (schedule.T < 1) throw ConfigError("[schedule] T must be >= 1");
  if (!(schedule.beta_start > 0 && schedule.beta_start <= schedule.beta_end &&
        schedule.beta_end < 1))
    throw ConfigError("[schedule] need 0 < beta_start <= beta_end < 1");
  if (pretrain.lr <= 0 || stage1.lr <= 0 || stage2.lr <= 0)
    throw ConfigError("learning rates must be positive");
  if (pretrain.steps < 0 || stage1.steps < 0 || stage2.steps < 0)
    throw ConfigError("step counts must be non-negative");
  if (pretrain.batch < 1 || stage1.batch < 1 || stage2.batch < 1)
    throw ConfigError("batch sizes must be >= 1");
  if (pretrain.cond_drop < 0 || pretrain.cond_drop >= 1)
    throw ConfigError("[pretrain] cond_drop must be in [0, 1)");
  if (pretrain.corpus_size < 1) throw ConfigError("[pretrain] corpus_size must be >= 1");
  if (pretrain.ema < 0 || pretrain.ema >= 1)
    throw ConfigError("[pretrain] ema must be in [0, 1)");
  if (pretrain.lr_final < 0 || pretrain.lr_final > pretrain.lr)
    throw ConfigError("[pretrain] lr_final must be in [0, lr]");
  if (stage1.rank < 1 || stage2.rank < 1) throw ConfigError("adapter ranks must be >= 1");
  if (stage1.n_tokens < kMinInversionTokens || stage1.n_tokens > kMaxInversionTokens)
    throw ConfigError("[stage1] n_tokens must be in [2, 6]");
  stage1.crop.validate();
  if (infer.steps < 1 || infer.steps > schedule.T)
    throw ConfigError("[infer] need 1 <= steps <= T");
}

RunConfig run_config_from_ini(const IniFile& ini) {
  RunConfig c;
  c.model.frames = ini.get_int("model", "frames", c.model.frames);
  c.model.height = ini.get_int("model", "height", c.model.height);
  c.model.width = ini.get_int("model", "width", c.model.width);
  c.model.channels = ini.get_int("model", "channels", c.model.channels);
  c.model.base_width = ini.get_int("model", "base_width", c.model.base_width);
  c.model.heads = ini.get_int("model", "heads", c.model.heads);
  c.model.text_dim = ini.get_int("model", "text_dim", c.model.text_dim);
  c.model.max_text_len = ini.get_int("model", "max_text_len", c.model.max_text_len);
  c.model.time_embed_dim = ini.get_int("model", "time_embed_dim", c.model.time_embed_dim);
  if (ini.has("model", "width_multipliers")) {
    c.model.width_multipliers.clear();
    std::istringstream ms(ini.get("model", "width_multipliers", ""));
    std::string tok;
    while (std::getline(ms, tok, ',')) {
      try {
        c.model.width_multipliers.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw ConfigError("config [model] width_multipliers: expected comma-separated ints");
      }
    }
  }

  c.schedule.T = ini.get_int("schedule", "T", c.schedule.T);
  c.schedule.beta_start = ini.get_num("schedule", "beta_start", c.schedule.beta_start);
  c.schedule.beta_end = ini.get_num("schedule", "beta_end", c.schedule.beta_end);

  c.pretrain.steps = ini.get_int("pretrain", "steps", c.pretrain.steps);
  c.pretrain.batch = ini.get_int("pretrain", "batch", c.pretrain.batch);
  c.pretrain.lr = static_cast<float>(ini.get_num("pretrain", "lr", c.pretrain.lr));
  c.pretrain.cond_drop =
      static_cast<float>(ini.get_num("pretrain", "cond_drop", c.pretrain.cond_drop));
  c.pretrain.corpus_size = ini.get_int("pretrain", "corpus_size", c.pretrain.corpus_size);
  c.pretrain.ema = static_cast<float>(ini.get_num("pretrain", "ema", c.pretrain.ema));
  c.pretrain.lr_final =
      static_cast<float>(ini.get_num("pretrain", "lr_final", c.pretrain.lr_final));

  c.stage1.steps = ini.get_int("stage1", "steps", c.stage1.steps);
  c.stage1.batch = ini.get_int("stage1", "batch", c.stage1.batch);
  c.stage1.lr = static_cast<float>(ini.get_num("stage1", "lr", c.stage1.lr));
  c.stage1.rank = ini.get_int("stage1", "rank", c.stage1.rank);
  c.stage1.alpha = static_cast<float>(ini.get_num("stage1", "alpha", c.stage1.alpha));
  c.stage1.n_tokens = ini.get_int("stage1", "n_tokens", c.stage1.n_tokens);
  c.stage1.crop.ratio_min = ini.get_num("stage1", "crop_min", c.stage1.crop.ratio_min);
  c.stage1.crop.ratio_max = ini.get_num("stage1", "crop_max", c.stage1.crop.ratio_max);
  c.stage1.crop.enabled = ini.get_bool("stage1", "crop", c.stage1.crop.enabled);
  c.stage1.absorber =
      parse_absorber_selection(ini.get("stage1", "absorber", absorber_selection_name(c.stage1.absorber)));

  c.stage2.steps = ini.get_int("stage2", "steps", c.stage2.steps);
  c.stage2.batch = ini.get_int("stage2", "batch", c.stage2.batch);
  c.stage2.lr = static_cast<float>(ini.get_num("stage2", "lr", c.stage2.lr));
  c.stage2.rank = ini.get_int("stage2", "rank", c.stage2.rank);
  c.stage2.alpha = static_cast<float>(ini.get_num("stage2", "alpha", c.stage2.alpha));

  c.infer.steps = ini.get_int("infer", "steps", c.infer.steps);
  c.infer.guidance = static_cast<float>(ini.get_num("infer", "guidance", c.infer.guidance));

  c.seed = static_cast<std::uint64_t>(ini.get_num("pretrain", "seed", 0));
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  return run_config_from_ini(IniFile::parse_file(path));
}

std::string run_config_text(const RunConfig& c) {
  std::ostringstream o;
  o << "[model]\n"
    << "frames = " << c.model.frames << "\nheight = " << c.model.height
    << "\nwidth = " << c.model.width << "\nchannels = " << c.model.channels
    << "\nbase_width = " << c.model.base_width << "\nwidth_multipliers = ";
  for (size_t i = 0; i < c.model.width_multipliers.size(); ++i)
    o << (i ? "," : "") << c.model.width_multipliers[i];
  o << "\nheads = " << c.model.heads << "\ntext_dim = " << c.model.text_dim
    << "\nmax_text_len = " << c.model.max_text_len
    << "\ntime_embed_dim = " << c.model.time_embed_dim << "\n\n";
  o << "[schedule]\nT = " << c.schedule.T << "\nbeta_start = " << c.schedule.beta_start
    << "\nbeta_end = " << c.schedule.beta_end << "\n\n";
  o << "[pretrain]\nsteps = " << c.pretrain.steps << "\nbatch = " << c.pretrain.batch
    << "\nlr = " << c.pretrain.lr << "\ncond_drop = " << c.pretrain.cond_drop
    << "\ncorpus_size = " << c.pretrain.corpus_size << "\nema = " << c.pretrain.ema
    << "\nlr_final = " << c.pretrain.lr_final << "\nseed = " << c.seed << "\n\n";
  o << "[stage1]\nsteps = " << c.stage1.steps << "\nbatch = " << c.stage1.batch
    << "\nlr = " << c.stage1.lr << "\nrank = " << c.stage1.rank
    << "\nalpha = " << c.stage1.alpha << "\nn_tokens = " << c.stage1.n_tokens
    << "\ncrop = " << (c.stage1.crop.enabled ? "true" : "false")
    << "\ncrop_min = " << c.stage1.crop.ratio_min << "\ncrop_max = " << c.stage1.crop.ratio_max
    << "\nabsorber = " << absorber_selection_name(c.stage1.absorber) << "\n\n";
  o << "[stage2]\nsteps = " << c.stage2.steps << "\nbatch = " << c.stage2.batch
    << "\nlr = " << c.stage2.lr << "\nrank = " << c.stage2.rank
    << "\nalpha = " << c.stage2.alpha << "\n\n";
  o << "[infer]\nsteps = " << c.infer.steps << "\nguidance = " << c.infer.guidance << "\n";
  return o.str();
}

}  // namespace motionlab
