// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "motionlab/config.hpp"
#include "motionlab/errors.hpp"

using namespace motionlab;
namespace fs = std::filesystem;

TEST_CASE("ini parsing: sections, comments, whitespace") {
  const std::string text =
      "# top comment\n"
      "[model]\n"
      "frames = 8\n"
      "  height=32  \n"
      "; another comment\n"
      "[stage1]\n"
      "lr = 5e-5\n"
      "absorber = dual\n"
      "enabled = true\n";
  const IniFile ini = IniFile::parse(text);
  CHECK(ini.has("model", "frames"));
  CHECK(ini.get_int("model", "frames", 0) == 8);
  CHECK(ini.get_int("model", "height", 0) == 32);
  CHECK(ini.get_num("stage1", "lr", 0) == doctest::Approx(5e-5));
  CHECK(ini.get("stage1", "absorber", "") == "dual");
  CHECK(ini.get_bool("stage1", "enabled", false));
  CHECK_FALSE(ini.has("model", "width"));
  CHECK(ini.get("missing", "key", "fallback") == "fallback");
}

TEST_CASE("ini parsing errors carry line numbers") {
  CHECK_THROWS_WITH_AS(IniFile::parse("[model]\nnot a key value\n"), doctest::Contains("line 2"),
                       ConfigError);
  CHECK_THROWS_AS(IniFile::parse("key = before any section\n"), ConfigError);
  CHECK_THROWS_AS(IniFile::parse("[unclosed\n"), ConfigError);
}

TEST_CASE("absorber selection parses all modes") {
  CHECK(parse_absorber_selection("none").mode == AbsorberMode::None);
  CHECK(parse_absorber_selection("slora").mode == AbsorberMode::SLora);
  CHECK(parse_absorber_selection("textinv").mode == AbsorberMode::TextInv);
  CHECK(parse_absorber_selection("dual").mode == AbsorberMode::Dual);
  const AbsorberSelection ext = parse_absorber_selection("external:/tmp/a.ckpt");
  CHECK(ext.mode == AbsorberMode::External);
  CHECK(ext.external_path == "/tmp/a.ckpt");
  CHECK_THROWS_AS(parse_absorber_selection("bogus"), ConfigError);
  CHECK_THROWS_AS(parse_absorber_selection("external:"), ConfigError);
  CHECK(absorber_selection_name(ext) == "external:/tmp/a.ckpt");
  CHECK(absorber_selection_name(parse_absorber_selection("dual")) == "dual");
}

TEST_CASE("default run configuration matches the documented defaults") {
  const RunConfig cfg = run_config_from_ini(IniFile::parse(""));
  // stage 2: temporal adapters
  CHECK(cfg.stage2.rank == 4);
  CHECK(cfg.stage2.alpha == 1.0f);
  CHECK(cfg.stage2.lr == doctest::Approx(5e-4f));
  CHECK(cfg.stage2.steps == 400);
  // stage 1: appearance absorbers
  CHECK(cfg.stage1.rank == 1);
  CHECK(cfg.stage1.alpha == 0.5f);
  CHECK(cfg.stage1.lr == doctest::Approx(5e-5f));
  CHECK(cfg.stage1.batch == 4);
  CHECK(cfg.stage1.n_tokens == 2);
  CHECK(cfg.stage1.crop.ratio_min == doctest::Approx(0.33));
  CHECK(cfg.stage1.crop.ratio_max == doctest::Approx(0.67));
  // schedule
  CHECK(cfg.schedule.T == 300);
  CHECK(cfg.schedule.beta_start == doctest::Approx(1e-4));
  CHECK(cfg.schedule.beta_end == doctest::Approx(0.02));
  // model
  CHECK(cfg.model.frames == 8);
  CHECK(cfg.model.height == 32);
  CHECK(cfg.model.width == 32);
  CHECK(cfg.infer.steps == 50);
  cfg.validate();
}

TEST_CASE("run configuration reads overrides from every section") {
  const std::string text =
      "[model]\n"
      "frames = 4\n"
      "height = 16\n"
      "width = 16\n"
      "base_width = 8\n"
      "width_multipliers = 1,2\n"
      "[schedule]\n"
      "T = 100\n"
      "[stage1]\n"
      "steps = 10\n"
      "absorber = textinv\n"
      "n_tokens = 3\n"
      "[stage2]\n"
      "steps = 20\n"
      "rank = 2\n"
      "[infer]\n"
      "steps = 5\n"
      "guidance = 2.5\n"
      "[pretrain]\n"
      "steps = 7\n"
      "seed = 42\n";
  const RunConfig cfg = run_config_from_ini(IniFile::parse(text));
  CHECK(cfg.model.frames == 4);
  CHECK(cfg.model.height == 16);
  CHECK(cfg.model.base_width == 8);
  CHECK(cfg.model.width_multipliers == std::vector<int>{1, 2});
  CHECK(cfg.schedule.T == 100);
  CHECK(cfg.stage1.steps == 10);
  CHECK(cfg.stage1.absorber.mode == AbsorberMode::TextInv);
  CHECK(cfg.stage1.n_tokens == 3);
  CHECK(cfg.stage2.steps == 20);
  CHECK(cfg.stage2.rank == 2);
  CHECK(cfg.infer.steps == 5);
  CHECK(cfg.infer.guidance == doctest::Approx(2.5f));
  CHECK(cfg.pretrain.steps == 7);
  CHECK(cfg.seed == 42);
}

TEST_CASE("run configuration validation rejects bad values") {
  RunConfig cfg = run_config_from_ini(IniFile::parse(""));
  cfg.stage2.rank = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = run_config_from_ini(IniFile::parse(""));
  cfg.schedule.beta_start = 0.5;
  cfg.schedule.beta_end = 0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = run_config_from_ini(IniFile::parse(""));
  cfg.stage1.crop.ratio_min = 0.9;
  cfg.stage1.crop.ratio_max = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = run_config_from_ini(IniFile::parse(""));
  cfg.infer.steps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = run_config_from_ini(IniFile::parse(""));
  cfg.stage1.n_tokens = 9;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("run config snapshot round-trips through the parser") {
  RunConfig cfg = run_config_from_ini(IniFile::parse(""));
  cfg.model.frames = 4;
  cfg.stage1.absorber = parse_absorber_selection("dual");
  cfg.stage2.steps = 123;
  cfg.infer.guidance = 1.5f;
  cfg.seed = 17;
  const std::string text = run_config_text(cfg);
  const RunConfig back = run_config_from_ini(IniFile::parse(text));
  CHECK(back.model.frames == 4);
  CHECK(back.stage1.absorber.mode == AbsorberMode::Dual);
  CHECK(back.stage2.steps == 123);
  CHECK(back.infer.guidance == doctest::Approx(1.5f));
  CHECK(back.seed == 17);
  CHECK(run_config_text(back) == text);
}

TEST_CASE("load_run_config reads a file and reports a missing one") {
  const std::string path = (fs::temp_directory_path() / "motionlab_cfg.ini").string();
  std::ofstream(path) << "[stage2]\nsteps = 9\n";
  CHECK(load_run_config(path).stage2.steps == 9);
  fs::remove(path);
  CHECK_THROWS_AS(load_run_config(path), ConfigError);
}
