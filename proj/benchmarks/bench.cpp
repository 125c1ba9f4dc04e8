// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "motionlab/autograd.hpp"
#include "motionlab/diffusion.hpp"
#include "motionlab/model.hpp"

namespace {

using namespace motionlab;

DenoiserConfig bench_config() {
  DenoiserConfig cfg;
  cfg.frames = 4;
  cfg.height = 16;
  cfg.width = 16;
  cfg.base_width = 16;
  cfg.width_multipliers = {1, 2};
  return cfg;
}

void BM_DenoiserForward(benchmark::State& state) {
  const DenoiserConfig cfg = bench_config();
  Denoiser model(cfg, 0);
  Rng rng(1);
  const Tensor x = rng.randn({cfg.frames, cfg.channels, cfg.height, cfg.width});
  const Tensor text = rng.randn({cfg.max_text_len, cfg.text_dim});
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict(x, 10, text));
  }
}
BENCHMARK(BM_DenoiserForward);

void BM_Sdpa(benchmark::State& state) {
  const int B = 4, S = static_cast<int>(state.range(0)), C = 64;
  Rng rng(2);
  ag::Var q = ag::constant(rng.randn({B, S, C}));
  ag::Var k = ag::constant(rng.randn({B, S, C}));
  ag::Var v = ag::constant(rng.randn({B, S, C}));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ag::sdpa(q, k, v, 4)->val);
  }
}
BENCHMARK(BM_Sdpa)->Arg(64)->Arg(256);

void BM_Conv2d(benchmark::State& state) {
  const int N = 4, C = 32, H = 16, W = 16;
  Rng rng(3);
  ag::Var x = ag::constant(rng.randn({N, C, H, W}));
  ag::Var w = ag::constant(rng.randn({C, C, 3, 3}));
  ag::Var b = ag::constant(rng.randn({C}));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ag::conv2d(x, w, b, 1, 1)->val);
  }
}
BENCHMARK(BM_Conv2d);

void BM_DdimSample(benchmark::State& state) {
  DenoiserConfig cfg = bench_config();
  cfg.frames = 2;
  Denoiser model(cfg, 0);
  const NoiseSchedule sched = NoiseSchedule::linear(300);
  SamplerConfig scfg;
  scfg.steps = static_cast<int>(state.range(0));
  Rng rng(4);
  const Tensor z = rng.randn({cfg.frames, cfg.channels, cfg.height, cfg.width});
  const Tensor text = rng.randn({cfg.max_text_len, cfg.text_dim});
  for (auto _ : state) {
    benchmark::DoNotOptimize(ddim_sample(model, z, text, nullptr, sched, scfg));
  }
}
BENCHMARK(BM_DdimSample)->Arg(5)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
