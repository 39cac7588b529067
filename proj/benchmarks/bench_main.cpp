/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <benchmark/benchmark.h>

#include "saa/fixtures.hpp"
#include "saa/metrics.hpp"
#include "saa/regulator.hpp"

namespace {

using namespace saa;

FeatureMap random_features(std::uint32_t h, std::uint32_t w, std::uint32_t d, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<float> v(std::size_t(h) * w * d);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return FeatureMap(h, w, d, std::move(v));
}

BinaryMask random_mask(std::uint32_t w, std::uint32_t h, double p, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  BinaryMask m(w, h);
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      if (rng.uniform() < p) m.set(x, y);
    }
  }
  return m;
}

void BM_SaliencyGrid(benchmark::State& state) {
  const auto f = random_features(50, 50, 512, 1);
  const auto workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(saliency_grid(f, 400, workers));
}
BENCHMARK(BM_SaliencyGrid)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_PixelF1(benchmark::State& state) {
  const auto side = static_cast<std::uint32_t>(state.range(0));
  Xoshiro256 rng(2);
  std::vector<AnomalyMap> preds;
  std::vector<BinaryMask> truths;
  for (int c = 0; c < 8; ++c) {
    truths.push_back(random_mask(side, side, 0.1, 10 + c));
    AnomalyMap a(side, side);
    for (auto& v : a.values()) v = static_cast<float>(rng.uniform());
    preds.push_back(std::move(a));
  }
  MetricConfig cfg;
  cfg.pixel_sweep = state.range(1) ? PixelSweep::kQuantized : PixelSweep::kExact;
  for (auto _ : state) benchmark::DoNotOptimize(max_f1_pixel(preds, truths, cfg));
  state.SetItemsProcessed(state.iterations() * 8 * side * side);
}
BENCHMARK(BM_PixelF1)->Args({256, 0})->Args({256, 1})->Args({1024, 0})->Args({1024, 1})
    ->Unit(benchmark::kMillisecond);

void BM_Components(benchmark::State& state) {
  const auto m = random_mask(1024, 1024, 0.4, 3);
  for (auto _ : state) benchmark::DoNotOptimize(label_components(m));
}
BENCHMARK(BM_Components)->Unit(benchmark::kMillisecond);

void BM_Fuse(benchmark::State& state) {
  std::vector<RegionCandidate> cands;
  for (int i = 0; i < state.range(0); ++i) {
    RegionCandidate c;
    c.mask = random_mask(400, 400, 0.2, 100 + i);
    c.box = mask_bounds(c.mask);
    c.score = 0.5;
    c.calibrated_score = 0.5 + 0.01 * i;
    cands.push_back(std::move(c));
  }
  for (auto _ : state) benchmark::DoNotOptimize(fuse_topk(cands, 400, 400));
}
BENCHMARK(BM_Fuse)->Arg(1)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
