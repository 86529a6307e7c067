/* Copyright 2026 The lgvqa Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <benchmark/benchmark.h>

#include "lgvqa/backend.hpp"
#include "lgvqa/data.hpp"
#include "lgvqa/rng.hpp"
#include "lgvqa/scoring.hpp"
#include "lgvqa/toy_backend.hpp"

namespace {

lgvqa::ToyBackendConfig config_for(std::size_t dim) {
  lgvqa::ToyBackendConfig c;
  c.seed = 1;
  c.dim = dim;
  c.guided_head = true;
  return c;
}

void BM_DualMatch(benchmark::State& state) {
  const auto dual = lgvqa::make_toy_dual(config_for(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lgvqa::dual_match(*dual, "coco/0001.jpg", "What is the man holding? a bat"));
  }
}
BENCHMARK(BM_DualMatch)->Arg(32)->Arg(128);

void BM_FusionMatch(benchmark::State& state) {
  const auto fusion = lgvqa::make_toy_fusion(config_for(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lgvqa::fusion_match(*fusion, "coco/0001.jpg", "What is the man holding? a bat"));
  }
}
BENCHMARK(BM_FusionMatch)->Arg(32)->Arg(128);

void BM_GuidedFusionMatch(benchmark::State& state) {
  const auto fusion = lgvqa::make_toy_fusion(config_for(32));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lgvqa::guided_fusion_match(*fusion, "coco/0001.jpg", "What is the man holding? a bat",
                                                        "What is the man holding? a bat a man swings at a ball"));
  }
}
BENCHMARK(BM_GuidedFusionMatch);

void BM_MaskedSoftmax(benchmark::State& state) {
  lgvqa::Rng rng(3);
  lgvqa::Vector raw(5);
  for (auto& v : raw) v = rng.normal();
  const std::vector<bool> mask{true, true, true, true, false};
  for (auto _ : state) benchmark::DoNotOptimize(lgvqa::masked_softmax(raw, mask));
}
BENCHMARK(BM_MaskedSoftmax);

void BM_ScoreInstance(benchmark::State& state) {
  const auto dual = lgvqa::make_toy_dual(config_for(32));
  const auto ds = lgvqa::synth_dataset(1, 1, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        lgvqa::score_instance(*dual, ds.instances[0], nullptr, lgvqa::ScoringMode::unguided, {}));
  }
}
BENCHMARK(BM_ScoreInstance);

}  // namespace
