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

#include "lgvqa/data.hpp"
#include "lgvqa/toy_backend.hpp"
#include "lgvqa/training.hpp"

namespace {

// One epoch over 32 synthetic instances, batch 8.
template <typename Make>
void run_epochs(benchmark::State& state, Make make) {
  const auto ds = lgvqa::synth_dataset(7, 32, 4);
  auto backend = make();
  lgvqa::TrainConfig tc;
  tc.learning_rate = lgvqa::kDefaultToyLearningRate;
  tc.epochs = 1u << 30;
  lgvqa::Trainer trainer(*backend, ds.instances, nullptr, tc);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.run_epoch());
  state.SetItemsProcessed(state.iterations() * 32);
}

void BM_EpochDual(benchmark::State& state) {
  run_epochs(state, [] { return lgvqa::make_toy_dual(lgvqa::ToyBackendConfig{}); });
}
BENCHMARK(BM_EpochDual)->Unit(benchmark::kMillisecond);

void BM_EpochFusion(benchmark::State& state) {
  run_epochs(state, [] { return lgvqa::make_toy_fusion(lgvqa::ToyBackendConfig{}); });
}
BENCHMARK(BM_EpochFusion)->Unit(benchmark::kMillisecond);

}  // namespace
