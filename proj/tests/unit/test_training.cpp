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

#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "lgvqa/data.hpp"
#include "lgvqa/errors.hpp"
#include "lgvqa/guidance.hpp"
#include "lgvqa/rng.hpp"
#include "lgvqa/toy_backend.hpp"
#include "lgvqa/training.hpp"
#include "oracles.hpp"

using namespace lgvqa;

TEST_CASE("cross-entropy matches -log of the softmax") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.index(4);
    Vector raw(n);
    for (auto& v : raw) v = 4.0 * rng.normal();
    const std::size_t gold = rng.index(n);
    const auto rec = choice_cross_entropy(softmax_scores(raw), gold);
    CHECK(std::abs(rec.value - oracle::cross_entropy(raw, gold)) < 1e-12);
    CHECK(rec.class_labels[gold] == 1.0);
  }
  const auto uniform = choice_cross_entropy(softmax_scores({0.7, 0.7, 0.7, 0.7}), 3);
  CHECK(std::abs(uniform.value - std::log(4.0)) < 1e-12);
}

TEST_CASE("cross-entropy on padded slots") {
  const auto s = masked_softmax({2.0, 1.0, 0.0}, {true, true, false});
  CHECK(choice_cross_entropy(s, 1).value == doctest::Approx(oracle::cross_entropy({2.0, 1.0}, 1)));
  CHECK_THROWS_AS(choice_cross_entropy(s, 2), MaskedGoldError);
  CHECK_THROWS_AS(choice_cross_entropy(s, 7), MaskedGoldError);
  const auto g = choice_cross_entropy_gradient(s, 0);
  CHECK(g[2] == 0.0);
  CHECK(std::abs(g[0] + g[1]) < 1e-15);
}

TEST_CASE("cross-entropy gradient matches finite differences") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(4);
    Vector raw(n);
    for (auto& v : raw) v = 3.0 * rng.normal();
    const std::size_t gold = rng.index(n);
    const auto grad = choice_cross_entropy_gradient(softmax_scores(raw), gold);
    for (std::size_t i = 0; i < n; ++i) {
      Vector r = raw;
      const double numeric = oracle::central_difference(
          [&](double v) {
            r[i] = v;
            return oracle::cross_entropy(r, gold);
          },
          raw[i], 1e-5);
      CHECK(oracle::relative_error(grad[i], numeric, 1e-6) < 1e-5);
    }
  }
}

TEST_CASE("AdamW first step matches the closed form") {
  ParameterStore params, grads;
  params.add("w", Tensor{{3}, {0.5, -1.0, 2.0}});
  grads.add("w", Tensor{{3}, {0.1, -3.0, 0.0}});
  AdamWConfig cfg;
  AdamW opt(cfg, 0.01);
  const Vector before = params.at("w").data;
  opt.step(params, grads, {"w"});
  for (std::size_t i = 0; i < 3; ++i) {
    const double want = oracle::adamw_first_step(before[i], grads.at("w").data[i], 0.01, cfg.weight_decay, cfg.eps);
    CHECK(params.at("w").data[i] == doctest::Approx(want).epsilon(1e-14));
  }
  CHECK(opt.steps() == 1);
}

TEST_CASE("AdamW leaves frozen tensors and lr=0 untouched") {
  ParameterStore params, grads;
  params.add("a", Tensor{{2}, {1.0, 2.0}});
  params.add("b", Tensor{{2}, {3.0, 4.0}});
  grads.add("a", Tensor{{2}, {1.0, 1.0}});
  grads.add("b", Tensor{{2}, {1.0, 1.0}});
  AdamW opt({}, 0.1);
  opt.step(params, grads, {"a"});
  CHECK(params.at("b").data == Vector{3.0, 4.0});
  CHECK(params.at("a").data != Vector{1.0, 2.0});

  ParameterStore copy = params;
  AdamW zero({}, 0.0);
  for (int i = 0; i < 5; ++i) zero.step(copy, grads, {"a", "b"});
  CHECK(copy == params);
}

TEST_CASE("freeze policy") {
  ToyBackendConfig c;
  c.dim = 8;
  auto fusion = make_toy_fusion(c);
  const auto trainable = freeze_policy(*fusion);
  CHECK_FALSE(trainable.count("image_encoder.proj"));
  CHECK(trainable.count("qformer.queries"));
  const auto custom = freeze_policy(*fusion, std::vector<std::string>{"qformer"});
  CHECK(custom.count("image_encoder.proj"));
  CHECK_FALSE(custom.count("qformer.queries"));
  CHECK(custom.count("proj.weight"));
  // "proj" must not also freeze "proj_guided.*".
  fusion->attach_guided_head(1);
  const auto no_proj = freeze_policy(*fusion, std::vector<std::string>{"proj"});
  CHECK_FALSE(no_proj.count("proj.weight"));
  CHECK(no_proj.count("proj_guided.weight"));
  auto dual = make_toy_dual(c);
  CHECK(freeze_policy(*dual).size() == dual->parameters().names().size());
}

TEST_CASE("TrainConfig validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.batch_size = 1;
  c.learning_rate = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

namespace {

TrainConfig toy_recipe(ScoringMode mode, std::size_t epochs) {
  TrainConfig c;
  c.mode = mode;
  c.epochs = epochs;
  c.learning_rate = kDefaultToyLearningRate;
  c.seed = 17;
  c.guidance_kinds = *guidance_preset("All");
  return c;
}

}  // namespace

TEST_CASE("toy dual encoder overfits planted data deterministically") {
  const auto ds = synth_dataset(1, 32, 4);
  auto run = [&] {
    ToyBackendConfig c;
    c.seed = 2;
    auto dual = make_toy_dual(c);
    return train(*dual, ds.instances, nullptr, toy_recipe(ScoringMode::unguided, 40));
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.history.back().train_acc == 100.0);
  CHECK(metrics_csv(a.history) == metrics_csv(b.history));
  CHECK(a.history.back().mean_loss < a.history.front().mean_loss);
}

TEST_CASE("guided_merge training on the fusion backend") {
  const auto ds = synth_dataset(2, 24, 3);
  BundleStore bundles;
  for (const auto& inst : ds.instances) {
    GuidanceBundle b(inst.id());
    b.set(GuidanceKind::caption, stub_generator(GuidanceKind::caption, 0).generate(inst.image_ref(), inst.question(), std::nullopt));
    bundles.emplace(inst.id(), b);
  }
  ToyBackendConfig c;
  c.seed = 3;
  c.guided_head = true;
  auto fusion = make_toy_fusion(c);
  const Tensor image_before = fusion->parameters().at("image_encoder.proj");
  const auto result = train(*fusion, ds.instances, &bundles, toy_recipe(ScoringMode::guided_merge, 30));
  CHECK(result.history.back().train_acc == 100.0);
  CHECK(fusion->parameters().at("image_encoder.proj") == image_before);
}

TEST_CASE("variable choice counts are padded within a batch") {
  std::vector<MultiChoiceInstance> mixed;
  const auto two = synth_dataset(4, 8, 2);
  const auto five = synth_dataset(5, 8, 5);
  for (std::size_t i = 0; i < 8; ++i) {
    mixed.push_back(two.instances[i]);
    mixed.push_back(five.instances[i]);
  }
  ToyBackendConfig c;
  c.seed = 4;
  auto dual = make_toy_dual(c);
  const auto result = train(*dual, mixed, nullptr, toy_recipe(ScoringMode::unguided, 30));
  CHECK(result.history.back().train_acc == 100.0);
}

TEST_CASE("missing guidance policy") {
  const auto ds = synth_dataset(6, 10, 4);
  BundleStore bundles;
  for (std::size_t i = 0; i < 6; ++i) {
    GuidanceBundle b(ds.instances[i].id());
    b.set(GuidanceKind::caption, "a photo");
    bundles.emplace(ds.instances[i].id(), b);
  }
  ToyBackendConfig c;
  auto dual = make_toy_dual(c);
  auto cfg = toy_recipe(ScoringMode::guided_concat, 1);
  CHECK_THROWS_AS(Trainer(*dual, ds.instances, &bundles, cfg), MissingGuidanceError);
  CHECK_THROWS_AS(Trainer(*dual, ds.instances, nullptr, cfg), MissingGuidanceError);
  cfg.missing_guidance = MissingGuidancePolicy::skip;
  Trainer t(*dual, ds.instances, &bundles, cfg);
  CHECK(t.skipped_instances() == 4);
  auto fusion = make_toy_fusion(c);
  CHECK_THROWS_AS(Trainer(*fusion, ds.instances, nullptr, toy_recipe(ScoringMode::guided_merge, 1)),
                  ModeBackendMismatchError);
  CHECK_THROWS_AS(Trainer(*dual, std::span<const MultiChoiceInstance>{}, nullptr, cfg), EmptyDatasetError);
}

TEST_CASE("validation selects the best epoch") {
  const auto train_set = synth_dataset(7, 24, 4);
  const auto val_set = synth_dataset(8, 16, 4);
  ToyBackendConfig c;
  c.seed = 5;
  auto dual = make_toy_dual(c);
  Trainer t(*dual, train_set.instances, nullptr, toy_recipe(ScoringMode::unguided, 6), val_set.instances);
  while (!t.finished()) t.run_epoch();
  REQUIRE(t.best_epoch().has_value());
  double best = -1.0;
  for (const auto& m : t.history()) best = std::max(best, *m.val_acc);
  CHECK(*t.history()[*t.best_epoch() - 1].val_acc == best);
  REQUIRE(t.best_parameters() != nullptr);

  auto dual2 = make_toy_dual(c);
  const auto result = train(*dual2, train_set.instances, nullptr, toy_recipe(ScoringMode::unguided, 6), val_set.instances);
  CHECK(dual2->parameters() == *t.best_parameters());
  CHECK(result.best_epoch == t.best_epoch());
}

TEST_CASE("resuming from a saved state reproduces the uninterrupted run") {
  const auto ds = synth_dataset(9, 16, 4);
  ToyBackendConfig c;
  c.seed = 6;
  const auto cfg = toy_recipe(ScoringMode::unguided, 4);

  auto straight = make_toy_dual(c);
  Trainer full(*straight, ds.instances, nullptr, cfg);
  while (!full.finished()) full.run_epoch();

  auto first = make_toy_dual(c);
  Trainer half(*first, ds.instances, nullptr, cfg);
  half.run_epoch();
  half.run_epoch();
  const std::string state_json = half.state().to_json();

  auto resumed_backend = first->clone();
  Trainer resumed(*resumed_backend, ds.instances, nullptr, cfg);
  resumed.restore(TrainState::from_json(state_json));
  while (!resumed.finished()) resumed.run_epoch();
  CHECK(resumed_backend->parameters() == straight->parameters());
  CHECK(metrics_csv(resumed.history()) == metrics_csv(full.history()));
}

TEST_CASE("metrics CSV format") {
  std::vector<EpochMetrics> h{{1, 4, 1.25, 50.0, std::nullopt}, {2, 8, 0.5, 75.0, 62.5}};
  CHECK(metrics_csv(h) == "epoch,step,mean_loss,train_acc,val_acc\n1,4,1.250000,50.00,\n2,8,0.500000,75.00,62.50\n");
}

TEST_CASE("predict_dataset") {
  const auto ds = synth_dataset(10, 5, 3);
  ToyBackendConfig c;
  auto dual = make_toy_dual(c);
  const std::vector<GuidanceKind> kinds{GuidanceKind::caption};
  const auto preds = predict_dataset(*dual, ds.instances, nullptr, ScoringMode::zero_shot, kinds);
  REQUIRE(preds.size() == 5);
  CHECK(preds[0].mode == "zero_shot");
  CHECK(preds[0].gold_index == ds.instances[0].gold_index());
  CHECK_THROWS_AS(predict_dataset(*dual, ds.instances, nullptr, ScoringMode::guided_concat, kinds),
                  MissingGuidanceError);
  const auto lenient = predict_dataset(*dual, ds.instances, nullptr, ScoringMode::guided_concat, kinds, true);
  CHECK(lenient[0].raw == preds[0].raw);
}
