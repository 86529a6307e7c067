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

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lgvqa/backend.hpp"
#include "lgvqa/instance.hpp"
#include "lgvqa/rng.hpp"
#include "lgvqa/scoring.hpp"

namespace lgvqa {

// -log(normalized[gold]) over the valid slots, computed as
// logsumexp(raw) - raw[gold]. Throws MaskedGoldError when gold is out of
// range or masked.
LossRecord choice_cross_entropy(const ChoiceScores& scores, std::size_t gold_index);

// d loss / d raw = normalized - one_hot(gold); zero on masked slots.
Vector choice_cross_entropy_gradient(const ChoiceScores& scores, std::size_t gold_index);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay. Only parameters named in the trainable
// set are touched; moments are kept for every trainable tensor.
class AdamW {
 public:
  AdamW(AdamWConfig config, double learning_rate);

  void step(ParameterStore& params, const ParameterStore& grads,
            const std::set<std::string>& trainable);

  std::size_t steps() const { return steps_; }
  const ParameterStore& first_moment() const { return m_; }
  const ParameterStore& second_moment() const { return v_; }
  void restore(std::size_t steps, ParameterStore first, ParameterStore second);

 private:
  AdamWConfig config_;
  double lr_;
  std::size_t steps_ = 0;
  ParameterStore m_;
  ParameterStore v_;
};

// Trainable parameter names. Frozen prefixes default to the backend's own
// list (image encoder for fusion backends, none for dual encoders); an
// override list replaces the defaults. A prefix matches the name itself or
// any name continuing with '.'.
std::set<std::string> freeze_policy(const Backend& backend,
                                    const std::optional<std::vector<std::string>>& frozen_override = std::nullopt);

enum class MissingGuidancePolicy { error, skip };

inline constexpr double kDefaultPretrainedLearningRate = 3e-6;
inline constexpr double kDefaultToyLearningRate = 1e-2;

struct TrainConfig {
  std::size_t batch_size = 8;
  std::size_t epochs = 8;
  double learning_rate = kDefaultPretrainedLearningRate;
  AdamWConfig optimizer;
  ScoringMode mode = ScoringMode::unguided;
  std::vector<GuidanceKind> guidance_kinds;
  std::uint64_t seed = 0;
  MissingGuidancePolicy missing_guidance = MissingGuidancePolicy::error;
  std::optional<std::vector<std::string>> frozen_override;

  // Throws ConfigError on batch_size < 1, epochs < 1, or learning_rate < 0.
  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double mean_loss = 0.0;
  double train_acc = 0.0;
  std::optional<double> val_acc;

  bool operator==(const EpochMetrics&) const = default;
};

// Resume point between epochs. Parameters travel separately as a checkpoint.
struct TrainState {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double running_loss = 0.0;
  std::string rng_state;
  std::size_t optimizer_steps = 0;
  ParameterStore first_moment;
  ParameterStore second_moment;
  std::vector<EpochMetrics> history;

  std::string to_json() const;
  static TrainState from_json(const std::string& text);
};

// Runs epochs of shuffled mini-batch training over one dataset. The batch
// loss is the mean cross-entropy over its instances; choice lists of
// different lengths are padded to the batch maximum with masked slots.
class Trainer {
 public:
  // Throws EmptyDatasetError, MissingGuidanceError (policy error), or
  // ModeBackendMismatchError.
  Trainer(Backend& backend, std::span<const MultiChoiceInstance> train_set,
          const BundleStore* bundles, TrainConfig config,
          std::span<const MultiChoiceInstance> val_set = {});

  EpochMetrics run_epoch();
  bool finished() const { return epoch_ >= config_.epochs; }

  const std::vector<EpochMetrics>& history() const { return history_; }
  const std::set<std::string>& trainable() const { return trainable_; }
  std::size_t skipped_instances() const { return train_set_.size() - usable_.size(); }

  // Best validation epoch (1-based) and its parameters; nullopt without a
  // validation set.
  std::optional<std::size_t> best_epoch() const { return best_epoch_; }
  const ParameterStore* best_parameters() const {
    return best_epoch_ ? &best_params_ : nullptr;
  }

  TrainState state() const;
  void restore(const TrainState& state);

 private:
  double accuracy_on(std::span<const MultiChoiceInstance> instances,
                     const std::vector<std::string>& guidance) const;

  Backend& backend_;
  std::span<const MultiChoiceInstance> train_set_;
  std::span<const MultiChoiceInstance> val_set_;
  TrainConfig config_;
  std::set<std::string> trainable_;
  std::vector<std::size_t> usable_;
  std::vector<std::string> train_guidance_;
  std::vector<std::string> val_guidance_;
  AdamW optimizer_;
  Rng rng_;
  std::size_t step_ = 0;
  std::size_t epoch_ = 0;
  double running_loss_ = 0.0;
  std::vector<EpochMetrics> history_;
  std::optional<std::size_t> best_epoch_;
  double best_val_ = -1.0;
  ParameterStore best_params_;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  std::optional<std::size_t> best_epoch;
  std::size_t skipped_instances = 0;
};

// Full run. With a validation set the backend ends holding the parameters
// of the best validation epoch.
TrainResult train(Backend& backend, std::span<const MultiChoiceInstance> train_set,
                  const BundleStore* bundles, const TrainConfig& config,
                  std::span<const MultiChoiceInstance> val_set = {});

// Columns: epoch, step, mean_loss, train_acc, val_acc.
std::string metrics_csv(std::span<const EpochMetrics> history);

// Scores every instance. Instances without a bundle in a guided mode throw
// MissingGuidanceError unless missing_as_empty is set.
std::vector<PredictionRecord> predict_dataset(const Backend& backend,
                                              std::span<const MultiChoiceInstance> instances,
                                              const BundleStore* bundles, ScoringMode mode,
                                              std::span<const GuidanceKind> kinds,
                                              bool missing_as_empty = false);

}  // namespace lgvqa
