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

#include "lgvqa/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "lgvqa/errors.hpp"
#include "lgvqa/guidance.hpp"

namespace lgvqa {

using nlohmann::json;

LossRecord choice_cross_entropy(const ChoiceScores& scores, std::size_t gold_index) {
  if (gold_index >= scores.size() || !scores.mask[gold_index]) {
    throw MaskedGoldError("gold index " + std::to_string(gold_index) + " is masked or out of range");
  }
  double max_raw = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores.mask[i]) max_raw = std::max(max_raw, scores.raw[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores.mask[i]) total += std::exp(scores.raw[i] - max_raw);
  }
  LossRecord record;
  record.value = std::max(0.0, max_raw + std::log(total) - scores.raw[gold_index]);
  record.gold_index = gold_index;
  record.class_labels.assign(scores.size(), 0.0);
  record.class_labels[gold_index] = 1.0;
  return record;
}

Vector choice_cross_entropy_gradient(const ChoiceScores& scores, std::size_t gold_index) {
  if (gold_index >= scores.size() || !scores.mask[gold_index]) {
    throw MaskedGoldError("gold index " + std::to_string(gold_index) + " is masked or out of range");
  }
  Vector grad(scores.size(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!scores.mask[i]) continue;
    grad[i] = scores.normalized[i] - (i == gold_index ? 1.0 : 0.0);
  }
  return grad;
}

// ---------------------------------------------------------------------------

AdamW::AdamW(AdamWConfig config, double learning_rate) : config_(config), lr_(learning_rate) {}

void AdamW::step(ParameterStore& params, const ParameterStore& grads,
                 const std::set<std::string>& trainable) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bias1 = 1.0 - std::pow(config_.beta1, t);
  const double bias2 = 1.0 - std::pow(config_.beta2, t);
  const double step_size = lr_ / bias1;
  const double bias2_sqrt = std::sqrt(bias2);

  for (const auto& name : trainable) {
    Tensor& p = params.at(name);
    const Tensor& g = grads.at(name);
    if (!m_.contains(name)) {
      m_.add(name, Tensor::zeros(p.shape));
      v_.add(name, Tensor::zeros(p.shape));
    }
    Tensor& m = m_.at(name);
    Tensor& v = v_.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p.data[i] *= 1.0 - lr_ * config_.weight_decay;
      m.data[i] = config_.beta1 * m.data[i] + (1.0 - config_.beta1) * g.data[i];
      v.data[i] = config_.beta2 * v.data[i] + (1.0 - config_.beta2) * g.data[i] * g.data[i];
      const double denom = std::sqrt(v.data[i]) / bias2_sqrt + config_.eps;
      p.data[i] -= step_size * m.data[i] / denom;
    }
  }
}

void AdamW::restore(std::size_t steps, ParameterStore first, ParameterStore second) {
  steps_ = steps;
  m_ = std::move(first);
  v_ = std::move(second);
}

std::set<std::string> freeze_policy(const Backend& backend,
                                    const std::optional<std::vector<std::string>>& frozen_override) {
  const std::vector<std::string> frozen =
      frozen_override ? *frozen_override : backend.default_frozen_prefixes();
  std::set<std::string> trainable;
  for (const auto& name : backend.parameters().names()) {
    const bool is_frozen = std::any_of(frozen.begin(), frozen.end(), [&](const std::string& prefix) {
      return name == prefix || (name.size() > prefix.size() && name.compare(0, prefix.size(), prefix) == 0 &&
                                name[prefix.size()] == '.');
    });
    if (!is_frozen) trainable.insert(name);
  }
  return trainable;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be a finite non-negative number");
  }
}

// ---------------------------------------------------------------------------

namespace {

json store_to_json(const ParameterStore& store) {
  json out = json::object();
  for (const auto& [name, t] : store) out[name] = {{"shape", t.shape}, {"data", t.data}};
  return out;
}

ParameterStore store_from_json(const json& j) {
  ParameterStore store;
  for (const auto& [name, entry] : j.items()) {
    Tensor t;
    t.shape = entry.at("shape").get<std::vector<std::size_t>>();
    t.data = entry.at("data").get<std::vector<double>>();
    store.add(name, std::move(t));
  }
  return store;
}

}  // namespace

std::string TrainState::to_json() const {
  json j;
  j["step"] = step;
  j["epoch"] = epoch;
  j["running_loss"] = running_loss;
  j["rng_state"] = rng_state;
  j["optimizer_steps"] = optimizer_steps;
  j["first_moment"] = store_to_json(first_moment);
  j["second_moment"] = store_to_json(second_moment);
  json hist = json::array();
  for (const auto& m : history) {
    json row = {{"epoch", m.epoch}, {"step", m.step}, {"mean_loss", m.mean_loss},
                {"train_acc", m.train_acc}};
    row["val_acc"] = m.val_acc ? json(*m.val_acc) : json(nullptr);
    hist.push_back(std::move(row));
  }
  j["history"] = std::move(hist);
  return j.dump();
}

TrainState TrainState::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    TrainState s;
    s.step = j.at("step").get<std::size_t>();
    s.epoch = j.at("epoch").get<std::size_t>();
    s.running_loss = j.at("running_loss").get<double>();
    s.rng_state = j.at("rng_state").get<std::string>();
    s.optimizer_steps = j.at("optimizer_steps").get<std::size_t>();
    s.first_moment = store_from_json(j.at("first_moment"));
    s.second_moment = store_from_json(j.at("second_moment"));
    for (const auto& row : j.at("history")) {
      EpochMetrics m;
      m.epoch = row.at("epoch").get<std::size_t>();
      m.step = row.at("step").get<std::size_t>();
      m.mean_loss = row.at("mean_loss").get<double>();
      m.train_acc = row.at("train_acc").get<double>();
      if (!row.at("val_acc").is_null()) m.val_acc = row.at("val_acc").get<double>();
      s.history.push_back(m);
    }
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("train state: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Trainer::Trainer(Backend& backend, std::span<const MultiChoiceInstance> train_set,
                 const BundleStore* bundles, TrainConfig config,
                 std::span<const MultiChoiceInstance> val_set)
    : backend_(backend),
      train_set_(train_set),
      val_set_(val_set),
      config_(std::move(config)),
      optimizer_(config_.optimizer, config_.learning_rate),
      rng_(config_.seed) {
  config_.validate();
  if (train_set_.empty()) throw EmptyDatasetError("training set is empty");
  check_mode_backend(backend_, config_.mode);
  trainable_ = freeze_policy(backend_, config_.frozen_override);

  const bool guided = is_guided(config_.mode);
  train_guidance_.resize(train_set_.size());
  for (std::size_t i = 0; i < train_set_.size(); ++i) {
    if (!guided) {
      usable_.push_back(i);
      continue;
    }
    const GuidanceBundle* bundle = nullptr;
    if (bundles) {
      auto it = bundles->find(train_set_[i].id());
      if (it != bundles->end()) bundle = &it->second;
    }
    if (!bundle) {
      if (config_.missing_guidance == MissingGuidancePolicy::skip) continue;
      throw MissingGuidanceError("instance '" + train_set_[i].id() + "' has no guidance bundle");
    }
    train_guidance_[i] = resolve_guidance(bundle, config_.mode, config_.guidance_kinds);
    usable_.push_back(i);
  }
  if (usable_.empty()) throw EmptyDatasetError("no training instance has guidance");

  val_guidance_.resize(val_set_.size());
  if (guided && bundles) {
    for (std::size_t i = 0; i < val_set_.size(); ++i) {
      auto it = bundles->find(val_set_[i].id());
      if (it != bundles->end()) {
        val_guidance_[i] = resolve_guidance(&it->second, config_.mode, config_.guidance_kinds);
      }
    }
  }
}

double Trainer::accuracy_on(std::span<const MultiChoiceInstance> instances,
                            const std::vector<std::string>& guidance) const {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto scores =
        softmax_scores(raw_choice_scores(backend_, instances[i], guidance[i], config_.mode));
    if (predict(scores) == instances[i].gold_index()) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(instances.size());
}

EpochMetrics Trainer::run_epoch() {
  // Fisher-Yates over the usable instances; every instance once per epoch.
  std::vector<std::size_t> order = usable_;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng_.index(i)]);

  ParameterStore grads = backend_.parameters().zeros_like();
  running_loss_ = 0.0;
  for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
    const std::size_t end = std::min(order.size(), start + config_.batch_size);
    const double inv_batch = 1.0 / static_cast<double>(end - start);
    std::size_t width = 0;
    for (std::size_t b = start; b < end; ++b) width = std::max(width, train_set_[order[b]].num_choices());

    grads.fill_zero();
    for (std::size_t b = start; b < end; ++b) {
      const std::size_t idx = order[b];
      const MultiChoiceInstance& inst = train_set_[idx];
      Vector raw = raw_choice_scores(backend_, inst, train_guidance_[idx], config_.mode);
      std::vector<bool> mask(width, false);
      std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(raw.size()), true);
      raw.resize(width, 0.0);
      const ChoiceScores scores = masked_softmax(std::move(raw), std::move(mask));

      running_loss_ += choice_cross_entropy(scores, inst.gold_index()).value;
      Vector grad = choice_cross_entropy_gradient(scores, inst.gold_index());
      for (double& g : grad) g *= inv_batch;
      raw_choice_scores_backward(backend_, inst, train_guidance_[idx], config_.mode, grad, grads);
    }
    optimizer_.step(backend_.mutable_parameters(), grads, trainable_);
    ++step_;
  }
  ++epoch_;

  EpochMetrics metrics;
  metrics.epoch = epoch_;
  metrics.step = step_;
  metrics.mean_loss = running_loss_ / static_cast<double>(order.size());

  std::vector<MultiChoiceInstance> usable_instances;
  std::vector<std::string> usable_guidance;
  if (usable_.size() == train_set_.size()) {
    metrics.train_acc = accuracy_on(train_set_, train_guidance_);
  } else {
    for (std::size_t idx : usable_) {
      usable_instances.push_back(train_set_[idx]);
      usable_guidance.push_back(train_guidance_[idx]);
    }
    metrics.train_acc = accuracy_on(usable_instances, usable_guidance);
  }
  if (!val_set_.empty()) {
    metrics.val_acc = accuracy_on(val_set_, val_guidance_);
    if (*metrics.val_acc > best_val_) {
      best_val_ = *metrics.val_acc;
      best_epoch_ = epoch_;
      best_params_ = backend_.parameters();
    }
  }
  history_.push_back(metrics);
  return metrics;
}

TrainState Trainer::state() const {
  TrainState s;
  s.step = step_;
  s.epoch = epoch_;
  s.running_loss = running_loss_;
  s.rng_state = rng_.serialize();
  s.optimizer_steps = optimizer_.steps();
  s.first_moment = optimizer_.first_moment();
  s.second_moment = optimizer_.second_moment();
  s.history = history_;
  return s;
}

void Trainer::restore(const TrainState& state) {
  step_ = state.step;
  epoch_ = state.epoch;
  running_loss_ = state.running_loss;
  rng_ = Rng::deserialize(state.rng_state);
  optimizer_.restore(state.optimizer_steps, state.first_moment, state.second_moment);
  history_ = state.history;
}

TrainResult train(Backend& backend, std::span<const MultiChoiceInstance> train_set,
                  const BundleStore* bundles, const TrainConfig& config,
                  std::span<const MultiChoiceInstance> val_set) {
  Trainer trainer(backend, train_set, bundles, config, val_set);
  while (!trainer.finished()) trainer.run_epoch();
  if (const ParameterStore* best = trainer.best_parameters()) backend.mutable_parameters() = *best;
  return {trainer.history(), trainer.best_epoch(), trainer.skipped_instances()};
}

std::string metrics_csv(std::span<const EpochMetrics> history) {
  std::string out = "epoch,step,mean_loss,train_acc,val_acc\n";
  char buf[160];
  for (const auto& m : history) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.2f,", m.epoch, m.step, m.mean_loss, m.train_acc);
    out += buf;
    if (m.val_acc) {
      std::snprintf(buf, sizeof buf, "%.2f", *m.val_acc);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::vector<PredictionRecord> predict_dataset(const Backend& backend,
                                              std::span<const MultiChoiceInstance> instances,
                                              const BundleStore* bundles, ScoringMode mode,
                                              std::span<const GuidanceKind> kinds,
                                              bool missing_as_empty) {
  check_mode_backend(backend, mode);
  const GuidanceBundle empty_bundle;
  std::vector<PredictionRecord> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    const GuidanceBundle* bundle = nullptr;
    if (bundles) {
      auto it = bundles->find(inst.id());
      if (it != bundles->end()) bundle = &it->second;
    }
    if (!bundle && is_guided(mode) && missing_as_empty) bundle = &empty_bundle;
    if (!bundle && is_guided(mode)) {
      throw MissingGuidanceError("instance '" + inst.id() + "' has no guidance bundle");
    }
    const ChoiceScores scores = score_instance(backend, inst, bundle, mode, kinds);
    PredictionRecord r;
    r.id = inst.id();
    r.mode = std::string(to_string(mode));
    r.raw = scores.raw;
    r.normalized = scores.normalized;
    r.predicted_index = predict(scores);
    r.gold_index = inst.gold_index();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lgvqa
