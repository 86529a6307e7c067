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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lgvqa/backend.hpp"
#include "lgvqa/instance.hpp"

namespace lgvqa {

enum class ScoringMode { zero_shot, unguided, guided_concat, guided_merge };

std::string_view to_string(ScoringMode mode);
// Throws ConfigError for unknown names.
ScoringMode parse_scoring_mode(std::string_view text);
inline bool is_guided(ScoringMode mode) {
  return mode == ScoringMode::guided_concat || mode == ScoringMode::guided_merge;
}

// txt_i = "{question} {choice}", txt_guide_i = "{question} {choice} {guidance}".
struct PromptAssembly {
  std::string question;
  std::string choice;
  std::optional<std::string> guidance;
  std::string rendered;
};

// Empty guidance is treated as absent. Throws EmptyFieldError when the
// question or choice is blank.
PromptAssembly assemble_prompt(std::string_view question, std::string_view choice,
                               std::optional<std::string_view> guidance = std::nullopt);

// Softmax over the valid slots; masked slots get raw = -inf, normalized = 0.
// Throws AllMaskedError when nothing is valid.
ChoiceScores masked_softmax(Vector raw, std::vector<bool> mask);
ChoiceScores softmax_scores(Vector raw);

// Throws ModeBackendMismatchError when mode cannot run on backend.
void check_mode_backend(const Backend& backend, ScoringMode mode);

// Guidance text an instance contributes under a mode. Empty for unguided
// modes and for bundles holding none of the kinds. Throws
// MissingGuidanceError when a guided mode has no bundle.
std::string resolve_guidance(const GuidanceBundle* bundle, ScoringMode mode,
                             std::span<const GuidanceKind> kinds);

// Raw scores for every choice, then masked softmax:
//   zero_shot / unguided  s_i = match(img, txt_i)
//   guided_concat         s_i = match(img, txt_guide_i)
//   guided_merge          s_i = Proj_guided(merge(Q(I, txt_i, q), Q(I, txt_guide_i, q)))
ChoiceScores score_instance(const Backend& backend, const MultiChoiceInstance& instance,
                            const GuidanceBundle* bundle, ScoringMode mode,
                            std::span<const GuidanceKind> kinds);

// Same computation with the guidance text already resolved.
Vector raw_choice_scores(const Backend& backend, const MultiChoiceInstance& instance,
                         std::string_view guidance, ScoringMode mode);

// Accumulates sum_i grad_raw[i] * d s_i / d params into grads.
void raw_choice_scores_backward(const Backend& backend, const MultiChoiceInstance& instance,
                                std::string_view guidance, ScoringMode mode,
                                std::span<const double> grad_raw, ParameterStore& grads);

// Argmax of raw over valid slots, lowest index on ties. Throws AllMaskedError.
std::size_t predict(const ChoiceScores& scores);

// Prediction dump line: {id, mode, raw, normalized, predicted_index, gold_index}.
struct PredictionRecord {
  std::string id;
  std::string mode;
  Vector raw;
  Vector normalized;
  std::size_t predicted_index = 0;
  std::size_t gold_index = 0;

  bool correct() const { return predicted_index == gold_index; }
  bool operator==(const PredictionRecord&) const = default;
};

std::string encode_prediction_json(const PredictionRecord& record);
PredictionRecord decode_prediction_json(std::string_view line);
void write_predictions_jsonl(const std::filesystem::path& path,
                             std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions_jsonl(const std::filesystem::path& path);

}  // namespace lgvqa
