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

#include "lgvqa/scoring.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "lgvqa/errors.hpp"
#include "lgvqa/guidance.hpp"
#include "lgvqa/text.hpp"

namespace lgvqa {

using nlohmann::json;

std::string_view to_string(ScoringMode mode) {
  switch (mode) {
    case ScoringMode::zero_shot: return "zero_shot";
    case ScoringMode::unguided: return "unguided";
    case ScoringMode::guided_concat: return "guided_concat";
    case ScoringMode::guided_merge: return "guided_merge";
  }
  return "zero_shot";
}

ScoringMode parse_scoring_mode(std::string_view text) {
  if (text == "zero_shot" || text == "zero-shot") return ScoringMode::zero_shot;
  if (text == "unguided") return ScoringMode::unguided;
  if (text == "guided_concat") return ScoringMode::guided_concat;
  if (text == "guided_merge") return ScoringMode::guided_merge;
  throw ConfigError("unknown mode '" + std::string(text) + "'");
}

PromptAssembly assemble_prompt(std::string_view question, std::string_view choice,
                               std::optional<std::string_view> guidance) {
  PromptAssembly p;
  p.question = normalize_whitespace(question);
  p.choice = normalize_whitespace(choice);
  if (p.question.empty()) throw EmptyFieldError("prompt: empty question");
  if (p.choice.empty()) throw EmptyFieldError("prompt: empty choice");
  p.rendered = p.question + ' ' + p.choice;
  if (guidance) {
    std::string g = normalize_whitespace(*guidance);
    if (!g.empty()) {
      p.rendered += ' ' + g;
      p.guidance = std::move(g);
    }
  }
  return p;
}

ChoiceScores masked_softmax(Vector raw, std::vector<bool> mask) {
  if (raw.size() != mask.size()) throw DimMismatchError("masked_softmax: raw/mask length mismatch");
  ChoiceScores scores;
  double max_raw = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!mask[i]) {
      raw[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    any = true;
    max_raw = std::max(max_raw, raw[i]);
  }
  if (!any) throw AllMaskedError("every choice slot is masked");

  Vector normalized(raw.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!mask[i]) continue;
    normalized[i] = std::exp(raw[i] - max_raw);
    total += normalized[i];
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (mask[i]) normalized[i] /= total;
  }
  scores.raw = std::move(raw);
  scores.normalized = std::move(normalized);
  scores.mask = std::move(mask);
  return scores;
}

ChoiceScores softmax_scores(Vector raw) {
  std::vector<bool> mask(raw.size(), true);
  return masked_softmax(std::move(raw), std::move(mask));
}

void check_mode_backend(const Backend& backend, ScoringMode mode) {
  if (mode != ScoringMode::guided_merge) return;
  if (backend.kind() != BackendKind::fusion) {
    throw ModeBackendMismatchError("guided_merge needs a fusion backend, got '" + backend.name() +
                                   "'");
  }
  if (!static_cast<const FusionBackend&>(backend).has_guided_head()) {
    throw ModeBackendMismatchError("guided_merge needs a guided projection head on '" +
                                   backend.name() + "'");
  }
}

std::string resolve_guidance(const GuidanceBundle* bundle, ScoringMode mode,
                             std::span<const GuidanceKind> kinds) {
  if (!is_guided(mode)) return {};
  if (bundle == nullptr) throw MissingGuidanceError("guided mode requires a guidance bundle");
  return combine_or_empty(*bundle, kinds).text;
}

namespace {

struct ChoiceTexts {
  std::string plain;
  std::string guided;
};

ChoiceTexts choice_texts(const MultiChoiceInstance& instance, std::size_t i,
                         std::string_view guidance) {
  ChoiceTexts t;
  t.plain = assemble_prompt(instance.question(), instance.choices()[i]).rendered;
  t.guided = assemble_prompt(instance.question(), instance.choices()[i], guidance).rendered;
  return t;
}

}  // namespace

Vector raw_choice_scores(const Backend& backend, const MultiChoiceInstance& instance,
                         std::string_view guidance, ScoringMode mode) {
  check_mode_backend(backend, mode);
  const std::string& image = instance.image_ref();
  Vector raw(instance.num_choices());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const ChoiceTexts t = choice_texts(instance, i, guidance);
    const std::string& text = mode == ScoringMode::guided_concat ? t.guided : t.plain;
    if (backend.kind() == BackendKind::dual_encoder) {
      raw[i] = dual_match(static_cast<const DualEncoderBackend&>(backend), image, text);
    } else if (mode == ScoringMode::guided_merge) {
      raw[i] = guided_fusion_match(static_cast<const FusionBackend&>(backend), image, t.plain,
                                   t.guided);
    } else {
      raw[i] = fusion_match(static_cast<const FusionBackend&>(backend), image, text);
    }
  }
  return raw;
}

void raw_choice_scores_backward(const Backend& backend, const MultiChoiceInstance& instance,
                                std::string_view guidance, ScoringMode mode,
                                std::span<const double> grad_raw, ParameterStore& grads) {
  check_mode_backend(backend, mode);
  if (grad_raw.size() < instance.num_choices()) {
    throw DimMismatchError("score gradient shorter than the choice list");
  }
  const std::string& image = instance.image_ref();
  for (std::size_t i = 0; i < instance.num_choices(); ++i) {
    if (grad_raw[i] == 0.0) continue;
    const ChoiceTexts t = choice_texts(instance, i, guidance);
    const std::string& text = mode == ScoringMode::guided_concat ? t.guided : t.plain;
    if (backend.kind() == BackendKind::dual_encoder) {
      dual_match_backward(static_cast<const DualEncoderBackend&>(backend), image, text,
                          grad_raw[i], grads);
    } else if (mode == ScoringMode::guided_merge) {
      guided_fusion_match_backward(static_cast<const FusionBackend&>(backend), image, t.plain,
                                   t.guided, grad_raw[i], grads);
    } else {
      fusion_match_backward(static_cast<const FusionBackend&>(backend), image, text, grad_raw[i],
                            grads);
    }
  }
}

ChoiceScores score_instance(const Backend& backend, const MultiChoiceInstance& instance,
                            const GuidanceBundle* bundle, ScoringMode mode,
                            std::span<const GuidanceKind> kinds) {
  check_mode_backend(backend, mode);
  const std::string guidance = resolve_guidance(bundle, mode, kinds);
  return softmax_scores(raw_choice_scores(backend, instance, guidance, mode));
}

std::size_t predict(const ChoiceScores& scores) {
  std::size_t best = scores.raw.size();
  for (std::size_t i = 0; i < scores.raw.size(); ++i) {
    if (!scores.mask[i]) continue;
    if (best == scores.raw.size() || scores.raw[i] > scores.raw[best]) best = i;
  }
  if (best == scores.raw.size()) throw AllMaskedError("predict: every choice slot is masked");
  return best;
}

std::string encode_prediction_json(const PredictionRecord& record) {
  json j;
  j["id"] = record.id;
  j["mode"] = record.mode;
  j["raw"] = record.raw;
  j["normalized"] = record.normalized;
  j["predicted_index"] = record.predicted_index;
  j["gold_index"] = record.gold_index;
  return j.dump();
}

PredictionRecord decode_prediction_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    PredictionRecord r;
    r.id = j.at("id").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.raw = j.at("raw").get<Vector>();
    r.normalized = j.at("normalized").get<Vector>();
    r.predicted_index = j.at("predicted_index").get<std::size_t>();
    r.gold_index = j.at("gold_index").get<std::size_t>();
    if (r.raw.size() != r.normalized.size() || r.predicted_index >= r.raw.size() ||
        r.gold_index >= r.raw.size()) {
      throw SchemaError("prediction '" + r.id + "': inconsistent indices or lengths");
    }
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("prediction: ") + e.what());
  }
}

void write_predictions_jsonl(const std::filesystem::path& path,
                             std::span<const PredictionRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write predictions '" + path.string() + "'");
  for (const auto& r : records) out << encode_prediction_json(r) << '\n';
}

std::vector<PredictionRecord> read_predictions_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read predictions '" + path.string() + "'");
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;
    try {
      out.push_back(decode_prediction_json(line));
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace lgvqa
