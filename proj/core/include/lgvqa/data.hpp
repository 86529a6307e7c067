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

// Dataset adapters. Each loader accepts either one JSON document (an array
// of records, or an object keyed by record id) or JSON Lines, and returns
// validated instances plus any guidance the dataset itself ships.
//
// Field conventions per adapter:
//   aokvqa     question_id, question, choices[4], correct_choice_idx,
//              difficult_direct_answer, rationales[], image_ref | image_path
//              | image_id (-> "coco2017/<12-digit id>.jpg")
//   vsr        caption, label (bool or 0/1), image | image_ref, optional id.
//              question = "True or false: <caption>", choices = [true, false]
//   scienceqa  question, choices, answer, image (null -> skipped), lecture
//   iconqa     question, choices, answer, ques_type (only choose_txt kept),
//              image | image_ref

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lgvqa/instance.hpp"

namespace lgvqa {

struct LoadResult {
  std::vector<MultiChoiceInstance> instances;
  BundleStore bundles;
  std::size_t skipped = 0;
  // Reason -> count for every skipped record.
  std::map<std::string, std::size_t> skip_reasons;
};

struct AokvqaOptions {
  // Attach the joined gold rationales as GuidanceKind::rationale.
  bool attach_rationales = true;
};

// Throws DataError when the file cannot be read, SchemaError with a field
// path for malformed records, and the instance validation errors (prefixed
// with the record id) for invalid ones.
LoadResult load_aokvqa(const std::filesystem::path& path, const AokvqaOptions& options = {});
LoadResult load_vsr(const std::filesystem::path& path);
LoadResult load_scienceqa(const std::filesystem::path& path);
LoadResult load_iconqa(const std::filesystem::path& path);

// Dispatch by adapter name: aokvqa, vsr, scienceqa, iconqa, or jsonl (the
// canonical instance format). Throws ConfigError for unknown names.
LoadResult load_dataset(std::string_view adapter, const std::filesystem::path& path);

struct SynthDataset {
  std::vector<MultiChoiceInstance> instances;
  // Toy image feature for each instance, as the toy backends compute it.
  std::vector<Vector> image_features;
};

inline constexpr std::size_t kSynthFeatureDim = 32;

// Deterministic planted-signal instances. Every image_ref has the form
// "synth://<seed>/<i>/<concept>" and the gold choice is <concept>, so the
// image pseudo-feature and the gold answer share a token. Throws ConfigError
// for n < 1 or n_choices outside [2, 5].
SynthDataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t n_choices,
                           std::size_t feature_dim = kSynthFeatureDim);

enum class QuestionType { what, which, why, how, where, other };

inline constexpr QuestionType kAllQuestionTypes[] = {QuestionType::what, QuestionType::which,
                                                     QuestionType::why, QuestionType::how,
                                                     QuestionType::where, QuestionType::other};

std::string_view to_string(QuestionType type);

// Lowercased first token (split on non-letters) matched against the five
// wh-words. "At what time" -> other.
QuestionType question_type(std::string_view question);

}  // namespace lgvqa
