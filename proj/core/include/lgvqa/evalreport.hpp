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

// Accuracy reports sliced the way result tables are: overall, by difficulty,
// and by question type. Percentages are in [0, 100].

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lgvqa/data.hpp"
#include "lgvqa/instance.hpp"
#include "lgvqa/scoring.hpp"

namespace lgvqa {

struct PredictionMeta {
  std::string id;
  std::size_t predicted_index = 0;
  std::size_t gold_index = 0;
  Difficulty difficulty = Difficulty::unspecified;
  QuestionType question_type = QuestionType::other;
};

// Pairs prediction records with their instances by id. Throws
// IdSetMismatchError when a prediction has no instance.
std::vector<PredictionMeta> attach_meta(std::span<const PredictionRecord> predictions,
                                        std::span<const MultiChoiceInstance> instances);

struct SliceAccuracy {
  std::string name;
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  // Set by mean_of_runs only.
  std::optional<double> min;
  std::optional<double> max;

  bool operator==(const SliceAccuracy&) const = default;
};

// Slice order is fixed: overall, easy, hard, what, which, why, how, where,
// other. Slices without members are left out.
struct EvalReport {
  std::vector<SliceAccuracy> slices;
  // Per-instance correctness; empty for averaged reports.
  std::map<std::string, bool> outcomes;
  std::size_t runs = 1;

  const SliceAccuracy* slice(std::string_view name) const;
  double overall() const;
  bool operator==(const EvalReport&) const = default;
};

// Throws EmptyPredictionsError for an empty input.
EvalReport accuracy(std::span<const PredictionMeta> predictions);

struct ModeDelta {
  std::string mode;
  // Slice name -> accuracy(mode) - accuracy(baseline), for shared slices.
  std::vector<std::pair<std::string, double>> deltas;
  std::vector<std::string> became_correct;
  std::vector<std::string> became_incorrect;
};

struct DeltaTable {
  std::string baseline;
  std::map<std::string, EvalReport> reports;
  std::vector<ModeDelta> rows;  // every non-baseline mode, in key order
};

// Throws ConfigError with fewer than two reports or an unknown baseline, and
// IdSetMismatchError when the per-instance id sets differ.
DeltaTable compare_modes(const std::map<std::string, EvalReport>& reports,
                         const std::string& baseline);

// Slice-wise arithmetic mean with min/max. Throws EmptyPredictionsError for
// no reports and SliceMismatchError when slice names differ.
EvalReport mean_of_runs(std::span<const EvalReport> reports);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
// Aligned columns, two decimals.
std::string render_report_text(const EvalReport& report, std::string_view title = {});
std::string render_report_csv(const EvalReport& report);

std::string delta_table_to_json(const DeltaTable& table);
std::string render_delta_text(const DeltaTable& table);
std::string render_delta_csv(const DeltaTable& table);

// "%.2f" with an explicit sign.
std::string format_delta(double delta);

}  // namespace lgvqa
