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

// Domain types shared by every module: questions, guidance bundles, choice
// scores and loss records. All types are immutable once validated and may be
// shared across threads freely.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lgvqa/tensor.hpp"

namespace lgvqa {

inline constexpr std::size_t kMinChoices = 2;
inline constexpr std::size_t kMaxChoices = 5;

enum class Difficulty { easy, hard, unspecified };
enum class DatasetKind { aokvqa, scienceqa, vsr, iconqa, synthetic };

std::string_view to_string(Difficulty d);
std::string_view to_string(DatasetKind d);
Difficulty parse_difficulty(std::string_view text);
DatasetKind parse_dataset_kind(std::string_view text);

// An unvalidated record as produced by a dataset adapter or JSON decoder.
struct RawInstance {
  std::string id;
  std::string image_ref;
  std::string question;
  std::vector<std::string> choices;
  long long gold_index = -1;
  Difficulty difficulty = Difficulty::unspecified;
  DatasetKind dataset = DatasetKind::synthetic;
};

class MultiChoiceInstance {
 public:
  const std::string& id() const { return id_; }
  const std::string& image_ref() const { return image_ref_; }
  const std::string& question() const { return question_; }
  const std::vector<std::string>& choices() const { return choices_; }
  std::size_t num_choices() const { return choices_.size(); }
  std::size_t gold_index() const { return gold_index_; }
  Difficulty difficulty() const { return difficulty_; }
  DatasetKind dataset() const { return dataset_; }

  bool operator==(const MultiChoiceInstance&) const = default;

 private:
  friend MultiChoiceInstance validate_instance(const RawInstance& raw);
  MultiChoiceInstance() = default;

  std::string id_;
  std::string image_ref_;
  std::string question_;
  std::vector<std::string> choices_;
  std::size_t gold_index_ = 0;
  Difficulty difficulty_ = Difficulty::unspecified;
  DatasetKind dataset_ = DatasetKind::synthetic;
};

// Checks the instance invariants. Question and choices are stored
// whitespace-normalized; distinctness is checked on the normalized form.
// Throws ChoiceCountError, GoldIndexError, DuplicateChoiceError, or
// SchemaError for missing id / image_ref / question.
MultiChoiceInstance validate_instance(const RawInstance& raw);

// Canonical encoding: one JSON object with keys id, image_ref, question,
// choices, gold_index, difficulty, dataset.
std::string encode_instance_json(const MultiChoiceInstance& instance);
RawInstance parse_raw_instance_json(std::string_view line);
MultiChoiceInstance decode_instance_json(std::string_view line);

void write_instances_jsonl(const std::filesystem::path& path,
                           std::span<const MultiChoiceInstance> instances);
std::vector<MultiChoiceInstance> read_instances_jsonl(const std::filesystem::path& path);

enum class GuidanceKind { rationale, explanation, caption, scene_graph, objects, lecture };

inline constexpr GuidanceKind kAllGuidanceKinds[] = {
    GuidanceKind::rationale, GuidanceKind::explanation, GuidanceKind::caption,
    GuidanceKind::scene_graph, GuidanceKind::objects, GuidanceKind::lecture};

std::string_view to_string(GuidanceKind kind);
GuidanceKind parse_guidance_kind(std::string_view text);

class GuidanceBundle {
 public:
  GuidanceBundle() = default;
  explicit GuidanceBundle(std::string instance_id) : instance_id_(std::move(instance_id)) {}

  const std::string& instance_id() const { return instance_id_; }
  const std::map<GuidanceKind, std::string>& entries() const { return entries_; }

  // Throws SchemaError on empty text or control characters.
  GuidanceBundle& set(GuidanceKind kind, std::string text);
  std::optional<std::string_view> get(GuidanceKind kind) const;
  bool has(GuidanceKind kind) const { return entries_.count(kind) != 0; }
  bool empty() const { return entries_.empty(); }

  // Union of two bundles for the same instance. Throws GuidanceConflictError
  // when both carry the same kind or the instance ids differ.
  GuidanceBundle merged(const GuidanceBundle& other) const;

  bool operator==(const GuidanceBundle&) const = default;

 private:
  std::string instance_id_;
  std::map<GuidanceKind, std::string> entries_;
};

using BundleStore = std::map<std::string, GuidanceBundle, std::less<>>;

// Raw scores s_i, softmax-normalized scores, and per-slot validity. Padded
// slots (mask false) carry raw = -inf and normalized = 0.
struct ChoiceScores {
  Vector raw;
  Vector normalized;
  std::vector<bool> mask;

  std::size_t size() const { return raw.size(); }
  std::size_t valid_count() const;
  // Throws Error when the length or normalization invariants do not hold.
  void check_invariants(double tolerance = 1e-9) const;
};

// Cross-entropy over one instance's choices with one-hot class labels p_i.
struct LossRecord {
  double value = 0.0;
  std::size_t gold_index = 0;
  Vector class_labels;
};

}  // namespace lgvqa
