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

#include "lgvqa/instance.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "lgvqa/errors.hpp"
#include "lgvqa/text.hpp"

namespace lgvqa {

using nlohmann::json;

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::hard: return "hard";
    case Difficulty::unspecified: return "unspecified";
  }
  return "unspecified";
}

std::string_view to_string(DatasetKind d) {
  switch (d) {
    case DatasetKind::aokvqa: return "aokvqa";
    case DatasetKind::scienceqa: return "scienceqa";
    case DatasetKind::vsr: return "vsr";
    case DatasetKind::iconqa: return "iconqa";
    case DatasetKind::synthetic: return "synthetic";
  }
  return "synthetic";
}

Difficulty parse_difficulty(std::string_view text) {
  if (text == "easy") return Difficulty::easy;
  if (text == "hard") return Difficulty::hard;
  if (text == "unspecified") return Difficulty::unspecified;
  throw SchemaError("difficulty: unknown value '" + std::string(text) + "'");
}

DatasetKind parse_dataset_kind(std::string_view text) {
  if (text == "aokvqa") return DatasetKind::aokvqa;
  if (text == "scienceqa") return DatasetKind::scienceqa;
  if (text == "vsr") return DatasetKind::vsr;
  if (text == "iconqa") return DatasetKind::iconqa;
  if (text == "synthetic") return DatasetKind::synthetic;
  throw SchemaError("dataset: unknown value '" + std::string(text) + "'");
}

MultiChoiceInstance validate_instance(const RawInstance& raw) {
  const std::string label = "instance '" + raw.id + "'";
  if (raw.id.empty()) throw SchemaError("instance: empty id");
  if (normalize_whitespace(raw.image_ref).empty()) throw SchemaError(label + ": empty image_ref");

  const std::size_t n = raw.choices.size();
  if (n < kMinChoices || n > kMaxChoices) {
    throw ChoiceCountError(label + ": " + std::to_string(n) + " choices, expected 2..5");
  }
  if (raw.gold_index < 0 || static_cast<std::size_t>(raw.gold_index) >= n) {
    throw GoldIndexError(label + ": gold_index " + std::to_string(raw.gold_index) +
                         " out of range for " + std::to_string(n) + " choices");
  }

  MultiChoiceInstance inst;
  inst.id_ = raw.id;
  inst.image_ref_ = raw.image_ref;
  inst.question_ = normalize_whitespace(raw.question);
  if (inst.question_.empty()) throw SchemaError(label + ": empty question");

  std::set<std::string> seen;
  inst.choices_.reserve(n);
  for (const auto& choice : raw.choices) {
    std::string normalized = normalize_whitespace(choice);
    if (normalized.empty()) throw SchemaError(label + ": empty choice");
    if (!seen.insert(normalized).second) {
      throw DuplicateChoiceError(label + ": duplicate choice '" + normalized + "'");
    }
    inst.choices_.push_back(std::move(normalized));
  }
  inst.gold_index_ = static_cast<std::size_t>(raw.gold_index);
  inst.difficulty_ = raw.difficulty;
  inst.dataset_ = raw.dataset;
  return inst;
}

std::string encode_instance_json(const MultiChoiceInstance& instance) {
  json j;
  j["id"] = instance.id();
  j["image_ref"] = instance.image_ref();
  j["question"] = instance.question();
  j["choices"] = instance.choices();
  j["gold_index"] = instance.gold_index();
  j["difficulty"] = to_string(instance.difficulty());
  j["dataset"] = to_string(instance.dataset());
  return j.dump();
}

namespace {

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(std::string(key) + ": missing");
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) throw SchemaError(std::string(key) + ": expected string");
  return v.get<std::string>();
}

}  // namespace

RawInstance parse_raw_instance_json(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("expected a JSON object");

  RawInstance raw;
  raw.id = require_string(j, "id");
  raw.image_ref = require_string(j, "image_ref");
  raw.question = require_string(j, "question");
  const json& choices = require(j, "choices");
  if (!choices.is_array()) throw SchemaError("choices: expected array");
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (!choices[i].is_string()) {
      throw SchemaError("choices[" + std::to_string(i) + "]: expected string");
    }
    raw.choices.push_back(choices[i].get<std::string>());
  }
  const json& gold = require(j, "gold_index");
  if (!gold.is_number_integer()) throw SchemaError("gold_index: expected integer");
  raw.gold_index = gold.get<long long>();
  raw.difficulty = parse_difficulty(require_string(j, "difficulty"));
  raw.dataset = parse_dataset_kind(require_string(j, "dataset"));
  return raw;
}

MultiChoiceInstance decode_instance_json(std::string_view line) {
  return validate_instance(parse_raw_instance_json(line));
}

void write_instances_jsonl(const std::filesystem::path& path,
                           std::span<const MultiChoiceInstance> instances) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const auto& inst : instances) out << encode_instance_json(inst) << '\n';
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::vector<MultiChoiceInstance> read_instances_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  std::vector<MultiChoiceInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;
    try {
      out.push_back(decode_instance_json(line));
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string_view to_string(GuidanceKind kind) {
  switch (kind) {
    case GuidanceKind::rationale: return "rationale";
    case GuidanceKind::explanation: return "explanation";
    case GuidanceKind::caption: return "caption";
    case GuidanceKind::scene_graph: return "scene_graph";
    case GuidanceKind::objects: return "objects";
    case GuidanceKind::lecture: return "lecture";
  }
  return "rationale";
}

GuidanceKind parse_guidance_kind(std::string_view text) {
  for (GuidanceKind k : kAllGuidanceKinds) {
    if (to_string(k) == text) return k;
  }
  throw SchemaError("unknown guidance kind '" + std::string(text) + "'");
}

GuidanceBundle& GuidanceBundle::set(GuidanceKind kind, std::string text) {
  if (text.empty()) {
    throw SchemaError("guidance '" + std::string(to_string(kind)) + "' for '" + instance_id_ +
                      "' is empty");
  }
  if (has_control_chars(text)) {
    throw SchemaError("guidance '" + std::string(to_string(kind)) + "' for '" + instance_id_ +
                      "' contains control characters");
  }
  entries_.insert_or_assign(kind, std::move(text));
  return *this;
}

std::optional<std::string_view> GuidanceBundle::get(GuidanceKind kind) const {
  auto it = entries_.find(kind);
  if (it == entries_.end()) return std::nullopt;
  return std::string_view(it->second);
}

GuidanceBundle GuidanceBundle::merged(const GuidanceBundle& other) const {
  if (other.instance_id_ != instance_id_) {
    throw GuidanceConflictError("cannot merge guidance for '" + instance_id_ + "' with '" +
                                other.instance_id_ + "'");
  }
  GuidanceBundle out = *this;
  for (const auto& [kind, text] : other.entries_) {
    if (out.has(kind)) {
      throw GuidanceConflictError("guidance '" + std::string(to_string(kind)) +
                                  "' present in both bundles for '" + instance_id_ + "'");
    }
    out.entries_.emplace(kind, text);
  }
  return out;
}

std::size_t ChoiceScores::valid_count() const {
  std::size_t n = 0;
  for (bool m : mask) n += m ? 1 : 0;
  return n;
}

void ChoiceScores::check_invariants(double tolerance) const {
  if (raw.size() != normalized.size() || raw.size() != mask.size()) {
    throw Error("ChoiceScores: raw/normalized/mask length mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!mask[i]) {
      if (normalized[i] != 0.0) throw Error("ChoiceScores: masked slot has nonzero probability");
      continue;
    }
    sum += normalized[i];
  }
  if (std::abs(sum - 1.0) > tolerance) throw Error("ChoiceScores: probabilities do not sum to 1");
}

}  // namespace lgvqa
