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

#include "lgvqa/data.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lgvqa/errors.hpp"
#include "lgvqa/rng.hpp"
#include "lgvqa/text.hpp"
#include "lgvqa/toy_backend.hpp"

namespace lgvqa {

using nlohmann::json;

namespace {

struct Record {
  std::string where;
  std::string key;  // object key when the file is keyed by id
  json value;
};

std::vector<Record> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read dataset '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const std::string name = path.filename().string();

  std::vector<Record> out;
  json whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded() && (whole.is_array() || whole.is_object())) {
    if (whole.is_array()) {
      for (std::size_t i = 0; i < whole.size(); ++i) {
        out.push_back({name + "[" + std::to_string(i) + "]", "", std::move(whole[i])});
      }
      return out;
    }
    // A single object is either one record or a map of id -> record.
    const bool keyed = !whole.empty() && std::all_of(whole.begin(), whole.end(),
                                                     [](const json& v) { return v.is_object(); });
    if (keyed) {
      for (auto& [key, value] : whole.items()) out.push_back({name + "[" + key + "]", key, value});
      return out;
    }
    out.push_back({name + "[0]", "", std::move(whole)});
    return out;
  }

  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    json value = json::parse(line, nullptr, false);
    if (value.is_discarded() || !value.is_object()) {
      throw SchemaError(where + ": not a JSON object");
    }
    out.push_back({where, "", std::move(value)});
  }
  return out;
}

const json& field(const Record& r, const char* name) {
  auto it = r.value.find(name);
  if (it == r.value.end() || it->is_null()) {
    throw SchemaError(r.where + "." + name + ": missing");
  }
  return *it;
}

std::string string_field(const Record& r, const char* name) {
  const json& v = field(r, name);
  if (!v.is_string()) throw SchemaError(r.where + "." + name + ": expected a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const Record& r, const char* name) {
  auto it = r.value.find(name);
  if (it == r.value.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw SchemaError(r.where + "." + name + ": expected a string");
  return it->get<std::string>();
}

long long integer_field(const Record& r, const char* name) {
  const json& v = field(r, name);
  if (!v.is_number_integer()) throw SchemaError(r.where + "." + name + ": expected an integer");
  return v.get<long long>();
}

std::vector<std::string> string_list(const Record& r, const char* name) {
  const json& v = field(r, name);
  if (!v.is_array()) throw SchemaError(r.where + "." + name + ": expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) {
      throw SchemaError(r.where + "." + name + "[" + std::to_string(i) + "]: expected a string");
    }
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

// Record id: explicit field, else object key, else the positional name.
std::string record_id(const Record& r, std::initializer_list<const char*> fields,
                      const std::string& fallback) {
  for (const char* f : fields) {
    auto it = r.value.find(f);
    if (it == r.value.end() || it->is_null()) continue;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
  }
  if (!r.key.empty()) return r.key;
  return fallback;
}

MultiChoiceInstance checked(const RawInstance& raw, const std::string& where) {
  const std::string prefix = where + " (id '" + raw.id + "'): ";
  try {
    return validate_instance(raw);
  } catch (const ChoiceCountError& e) {
    throw ChoiceCountError(prefix + e.what());
  } catch (const GoldIndexError& e) {
    throw GoldIndexError(prefix + e.what());
  } catch (const DuplicateChoiceError& e) {
    throw DuplicateChoiceError(prefix + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(prefix + e.what());
  }
}

void skip(LoadResult& result, const std::string& reason) {
  ++result.skipped;
  ++result.skip_reasons[reason];
}

void attach(LoadResult& result, const std::string& id, GuidanceKind kind, const std::string& text) {
  const std::string normalized = normalize_whitespace(text);
  if (normalized.empty()) return;
  auto it = result.bundles.find(id);
  if (it == result.bundles.end()) it = result.bundles.emplace(id, GuidanceBundle(id)).first;
  it->second.set(kind, normalized);
}

}  // namespace

LoadResult load_aokvqa(const std::filesystem::path& path, const AokvqaOptions& options) {
  LoadResult result;
  const auto records = read_records(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    RawInstance raw;
    raw.dataset = DatasetKind::aokvqa;
    raw.id = record_id(r, {"question_id", "id"}, "aokvqa-" + std::to_string(i));
    raw.question = string_field(r, "question");
    raw.choices = string_list(r, "choices");
    raw.gold_index = integer_field(r, "correct_choice_idx");
    if (raw.choices.size() != 4) {
      throw ChoiceCountError(r.where + " (id '" + raw.id + "'): A-OKVQA records need 4 choices, got " +
                             std::to_string(raw.choices.size()));
    }
    if (auto ref = optional_string(r, "image_ref")) {
      raw.image_ref = *ref;
    } else if (auto p = optional_string(r, "image_path")) {
      raw.image_ref = *p;
    } else {
      char buf[64];
      std::snprintf(buf, sizeof buf, "coco2017/%012lld.jpg", integer_field(r, "image_id"));
      raw.image_ref = buf;
    }
    auto hard = r.value.find("difficult_direct_answer");
    if (hard != r.value.end() && !hard->is_null()) {
      if (!hard->is_boolean()) throw SchemaError(r.where + ".difficult_direct_answer: expected a bool");
      raw.difficulty = hard->get<bool>() ? Difficulty::hard : Difficulty::easy;
    }
    result.instances.push_back(checked(raw, r.where));

    if (options.attach_rationales && r.value.contains("rationales") && !r.value["rationales"].is_null()) {
      attach(result, raw.id, GuidanceKind::rationale, join(string_list(r, "rationales"), " "));
    }
  }
  return result;
}

LoadResult load_vsr(const std::filesystem::path& path) {
  LoadResult result;
  const auto records = read_records(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    RawInstance raw;
    raw.dataset = DatasetKind::vsr;
    raw.id = record_id(r, {"id"}, "vsr-" + std::to_string(i));
    raw.question = "True or false: " + string_field(r, "caption");
    raw.choices = {"true", "false"};
    const json& label = field(r, "label");
    bool truth;
    if (label.is_boolean()) {
      truth = label.get<bool>();
    } else if (label.is_number_integer() && (label.get<long long>() == 0 || label.get<long long>() == 1)) {
      truth = label.get<long long>() == 1;
    } else {
      throw SchemaError(r.where + ".label: expected a bool or 0/1");
    }
    raw.gold_index = truth ? 0 : 1;
    if (auto ref = optional_string(r, "image_ref")) {
      raw.image_ref = *ref;
    } else {
      raw.image_ref = string_field(r, "image");
    }
    result.instances.push_back(checked(raw, r.where));
  }
  return result;
}

LoadResult load_scienceqa(const std::filesystem::path& path) {
  LoadResult result;
  const auto records = read_records(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    const auto image = optional_string(r, "image");
    if (!image || normalize_whitespace(*image).empty()) {
      skip(result, "no image");
      continue;
    }
    RawInstance raw;
    raw.dataset = DatasetKind::scienceqa;
    raw.id = record_id(r, {"id", "pid"}, "scienceqa-" + std::to_string(i));
    raw.question = string_field(r, "question");
    raw.choices = string_list(r, "choices");
    raw.gold_index = integer_field(r, "answer");
    raw.image_ref = "scienceqa/" + raw.id + "/" + *image;
    result.instances.push_back(checked(raw, r.where));
    if (auto lecture = optional_string(r, "lecture")) attach(result, raw.id, GuidanceKind::lecture, *lecture);
  }
  return result;
}

LoadResult load_iconqa(const std::filesystem::path& path) {
  LoadResult result;
  const auto records = read_records(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    const std::string type = string_field(r, "ques_type");
    if (type != "choose_txt") {
      skip(result, "ques_type " + type);
      continue;
    }
    RawInstance raw;
    raw.dataset = DatasetKind::iconqa;
    raw.id = record_id(r, {"id", "question_id"}, "iconqa-" + std::to_string(i));
    raw.question = string_field(r, "question");
    raw.choices = string_list(r, "choices");
    raw.gold_index = integer_field(r, "answer");
    if (auto ref = optional_string(r, "image_ref")) {
      raw.image_ref = *ref;
    } else if (auto img = optional_string(r, "image")) {
      raw.image_ref = *img;
    } else {
      raw.image_ref = "iconqa/" + raw.id + "/image.png";
    }
    result.instances.push_back(checked(raw, r.where));
  }
  return result;
}

LoadResult load_dataset(std::string_view adapter, const std::filesystem::path& path) {
  if (adapter == "aokvqa") return load_aokvqa(path);
  if (adapter == "vsr") return load_vsr(path);
  if (adapter == "scienceqa") return load_scienceqa(path);
  if (adapter == "iconqa") return load_iconqa(path);
  if (adapter == "jsonl") {
    LoadResult result;
    result.instances = read_instances_jsonl(path);
    return result;
  }
  throw ConfigError("unknown adapter '" + std::string(adapter) +
                    "' (expected aokvqa, vsr, scienceqa, iconqa or jsonl)");
}

namespace {

constexpr const char* kConcepts[] = {
    "apple",  "bicycle", "camera", "dolphin", "engine", "falcon",  "guitar", "hammer",
    "island", "jacket",  "kettle", "lantern", "mirror", "needle",  "orange", "parrot",
    "quartz", "rocket",  "saddle", "tiger",   "umbrella", "violin", "wagon", "yacht",
    "zebra",  "anchor",  "basket", "candle",  "desert", "feather", "glacier", "helmet"};

constexpr const char* kQuestionTemplates[] = {
    "What is shown in this image?",
    "Which object appears in the picture?",
    "Why would someone photograph this object?",
    "How would you name the main object?",
    "Where could this object usually be found?",
    "Is there a single main object in view?"};

}  // namespace

SynthDataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t n_choices,
                           std::size_t feature_dim) {
  if (n < 1) throw ConfigError("synth_dataset: n must be >= 1");
  if (n_choices < kMinChoices || n_choices > kMaxChoices) {
    throw ConfigError("synth_dataset: n_choices must be in [2, 5]");
  }
  constexpr std::size_t concept_count = std::size(kConcepts);
  constexpr std::size_t template_count = std::size(kQuestionTemplates);
  Rng rng(mix_seed(seed, 0x73796e7468));
  SynthDataset out;
  out.instances.reserve(n);
  out.image_features.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t gold_concept = rng.index(concept_count);
    const std::size_t gold = rng.index(n_choices);
    std::vector<std::size_t> picked{gold_concept};
    while (picked.size() < n_choices) {
      const std::size_t c = rng.index(concept_count);
      if (std::find(picked.begin(), picked.end(), c) == picked.end()) picked.push_back(c);
    }
    std::swap(picked[0], picked[gold]);

    RawInstance raw;
    raw.dataset = DatasetKind::synthetic;
    raw.id = "synth-" + std::to_string(seed) + "-" + std::to_string(i);
    raw.image_ref = "synth://" + std::to_string(seed) + "/" + std::to_string(i) + "/" +
                    kConcepts[gold_concept];
    raw.question = kQuestionTemplates[rng.index(template_count)];
    for (std::size_t c : picked) raw.choices.emplace_back(kConcepts[c]);
    raw.gold_index = static_cast<long long>(gold);
    raw.difficulty = rng.uniform() < 0.5 ? Difficulty::easy : Difficulty::hard;
    out.image_features.push_back(pseudo_image_feature(raw.image_ref, feature_dim, kDefaultFeatureSeed));
    out.instances.push_back(validate_instance(raw));
  }
  return out;
}

std::string_view to_string(QuestionType type) {
  switch (type) {
    case QuestionType::what: return "what";
    case QuestionType::which: return "which";
    case QuestionType::why: return "why";
    case QuestionType::how: return "how";
    case QuestionType::where: return "where";
    case QuestionType::other: return "other";
  }
  return "other";
}

QuestionType question_type(std::string_view question) {
  std::string first;
  for (char c : question) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      first += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!first.empty()) {
      break;
    }
  }
  if (first == "what") return QuestionType::what;
  if (first == "which") return QuestionType::which;
  if (first == "why") return QuestionType::why;
  if (first == "how") return QuestionType::how;
  if (first == "where") return QuestionType::where;
  return QuestionType::other;
}

}  // namespace lgvqa
