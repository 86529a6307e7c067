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

#include "lgvqa/guidance.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <mutex>
#include <set>

#include <json.hpp>

#include "lgvqa/errors.hpp"
#include "lgvqa/rng.hpp"
#include "lgvqa/text.hpp"

namespace lgvqa {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 20> kCountWords = {
    "one",    "two",    "three",   "four",     "five",     "six",     "seven",
    "eight",  "nine",   "ten",     "eleven",   "twelve",   "thirteen", "fourteen",
    "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty"};

struct Irregular {
  std::string_view singular;
  std::string_view plural;
};

constexpr std::array<Irregular, 4> kIrregular = {{
    {"person", "people"},
    {"child", "children"},
    {"man", "men"},
    {"woman", "women"},
}};

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string clean_label(std::string_view label) {
  std::string out = normalize_whitespace(label);
  if (out.empty()) throw SchemaError("empty object label");
  if (out.find(',') != std::string::npos) {
    throw SchemaError("object label '" + out + "' contains a comma");
  }
  return out;
}

}  // namespace

std::optional<std::string> serialize_scene_graph(std::span<const SceneTriplet> triplets) {
  if (triplets.empty()) return std::nullopt;
  std::string out;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    const std::string s = normalize_whitespace(t.subject);
    const std::string p = normalize_whitespace(t.predicate);
    const std::string o = normalize_whitespace(t.object);
    if (s.empty() || p.empty() || o.empty()) {
      throw SchemaError("scene triplet " + std::to_string(i) + " has an empty field");
    }
    if (i) {
      out += ' ';
      out += kSceneSeparator;
      out += ' ';
    }
    out += s + ' ' + p + ' ' + o;
  }
  return out;
}

DetectionSet::DetectionSet(std::span<const std::string> labels) {
  for (const auto& label : labels) add(label);
}

void DetectionSet::add(std::string_view label, std::size_t count) {
  if (count == 0) return;
  std::string cleaned = clean_label(label);
  auto it = std::find_if(counts_.begin(), counts_.end(),
                         [&](const auto& entry) { return entry.first == cleaned; });
  if (it == counts_.end()) {
    counts_.emplace_back(std::move(cleaned), count);
  } else {
    it->second += count;
  }
}

std::string count_word(std::size_t count) {
  if (count >= 1 && count <= kCountWords.size()) return std::string(kCountWords[count - 1]);
  return std::to_string(count);
}

std::optional<std::size_t> parse_count_word(std::string_view word) {
  for (std::size_t i = 0; i < kCountWords.size(); ++i) {
    if (kCountWords[i] == word) return i + 1;
  }
  if (word.empty() || !std::all_of(word.begin(), word.end(),
                                   [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(std::stoull(std::string(word)));
}

std::string pluralize(std::string_view noun, std::size_t count) {
  std::string text(noun);
  if (count == 1 || text.empty()) return text;
  const std::size_t split = text.rfind(' ');
  const std::string head = split == std::string::npos ? "" : text.substr(0, split + 1);
  const std::string last = split == std::string::npos ? text : text.substr(split + 1);
  const std::string lower = to_lower_ascii(last);
  for (const auto& irregular : kIrregular) {
    if (lower == irregular.singular) return head + std::string(irregular.plural);
  }
  if (ends_with(lower, "s") || ends_with(lower, "x") || ends_with(lower, "z") ||
      ends_with(lower, "sh") || ends_with(lower, "ch")) {
    return head + last + "es";
  }
  return head + last + "s";
}

std::string serialize_objects(const DetectionSet& detections) {
  if (detections.empty()) throw EmptyDetectionError("no detected objects to serialize");
  std::vector<std::string> terms;
  for (const auto& [label, count] : detections.counts()) {
    terms.push_back(count_word(count) + ' ' + pluralize(label, count));
  }
  return join(terms, ", ");
}

std::vector<ObjectTerm> parse_objects(std::string_view text) {
  std::vector<ObjectTerm> terms;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(", ", start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view term = text.substr(start, end - start);
    const std::size_t space = term.find(' ');
    if (space == std::string_view::npos) {
      throw SchemaError("object term '" + std::string(term) + "' lacks a count");
    }
    const auto count = parse_count_word(term.substr(0, space));
    if (!count) throw SchemaError("object term '" + std::string(term) + "' has a bad count");
    terms.push_back({*count, std::string(term.substr(space + 1))});
    if (end == text.size()) break;
    start = end + 2;
  }
  return terms;
}

std::optional<std::vector<GuidanceKind>> guidance_preset(std::string_view name) {
  using K = GuidanceKind;
  if (name == "All" || name == "all") {
    return std::vector<K>{K::rationale, K::explanation, K::caption, K::scene_graph, K::objects};
  }
  if (name == "CSO" || name == "cso") return std::vector<K>{K::caption, K::scene_graph, K::objects};
  if (name == "CSOL" || name == "csol") {
    return std::vector<K>{K::caption, K::scene_graph, K::objects, K::lecture};
  }
  return std::nullopt;
}

std::vector<GuidanceKind> parse_guidance_kinds(std::string_view list) {
  std::vector<GuidanceKind> kinds;
  auto push = [&](GuidanceKind k) {
    if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
  };
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    const std::string item = normalize_whitespace(list.substr(start, end - start));
    if (!item.empty()) {
      if (auto preset = guidance_preset(item)) {
        for (GuidanceKind k : *preset) push(k);
      } else {
        try {
          push(parse_guidance_kind(item));
        } catch (const SchemaError&) {
          throw ConfigError("unknown guidance kind '" + item + "'");
        }
      }
    }
    if (end == list.size()) break;
    start = end + 1;
  }
  return kinds;
}

CombinedGuidance combine_or_empty(const GuidanceBundle& bundle,
                                  std::span<const GuidanceKind> kinds) {
  CombinedGuidance out;
  for (GuidanceKind kind : kinds) {
    const auto text = bundle.get(kind);
    if (!text) {
      out.skipped.push_back(kind);
      continue;
    }
    if (!out.text.empty()) out.text += ' ';
    out.text += *text;
  }
  return out;
}

CombinedGuidance combine(const GuidanceBundle& bundle, std::span<const GuidanceKind> kinds) {
  CombinedGuidance out = combine_or_empty(bundle, kinds);
  if (out.text.empty()) {
    throw NoGuidanceAvailableError("no requested guidance available for '" +
                                   bundle.instance_id() + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",    "an",   "the",   "is",    "are",  "was",   "were", "be",   "of",   "in",
      "on",   "at",   "to",    "for",   "and",  "or",    "this", "that", "these", "those",
      "what", "which", "why",  "how",   "where", "who",  "when", "does", "do",   "did",
      "it",   "its",  "there", "here",  "probably", "likely", "most", "with", "from", "by",
      "can",  "could", "would", "will", "s",    "image", "picture", "photo", "shown"};
  return words;
}

bool is_alpha_word(std::string_view token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
    return (c >= 'a' && c <= 'z');
  });
}

// Alphabetic tokens of the final path segment, extension removed.
std::vector<std::string> image_cues(std::string_view image_ref) {
  std::string_view segment = image_ref;
  const std::size_t slash = segment.find_last_of("/\\");
  if (slash != std::string_view::npos) segment = segment.substr(slash + 1);
  const std::size_t dot = segment.rfind('.');
  if (dot != std::string_view::npos && dot > 0) segment = segment.substr(0, dot);
  std::vector<std::string> cues;
  for (auto& token : tokenize(segment)) {
    if (is_alpha_word(token) && token.size() > 2 && !stopwords().count(token)) {
      cues.push_back(std::move(token));
    }
  }
  return cues;
}

struct StubTemplate {
  std::string_view lead;
  std::array<std::string_view, 2> bodies;
};

StubTemplate stub_template(GuidanceKind kind) {
  switch (kind) {
    case GuidanceKind::rationale:
      return {"rationale:", {"the image shows", "the picture suggests"}};
    case GuidanceKind::explanation:
      return {"explanation:", {"because the scene contains", "since we can see"}};
    case GuidanceKind::caption:
      return {"caption:", {"a photo of", "a picture with"}};
    case GuidanceKind::scene_graph:
      return {"scene graph:", {"relations among", "layout of"}};
    case GuidanceKind::objects:
      return {"objects:", {"visible items", "detected items"}};
    case GuidanceKind::lecture:
      return {"lecture:", {"background on", "notes about"}};
  }
  return {"guidance:", {"about", "about"}};
}

std::mutex& generator_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, GeneratorFactory>& generator_registry() {
  static std::map<std::string, GeneratorFactory> registry;
  return registry;
}

}  // namespace

GeneratorContract stub_generator(GuidanceKind kind, std::uint64_t seed) {
  GeneratorContract contract;
  contract.kind = kind;
  contract.source = "stub";
  contract.generate = [kind, seed](std::string_view image_ref, std::string_view question,
                                   std::optional<std::string_view> prefix) -> std::string {
    if (normalize_whitespace(question).empty()) {
      throw GenerationInputError("generator: empty question");
    }
    if (normalize_whitespace(image_ref).empty()) {
      throw GenerationInputError("generator: empty image_ref");
    }
    std::vector<std::string> salient;
    auto add = [&](std::string token) {
      if (std::find(salient.begin(), salient.end(), token) == salient.end()) {
        salient.push_back(std::move(token));
      }
    };
    if (prefix) {
      for (auto& t : tokenize(*prefix)) add(std::move(t));
    }
    std::size_t from_question = 0;
    for (auto& t : tokenize(question)) {
      if (from_question == 4) break;
      if (stopwords().count(t) || t.size() < 2) continue;
      add(std::move(t));
      ++from_question;
    }
    for (auto& cue : image_cues(image_ref)) add(std::move(cue));
    if (salient.empty()) salient.push_back("the scene");

    // The decode seed picks the phrasing and rotates the salient tokens.
    Rng rng(mix_seed(seed, fnv1a64(image_ref, fnv1a64(question))));
    const StubTemplate tpl = stub_template(kind);
    const std::string_view body = tpl.bodies[rng.index(tpl.bodies.size())];
    std::rotate(salient.begin(), salient.begin() + rng.index(salient.size()), salient.end());
    return std::string(tpl.lead) + ' ' + std::string(body) + ' ' + join(salient, " ");
  };
  return contract;
}

void register_generator(const std::string& name, GeneratorFactory factory) {
  std::lock_guard lock(generator_mutex());
  generator_registry().insert_or_assign(name, std::move(factory));
}

GeneratorContract create_generator(const std::string& name, GuidanceKind kind,
                                   std::uint64_t seed) {
  if (name == "stub") return stub_generator(kind, seed);
  GeneratorFactory factory;
  {
    std::lock_guard lock(generator_mutex());
    auto it = generator_registry().find(name);
    if (it == generator_registry().end()) {
      throw ConfigError("unknown generator '" + name + "'");
    }
    factory = it->second;
  }
  GeneratorContract contract = factory(kind, seed);
  contract.source = "plugin:" + name;
  return contract;
}

// ---------------------------------------------------------------------------
// Ingestion

namespace {

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw SchemaError(where + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<SceneGraphRecord> read_scene_graph_file(const std::filesystem::path& path) {
  std::vector<SceneGraphRecord> records;
  for_each_json_line(path, [&](const json& j) {
    SceneGraphRecord r;
    r.image_ref = j.at("image_ref").get<std::string>();
    const json& triplets = j.at("triplets");
    if (!triplets.is_array()) throw SchemaError("triplets: expected array");
    for (std::size_t i = 0; i < triplets.size(); ++i) {
      const json& t = triplets[i];
      if (!t.is_array() || t.size() != 3) {
        throw SchemaError("triplets[" + std::to_string(i) + "]: expected [subject, predicate, object]");
      }
      r.triplets.push_back({t[0].get<std::string>(), t[1].get<std::string>(), t[2].get<std::string>()});
    }
    records.push_back(std::move(r));
  });
  return records;
}

std::vector<DetectionRecord> read_detection_file(const std::filesystem::path& path) {
  std::vector<DetectionRecord> records;
  for_each_json_line(path, [&](const json& j) {
    DetectionRecord r;
    r.image_ref = j.at("image_ref").get<std::string>();
    r.labels = j.at("labels").get<std::vector<std::string>>();
    records.push_back(std::move(r));
  });
  return records;
}

}  // namespace lgvqa
