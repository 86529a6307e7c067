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
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lgvqa/instance.hpp"

namespace lgvqa {

// ---------------------------------------------------------------------------
// Scene graphs and detected objects

struct SceneTriplet {
  std::string subject;
  std::string predicate;
  std::string object;

  bool operator==(const SceneTriplet&) const = default;
};

inline constexpr std::string_view kSceneSeparator = "[SEP]";

// "s p o [SEP] s p o ..."; nullopt for an empty list. Throws SchemaError
// when a triplet has an empty field.
std::optional<std::string> serialize_scene_graph(std::span<const SceneTriplet> triplets);

// Detected labels, counted and kept in order of first appearance.
class DetectionSet {
 public:
  DetectionSet() = default;
  explicit DetectionSet(std::span<const std::string> labels);

  void add(std::string_view label, std::size_t count = 1);
  const std::vector<std::pair<std::string, std::size_t>>& counts() const { return counts_; }
  bool empty() const { return counts_.empty(); }

 private:
  std::vector<std::pair<std::string, std::size_t>> counts_;
};

// "one".."twenty", digits above twenty.
std::string count_word(std::size_t count);
std::optional<std::size_t> parse_count_word(std::string_view word);

// Plural of the last word: irregular table (person, child, man, woman),
// "es" after s/x/z/sh/ch, otherwise "s". Count 1 returns the noun as is.
std::string pluralize(std::string_view noun, std::size_t count);

// "two dogs, one girl, three toys". Throws EmptyDetectionError.
std::string serialize_objects(const DetectionSet& detections);

struct ObjectTerm {
  std::size_t count = 0;
  std::string noun;  // as written, plural form included

  bool operator==(const ObjectTerm&) const = default;
};

// Inverse of serialize_objects. Throws SchemaError on malformed terms.
std::vector<ObjectTerm> parse_objects(std::string_view text);

// ---------------------------------------------------------------------------
// Combination

// Presets: "All" = rationale, explanation, caption, scene_graph, objects;
// "CSO" = caption, scene_graph, objects; "CSOL" = CSO + lecture. Returns
// nullopt for other names.
std::optional<std::vector<GuidanceKind>> guidance_preset(std::string_view name);

// Comma-separated kind names and/or preset names, e.g. "CSO,lecture".
std::vector<GuidanceKind> parse_guidance_kinds(std::string_view list);

struct CombinedGuidance {
  std::string text;
  // Requested kinds the bundle lacked; callers surface these as warnings.
  std::vector<GuidanceKind> skipped;
};

// Single-space concatenation of the present kinds in the given order.
// Throws NoGuidanceAvailableError when none of the kinds is present.
CombinedGuidance combine(const GuidanceBundle& bundle, std::span<const GuidanceKind> kinds);

// As combine, but yields an empty string where combine would throw.
CombinedGuidance combine_or_empty(const GuidanceBundle& bundle,
                                  std::span<const GuidanceKind> kinds);

// ---------------------------------------------------------------------------
// Generators

// Contract for image- and question-conditioned text generators (rationales,
// explanations, captions). Implementations must be deterministic for a
// fixed decode seed and never return empty text.
struct GeneratorContract {
  GuidanceKind kind = GuidanceKind::rationale;
  std::string source;  // "stub" or "plugin:<name>"
  std::function<std::string(std::string_view image_ref, std::string_view question,
                            std::optional<std::string_view> prefix)>
      generate;
};

// Templated text from question keywords and image_ref cues. Throws
// GenerationInputError for an empty question or image_ref.
GeneratorContract stub_generator(GuidanceKind kind, std::uint64_t seed);

using GeneratorFactory = std::function<GeneratorContract(GuidanceKind kind, std::uint64_t seed)>;
void register_generator(const std::string& name, GeneratorFactory factory);
// "stub" or a registered plugin name. Throws ConfigError when unknown.
GeneratorContract create_generator(const std::string& name, GuidanceKind kind, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Ingestion of detector outputs

struct SceneGraphRecord {
  std::string image_ref;
  std::vector<SceneTriplet> triplets;
};

struct DetectionRecord {
  std::string image_ref;
  std::vector<std::string> labels;
};

// JSONL {image_ref, triplets: [[s, p, o], ...]}.
std::vector<SceneGraphRecord> read_scene_graph_file(const std::filesystem::path& path);
// JSONL {image_ref, labels: [...]}.
std::vector<DetectionRecord> read_detection_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Cache

struct CacheEntry {
  std::string instance_id;
  GuidanceKind kind = GuidanceKind::rationale;
  std::string text;
  std::string source;

  bool operator==(const CacheEntry&) const = default;
};

enum class PutResult { inserted, unchanged, replaced };

// Persistent guidance store keyed by (instance_id, kind). File format: one
// JSON object per line {instance_id, kind, text, source}, written sorted by
// key. Readers may run concurrently; put takes an exclusive lock.
class GuidanceCache {
 public:
  GuidanceCache() = default;
  // Loads the file when it exists; save() writes back to it.
  explicit GuidanceCache(std::filesystem::path path);

  GuidanceCache(const GuidanceCache&) = delete;
  GuidanceCache& operator=(const GuidanceCache&) = delete;

  // Re-putting identical text is a no-op. Different text for an existing
  // key throws CacheConflictError unless overwrite is set.
  PutResult put(const std::string& instance_id, GuidanceKind kind, const std::string& text,
                const std::string& source = "stub", bool overwrite = false);
  std::optional<std::string> get(std::string_view instance_id, GuidanceKind kind) const;
  bool contains(std::string_view instance_id, GuidanceKind kind) const;
  std::size_t size() const;

  std::vector<CacheEntry> entries() const;
  BundleStore bundles() const;

  const std::filesystem::path& path() const { return path_; }
  void save() const;
  void save_as(const std::filesystem::path& path) const;

 private:
  using Key = std::pair<std::string, GuidanceKind>;
  struct Value {
    std::string text;
    std::string source;
  };

  void load();

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::map<Key, Value> entries_;
};

// True for "stub", "dataset", and "plugin:<name>".
bool valid_cache_source(std::string_view source);

}  // namespace lgvqa
