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

#include <fstream>
#include <mutex>

#include <json.hpp>

#include "lgvqa/errors.hpp"
#include "lgvqa/guidance.hpp"
#include "lgvqa/text.hpp"

namespace lgvqa {

using nlohmann::json;

bool valid_cache_source(std::string_view source) {
  if (source == "stub" || source == "dataset") return true;
  return source.size() > 7 && source.substr(0, 7) == "plugin:";
}

GuidanceCache::GuidanceCache(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) load();
}

void GuidanceCache::load() {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw CacheIOError("cannot read guidance cache '" + path_.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path_.string() + ":" + std::to_string(line_no);
    try {
      const json j = json::parse(line);
      CacheEntry e;
      e.instance_id = j.at("instance_id").get<std::string>();
      e.kind = parse_guidance_kind(j.at("kind").get<std::string>());
      e.text = j.at("text").get<std::string>();
      e.source = j.at("source").get<std::string>();
      if (e.instance_id.empty() || e.text.empty() || has_control_chars(e.text) ||
          !valid_cache_source(e.source)) {
        throw CacheIOError(where + ": invalid entry");
      }
      entries_[{e.instance_id, e.kind}] = {std::move(e.text), std::move(e.source)};
    } catch (const json::exception& e) {
      throw CacheIOError(where + ": " + e.what());
    } catch (const SchemaError& e) {
      throw CacheIOError(where + ": " + e.what());
    }
  }
}

PutResult GuidanceCache::put(const std::string& instance_id, GuidanceKind kind,
                             const std::string& text, const std::string& source, bool overwrite) {
  if (instance_id.empty()) throw SchemaError("guidance cache: empty instance id");
  if (text.empty()) throw SchemaError("guidance cache: empty text for '" + instance_id + "'");
  if (has_control_chars(text)) {
    throw SchemaError("guidance cache: control characters in text for '" + instance_id + "'");
  }
  if (!valid_cache_source(source)) throw SchemaError("guidance cache: bad source '" + source + "'");

  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.try_emplace({instance_id, kind}, Value{text, source});
  if (inserted) return PutResult::inserted;
  if (it->second.text == text) return PutResult::unchanged;
  if (!overwrite) {
    throw CacheConflictError("guidance cache: '" + instance_id + "'/" +
                             std::string(to_string(kind)) + " already holds different text");
  }
  it->second = Value{text, source};
  return PutResult::replaced;
}

std::optional<std::string> GuidanceCache::get(std::string_view instance_id,
                                              GuidanceKind kind) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find({std::string(instance_id), kind});
  if (it == entries_.end()) return std::nullopt;
  return it->second.text;
}

bool GuidanceCache::contains(std::string_view instance_id, GuidanceKind kind) const {
  std::shared_lock lock(mutex_);
  return entries_.count({std::string(instance_id), kind}) != 0;
}

std::size_t GuidanceCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::vector<CacheEntry> GuidanceCache::entries() const {
  std::shared_lock lock(mutex_);
  std::vector<CacheEntry> out;
  out.reserve(entries_.size());
  for (const auto& [key, value] : entries_) {
    out.push_back({key.first, key.second, value.text, value.source});
  }
  return out;
}

BundleStore GuidanceCache::bundles() const {
  std::shared_lock lock(mutex_);
  BundleStore store;
  for (const auto& [key, value] : entries_) {
    auto it = store.find(key.first);
    if (it == store.end()) it = store.emplace(key.first, GuidanceBundle(key.first)).first;
    it->second.set(key.second, value.text);
  }
  return store;
}

void GuidanceCache::save() const {
  if (path_.empty()) throw CacheIOError("guidance cache has no backing file");
  save_as(path_);
}

void GuidanceCache::save_as(const std::filesystem::path& path) const {
  const auto all = entries();
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheIOError("cannot write guidance cache '" + path.string() + "'");
    for (const auto& e : all) {
      json j;
      j["instance_id"] = e.instance_id;
      j["kind"] = to_string(e.kind);
      j["text"] = e.text;
      j["source"] = e.source;
      out << j.dump() << '\n';
    }
    if (!out) throw CacheIOError("write failed for '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CacheIOError("cannot replace '" + path.string() + "': " + ec.message());
}

}  // namespace lgvqa
