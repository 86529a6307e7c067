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

#include "lgvqa_cli/settings.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "lgvqa/errors.hpp"

namespace lgvqa::cli {

using nlohmann::json;

namespace {

template <typename T>
std::function<void(Settings&, const json&)> setter_for(std::optional<T> Settings::*field) {
  return [field](Settings& s, const json& v) { s.*field = v.get<T>(); };
}

const std::map<std::string, std::function<void(Settings&, const json&)>>& setters() {
  static const std::map<std::string, std::function<void(Settings&, const json&)>> table = {
      {"dataset", setter_for(&Settings::dataset)},
      {"adapter", setter_for(&Settings::adapter)},
      {"val_dataset", setter_for(&Settings::val_dataset)},
      {"backend", setter_for(&Settings::backend)},
      {"mode", setter_for(&Settings::mode)},
      {"guidance_kinds", setter_for(&Settings::guidance_kinds)},
      {"guidance_cache", setter_for(&Settings::guidance_cache)},
      {"lr", setter_for(&Settings::lr)},
      {"batch_size", setter_for(&Settings::batch_size)},
      {"epochs", setter_for(&Settings::epochs)},
      {"seed", setter_for(&Settings::seed)},
      {"out_dir", setter_for(&Settings::out_dir)},
      {"paper_ref", setter_for(&Settings::paper_ref)},
      {"overwrite", setter_for(&Settings::overwrite)},
      {"checkpoint", setter_for(&Settings::checkpoint)},
      {"predictions", setter_for(&Settings::predictions)},
      {"baseline", setter_for(&Settings::baseline)},
      {"n", setter_for(&Settings::n)},
      {"n_choices", setter_for(&Settings::n_choices)},
      {"dim", setter_for(&Settings::dim)},
      {"generator", setter_for(&Settings::generator)},
      {"scene_graphs", setter_for(&Settings::scene_graphs)},
      {"detections", setter_for(&Settings::detections)},
      {"missing_guidance", setter_for(&Settings::missing_guidance)},
  };
  return table;
}

template <typename T>
void pick(std::optional<T>& out, const std::optional<T>& flag, const std::optional<T>& config) {
  out = flag ? flag : config;
}

}  // namespace

Settings read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j = json::parse(buffer.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ConfigError("config file '" + path.string() + "' is not a JSON object");
  }
  Settings s;
  for (const auto& [key, value] : j.items()) {
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("config file: unknown key '" + key + "'");
    if (value.is_null()) continue;
    try {
      it->second(s, value);
    } catch (const json::exception&) {
      throw ConfigError("config file: wrong type for '" + key + "'");
    }
  }
  return s;
}

Settings overlay(const Settings& flags, const Settings& config) {
  Settings s;
  pick(s.dataset, flags.dataset, config.dataset);
  pick(s.adapter, flags.adapter, config.adapter);
  pick(s.val_dataset, flags.val_dataset, config.val_dataset);
  pick(s.backend, flags.backend, config.backend);
  pick(s.mode, flags.mode, config.mode);
  pick(s.guidance_kinds, flags.guidance_kinds, config.guidance_kinds);
  pick(s.guidance_cache, flags.guidance_cache, config.guidance_cache);
  pick(s.lr, flags.lr, config.lr);
  pick(s.batch_size, flags.batch_size, config.batch_size);
  pick(s.epochs, flags.epochs, config.epochs);
  pick(s.seed, flags.seed, config.seed);
  pick(s.out_dir, flags.out_dir, config.out_dir);
  pick(s.paper_ref, flags.paper_ref, config.paper_ref);
  pick(s.overwrite, flags.overwrite, config.overwrite);
  pick(s.checkpoint, flags.checkpoint, config.checkpoint);
  pick(s.predictions, flags.predictions, config.predictions);
  pick(s.baseline, flags.baseline, config.baseline);
  pick(s.n, flags.n, config.n);
  pick(s.n_choices, flags.n_choices, config.n_choices);
  pick(s.dim, flags.dim, config.dim);
  pick(s.generator, flags.generator, config.generator);
  pick(s.scene_graphs, flags.scene_graphs, config.scene_graphs);
  pick(s.detections, flags.detections, config.detections);
  pick(s.missing_guidance, flags.missing_guidance, config.missing_guidance);
  return s;
}

std::optional<std::filesystem::path> resolve_cache_path(const Settings& settings) {
  if (settings.guidance_cache) return std::filesystem::path(*settings.guidance_cache);
  if (const char* dir = std::getenv("LGVQA_CACHE_DIR"); dir != nullptr && *dir != '\0') {
    return std::filesystem::path(dir) / "guidance.jsonl";
  }
  return std::nullopt;
}

}  // namespace lgvqa::cli
