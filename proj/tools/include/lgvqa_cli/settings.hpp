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

// Every option the command line accepts, each unset until a flag or the
// config file provides it. Precedence: flag > config file > built-in default.
//
// Config file: one JSON object whose keys are the flag names in snake_case,
// e.g. {"batch_size": 8, "guidance_kinds": "All", "out_dir": "runs/a"}.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lgvqa::cli {

struct Settings {
  std::optional<std::string> dataset;
  std::optional<std::string> adapter;
  std::optional<std::string> val_dataset;
  std::optional<std::string> backend;
  std::optional<std::string> mode;
  std::optional<std::string> guidance_kinds;
  std::optional<std::string> guidance_cache;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> paper_ref;
  std::optional<bool> overwrite;
  std::optional<std::string> checkpoint;
  std::optional<std::vector<std::string>> predictions;
  std::optional<std::string> baseline;
  std::optional<std::size_t> n;
  std::optional<std::size_t> n_choices;
  std::optional<std::size_t> dim;
  std::optional<std::string> generator;
  std::optional<std::string> scene_graphs;
  std::optional<std::string> detections;
  std::optional<std::string> missing_guidance;
};

// Throws ConfigError for unreadable files, unknown keys, or wrongly typed
// values.
Settings read_config_file(const std::filesystem::path& path);

// Field-wise: flags where set, else the config value.
Settings overlay(const Settings& flags, const Settings& config);

// Guidance cache location: explicit setting, else $LGVQA_CACHE_DIR/guidance.jsonl,
// else nullopt.
std::optional<std::filesystem::path> resolve_cache_path(const Settings& settings);

}  // namespace lgvqa::cli
