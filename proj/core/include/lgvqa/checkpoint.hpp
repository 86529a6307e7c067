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

// Checkpoint manifest (JSON, one file):
//
//   {
//     "format": "lgvqa-checkpoint", "version": 1,
//     "backend": "<registry name>", "config": { ...backend config... },
//     "param_hash": "<16 hex digits>",
//     "tensors": { "<name>": { "shape": [..], "data": [..] }, ... }
//   }
//
// Values are written with round-trip precision, so a reload is bit-exact.
// Tensor names are the backend's stable parameter names.
//
// Embedding dumps are JSONL; each line carries a "vector" plus whichever of
// "text" and "image_ref" identify it.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lgvqa/backend.hpp"

namespace lgvqa {

void save_checkpoint(const Backend& backend, const std::filesystem::path& path);
// Throws CheckpointError on format or tensor mismatches, ConfigError for
// unknown backends.
std::unique_ptr<Backend> load_checkpoint(const std::filesystem::path& path);

// Same manifest, as a string.
std::string checkpoint_to_string(const Backend& backend);
std::unique_ptr<Backend> checkpoint_from_string(const std::string& text);

struct EmbeddingRecord {
  std::optional<std::string> text;
  std::optional<std::string> image_ref;
  Vector vector;

  bool operator==(const EmbeddingRecord&) const = default;
};

void write_embedding_dump(const std::filesystem::path& path,
                          const std::vector<EmbeddingRecord>& records);
std::vector<EmbeddingRecord> read_embedding_dump(const std::filesystem::path& path);

}  // namespace lgvqa
