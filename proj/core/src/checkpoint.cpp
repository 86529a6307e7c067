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

#include "lgvqa/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lgvqa/errors.hpp"

namespace lgvqa {

using nlohmann::json;

std::string checkpoint_to_string(const Backend& backend) {
  json j;
  j["format"] = "lgvqa-checkpoint";
  j["version"] = 1;
  j["backend"] = backend.name();
  j["config"] = json::parse(backend.config_json());
  j["param_hash"] = hash_hex(parameter_hash(backend.parameters()));
  json tensors = json::object();
  for (const auto& [name, t] : backend.parameters()) {
    tensors[name] = {{"shape", t.shape}, {"data", t.data}};
  }
  j["tensors"] = std::move(tensors);
  return j.dump();
}

std::unique_ptr<Backend> checkpoint_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  if (j.value("format", "") != "lgvqa-checkpoint") throw CheckpointError("checkpoint: bad format tag");
  if (j.value("version", 0) != 1) throw CheckpointError("checkpoint: unsupported version");
  if (!j.contains("backend") || !j.contains("config") || !j.contains("tensors")) {
    throw CheckpointError("checkpoint: missing backend, config or tensors");
  }

  auto backend = create_backend(j["backend"].get<std::string>(), j["config"].dump());
  ParameterStore& params = backend->mutable_parameters();
  const json& tensors = j["tensors"];
  if (tensors.size() != params.names().size()) {
    throw CheckpointError("checkpoint: tensor count " + std::to_string(tensors.size()) +
                          " does not match backend (" + std::to_string(params.names().size()) +
                          ")");
  }
  try {
    for (const auto& [name, entry] : tensors.items()) {
      if (!params.contains(name)) throw CheckpointError("checkpoint: unexpected tensor '" + name + "'");
      Tensor& target = params.at(name);
      auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      auto data = entry.at("data").get<std::vector<double>>();
      if (shape != target.shape || data.size() != target.size()) {
        throw CheckpointError("checkpoint: shape mismatch for '" + name + "'");
      }
      target.data = std::move(data);
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  if (j.contains("param_hash") &&
      j["param_hash"].get<std::string>() != hash_hex(parameter_hash(params))) {
    throw CheckpointError("checkpoint: parameter hash mismatch");
  }
  return backend;
}

void save_checkpoint(const Backend& backend, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  out << checkpoint_to_string(backend) << '\n';
}

std::unique_ptr<Backend> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

void write_embedding_dump(const std::filesystem::path& path,
                          const std::vector<EmbeddingRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write embedding dump '" + path.string() + "'");
  for (const auto& r : records) {
    json j;
    if (r.text) j["text"] = *r.text;
    if (r.image_ref) j["image_ref"] = *r.image_ref;
    j["vector"] = r.vector;
    out << j.dump() << '\n';
  }
}

std::vector<EmbeddingRecord> read_embedding_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read embedding dump '" + path.string() + "'");
  std::vector<EmbeddingRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      EmbeddingRecord r;
      if (j.contains("text")) r.text = j["text"].get<std::string>();
      if (j.contains("image_ref")) r.image_ref = j["image_ref"].get<std::string>();
      r.vector = j.at("vector").get<Vector>();
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace lgvqa
