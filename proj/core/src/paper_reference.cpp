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

#include "lgvqa/paper_reference.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lgvqa/errors.hpp"
#include "paper_reference_data.hpp"

namespace lgvqa {

using nlohmann::json;

const ReferenceRow* ReferenceTable::row(std::string_view label) const {
  for (const auto& r : rows) {
    if (r.label == label) return &r;
  }
  return nullptr;
}

std::optional<std::size_t> ReferenceTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  return std::nullopt;
}

const ReferenceTable* PaperReference::table(std::string_view id) const {
  for (const auto& t : tables) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

std::vector<std::string> PaperReference::table_ids() const {
  std::vector<std::string> ids;
  for (const auto& t : tables) ids.push_back(t.id);
  return ids;
}

PaperReference parse_paper_reference(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    if (j.at("format").get<std::string>() != "lgvqa-paper-reference") {
      throw DataError("reference file: unexpected format tag");
    }
    PaperReference ref;
    ref.note = j.value("note", "");
    for (const auto& t : j.at("tables")) {
      ReferenceTable table;
      table.id = t.at("id").get<std::string>();
      table.title = t.at("title").get<std::string>();
      table.columns = t.at("columns").get<std::vector<std::string>>();
      for (const auto& r : t.at("rows")) {
        ReferenceRow row;
        row.label = r.at("label").get<std::string>();
        row.values = r.at("values").get<std::vector<std::string>>();
        if (row.values.size() != table.columns.size()) {
          throw DataError("reference table '" + table.id + "' row '" + row.label +
                          "': value count does not match the columns");
        }
        table.rows.push_back(std::move(row));
      }
      ref.tables.push_back(std::move(table));
    }
    return ref;
  } catch (const json::exception& e) {
    throw DataError(std::string("reference file: ") + e.what());
  }
}

const PaperReference& embedded_paper_reference() {
  static const PaperReference ref = parse_paper_reference(detail::kEmbeddedPaperReference);
  return ref;
}

PaperReference load_paper_reference(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read reference file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_paper_reference(buffer.str());
}

std::string render_reference_table(const ReferenceTable& table) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{""};
  header.insert(header.end(), table.columns.begin(), table.columns.end());
  rows.push_back(std::move(header));
  for (const auto& r : table.rows) {
    std::vector<std::string> line{r.label};
    line.insert(line.end(), r.values.begin(), r.values.end());
    rows.push_back(std::move(line));
  }
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out = table.title + " (published reference values)\n";
  for (const auto& row : rows) {
    std::string line = row[0] + std::string(width[0] - row[0].size(), ' ');
    for (std::size_t c = 1; c < row.size(); ++c) {
      line += "  " + std::string(width[c] - row[c].size(), ' ') + row[c];
    }
    out += line + '\n';
  }
  return out;
}

double reference_delta(const ReferenceTable& table, std::string_view from_row,
                       std::string_view to_row, std::string_view column) {
  const auto col = table.column(column);
  const ReferenceRow* from = table.row(from_row);
  const ReferenceRow* to = table.row(to_row);
  if (!col || !from || !to) {
    throw DataError("reference table '" + table.id + "': unknown row or column");
  }
  auto value = [&](const std::string& cell) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw DataError("reference table '" + table.id + "': non-numeric cell '" + cell + "'");
    }
    return v;
  };
  return value(to->values[*col]) - value(from->values[*col]);
}

}  // namespace lgvqa
