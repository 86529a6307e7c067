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

// Published accuracy tables shipped as a read-only constants file. Values
// are kept as the literal strings from the source table so they render
// verbatim; nothing here is computed.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lgvqa {

struct ReferenceRow {
  std::string label;
  std::vector<std::string> values;
};

struct ReferenceTable {
  std::string id;
  std::string title;
  std::vector<std::string> columns;
  std::vector<ReferenceRow> rows;

  const ReferenceRow* row(std::string_view label) const;
  // Column index by name; nullopt when absent.
  std::optional<std::size_t> column(std::string_view name) const;
};

struct PaperReference {
  std::string note;
  std::vector<ReferenceTable> tables;

  const ReferenceTable* table(std::string_view id) const;
  std::vector<std::string> table_ids() const;
};

// The copy compiled into the library.
const PaperReference& embedded_paper_reference();
// Throws DataError for unreadable or malformed files.
PaperReference load_paper_reference(const std::filesystem::path& path);
PaperReference parse_paper_reference(std::string_view json_text);

// Aligned text table labeled as published reference values.
std::string render_reference_table(const ReferenceTable& table);

// value(to) - value(from) in one column. Throws DataError on unknown
// rows/columns or non-numeric cells.
double reference_delta(const ReferenceTable& table, std::string_view from_row,
                       std::string_view to_row, std::string_view column);

}  // namespace lgvqa
