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

#include "lgvqa/evalreport.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include <json.hpp>

#include "lgvqa/errors.hpp"

namespace lgvqa {

using nlohmann::json;

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::vector<std::string> slice_order() {
  std::vector<std::string> names{"overall", "easy", "hard"};
  for (QuestionType t : kAllQuestionTypes) names.emplace_back(to_string(t));
  return names;
}

// Left-aligned first column, right-aligned rest.
std::string render_columns(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      if (c == 0) {
        line += row[c] + pad;
      } else {
        line += "  " + pad + row[c];
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::vector<PredictionMeta> attach_meta(std::span<const PredictionRecord> predictions,
                                        std::span<const MultiChoiceInstance> instances) {
  std::unordered_map<std::string, const MultiChoiceInstance*> by_id;
  for (const auto& inst : instances) by_id.emplace(inst.id(), &inst);
  std::vector<PredictionMeta> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) throw IdSetMismatchError("prediction '" + p.id + "' has no matching instance");
    PredictionMeta m;
    m.id = p.id;
    m.predicted_index = p.predicted_index;
    m.gold_index = p.gold_index;
    m.difficulty = it->second->difficulty();
    m.question_type = question_type(it->second->question());
    out.push_back(std::move(m));
  }
  return out;
}

const SliceAccuracy* EvalReport::slice(std::string_view name) const {
  for (const auto& s : slices) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

double EvalReport::overall() const {
  const SliceAccuracy* s = slice("overall");
  return s ? s->accuracy : 0.0;
}

EvalReport accuracy(std::span<const PredictionMeta> predictions) {
  if (predictions.empty()) throw EmptyPredictionsError("accuracy: no predictions");
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // name -> (count, correct)
  EvalReport report;
  for (const auto& p : predictions) {
    const bool ok = p.predicted_index == p.gold_index;
    report.outcomes[p.id] = ok;
    auto bump = [&](std::string_view name) {
      auto& t = tally[std::string(name)];
      ++t.first;
      if (ok) ++t.second;
    };
    bump("overall");
    if (p.difficulty != Difficulty::unspecified) bump(to_string(p.difficulty));
    bump(to_string(p.question_type));
  }
  for (const auto& name : slice_order()) {
    auto it = tally.find(name);
    if (it == tally.end()) continue;
    SliceAccuracy s;
    s.name = name;
    s.count = it->second.first;
    s.correct = it->second.second;
    s.accuracy = 100.0 * static_cast<double>(s.correct) / static_cast<double>(s.count);
    report.slices.push_back(std::move(s));
  }
  return report;
}

DeltaTable compare_modes(const std::map<std::string, EvalReport>& reports,
                         const std::string& baseline) {
  if (reports.size() < 2) throw ConfigError("compare_modes: need at least two reports");
  auto base_it = reports.find(baseline);
  if (base_it == reports.end()) throw ConfigError("compare_modes: no report named '" + baseline + "'");
  const EvalReport& base = base_it->second;

  DeltaTable table;
  table.baseline = baseline;
  table.reports = reports;
  for (const auto& [mode, report] : reports) {
    const bool same_ids =
        report.outcomes.size() == base.outcomes.size() &&
        std::equal(report.outcomes.begin(), report.outcomes.end(), base.outcomes.begin(),
                   [](const auto& a, const auto& b) { return a.first == b.first; });
    if (!same_ids) {
      throw IdSetMismatchError("compare_modes: '" + mode + "' and '" + baseline +
                               "' cover different instance ids");
    }
    if (mode == baseline) continue;
    ModeDelta row;
    row.mode = mode;
    for (const auto& s : report.slices) {
      if (const SliceAccuracy* b = base.slice(s.name)) row.deltas.emplace_back(s.name, s.accuracy - b->accuracy);
    }
    for (const auto& [id, ok] : report.outcomes) {
      const bool was = base.outcomes.at(id);
      if (ok && !was) row.became_correct.push_back(id);
      if (!ok && was) row.became_incorrect.push_back(id);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

EvalReport mean_of_runs(std::span<const EvalReport> reports) {
  if (reports.empty()) throw EmptyPredictionsError("mean_of_runs: no reports");
  if (reports.size() == 1) return reports.front();
  const EvalReport& first = reports.front();
  for (const auto& r : reports) {
    const bool same = r.slices.size() == first.slices.size() &&
                      std::equal(r.slices.begin(), r.slices.end(), first.slices.begin(),
                                 [](const auto& a, const auto& b) { return a.name == b.name; });
    if (!same) throw SliceMismatchError("mean_of_runs: reports have different slices");
  }
  EvalReport out;
  out.runs = 0;
  for (const auto& r : reports) out.runs += r.runs;
  for (std::size_t i = 0; i < first.slices.size(); ++i) {
    SliceAccuracy s;
    s.name = first.slices[i].name;
    s.count = first.slices[i].count;
    double sum = 0.0;
    double lo = first.slices[i].accuracy;
    double hi = lo;
    for (const auto& r : reports) {
      const double a = r.slices[i].accuracy;
      sum += a;
      lo = std::min(lo, r.slices[i].min.value_or(a));
      hi = std::max(hi, r.slices[i].max.value_or(a));
    }
    s.accuracy = sum / static_cast<double>(reports.size());
    s.min = lo;
    s.max = hi;
    out.slices.push_back(std::move(s));
  }
  return out;
}

std::string format_delta(double delta) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.2f", delta);
  std::string s = buf;
  if (s == "-0.00") s = "+0.00";
  return s;
}

namespace {

json report_json(const EvalReport& report) {
  json slices = json::array();
  for (const auto& s : report.slices) {
    json j = {{"name", s.name}, {"count", s.count}, {"correct", s.correct}, {"accuracy", s.accuracy}};
    if (s.min) j["min"] = *s.min;
    if (s.max) j["max"] = *s.max;
    slices.push_back(std::move(j));
  }
  json outcomes = json::object();
  for (const auto& [id, ok] : report.outcomes) outcomes[id] = ok;
  return {{"runs", report.runs}, {"slices", std::move(slices)}, {"outcomes", std::move(outcomes)}};
}

}  // namespace

std::string report_to_json(const EvalReport& report) { return report_json(report).dump(2) + "\n"; }

EvalReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.runs = j.at("runs").get<std::size_t>();
    for (const auto& s : j.at("slices")) {
      SliceAccuracy a;
      a.name = s.at("name").get<std::string>();
      a.count = s.at("count").get<std::size_t>();
      a.correct = s.at("correct").get<std::size_t>();
      a.accuracy = s.at("accuracy").get<double>();
      if (s.contains("min")) a.min = s["min"].get<double>();
      if (s.contains("max")) a.max = s["max"].get<double>();
      r.slices.push_back(std::move(a));
    }
    for (const auto& [id, ok] : j.at("outcomes").items()) r.outcomes[id] = ok.get<bool>();
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("report: ") + e.what());
  }
}

std::string render_report_text(const EvalReport& report, std::string_view title) {
  std::vector<std::vector<std::string>> rows;
  const bool averaged = report.runs > 1;
  if (averaged) {
    rows.push_back({"slice", "n", "accuracy", "min", "max"});
  } else {
    rows.push_back({"slice", "n", "correct", "accuracy"});
  }
  for (const auto& s : report.slices) {
    if (averaged) {
      rows.push_back({s.name, std::to_string(s.count), fixed2(s.accuracy),
                      fixed2(s.min.value_or(s.accuracy)), fixed2(s.max.value_or(s.accuracy))});
    } else {
      rows.push_back({s.name, std::to_string(s.count), std::to_string(s.correct), fixed2(s.accuracy)});
    }
  }
  std::string out;
  if (!title.empty()) out += std::string(title) + '\n';
  if (averaged) out += "mean of " + std::to_string(report.runs) + " runs\n";
  return out + render_columns(rows);
}

std::string render_report_csv(const EvalReport& report) {
  std::string out = "slice,count,correct,accuracy,min,max\n";
  for (const auto& s : report.slices) {
    out += csv_field(s.name) + ',' + std::to_string(s.count) + ',' + std::to_string(s.correct) + ',' +
           fixed2(s.accuracy) + ',' + (s.min ? fixed2(*s.min) : "") + ',' +
           (s.max ? fixed2(*s.max) : "") + '\n';
  }
  return out;
}

std::string delta_table_to_json(const DeltaTable& table) {
  json j;
  j["baseline"] = table.baseline;
  json reports = json::object();
  for (const auto& [mode, r] : table.reports) {
    json slices = json::object();
    for (const auto& s : r.slices) slices[s.name] = s.accuracy;
    reports[mode] = std::move(slices);
  }
  j["accuracy"] = std::move(reports);
  json rows = json::array();
  for (const auto& row : table.rows) {
    json deltas = json::object();
    for (const auto& [name, d] : row.deltas) deltas[name] = d;
    rows.push_back({{"mode", row.mode},
                    {"deltas", std::move(deltas)},
                    {"became_correct", row.became_correct},
                    {"became_incorrect", row.became_incorrect}});
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string render_delta_text(const DeltaTable& table) {
  const EvalReport& base = table.reports.at(table.baseline);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"slice", table.baseline};
  for (const auto& row : table.rows) {
    header.push_back(row.mode);
    header.push_back("delta");
  }
  rows.push_back(header);
  for (const auto& s : base.slices) {
    std::vector<std::string> line{s.name, fixed2(s.accuracy)};
    for (const auto& row : table.rows) {
      const SliceAccuracy* other = table.reports.at(row.mode).slice(s.name);
      line.push_back(other ? fixed2(other->accuracy) : "-");
      line.push_back(other ? format_delta(other->accuracy - s.accuracy) : "-");
    }
    rows.push_back(std::move(line));
  }
  std::string out = "baseline: " + table.baseline + "\n" + render_columns(rows);
  for (const auto& row : table.rows) {
    out += row.mode + ": " + std::to_string(row.became_correct.size()) + " became correct, " +
           std::to_string(row.became_incorrect.size()) + " became incorrect\n";
  }
  return out;
}

std::string render_delta_csv(const DeltaTable& table) {
  std::string out = "mode,slice,accuracy,baseline_accuracy,delta\n";
  const EvalReport& base = table.reports.at(table.baseline);
  for (const auto& row : table.rows) {
    for (const auto& [name, d] : row.deltas) {
      out += csv_field(row.mode) + ',' + csv_field(name) + ',' +
             fixed2(table.reports.at(row.mode).slice(name)->accuracy) + ',' +
             fixed2(base.slice(name)->accuracy) + ',' + format_delta(d) + '\n';
    }
  }
  return out;
}

}  // namespace lgvqa
