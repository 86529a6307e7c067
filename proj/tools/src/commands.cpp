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

#include "commands.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "lgvqa/checkpoint.hpp"
#include "lgvqa/errors.hpp"
#include "lgvqa/evalreport.hpp"
#include "lgvqa/guidance.hpp"
#include "lgvqa/paper_reference.hpp"
#include "lgvqa/text.hpp"
#include "lgvqa/toy_backend.hpp"
#include "lgvqa/training.hpp"
#include "lgvqa_cli/app.hpp"

namespace lgvqa::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kDefaultAdapter = "jsonl";
constexpr const char* kDefaultBackend = "toy-dual";
constexpr const char* kDefaultGuidanceKinds = "All";
constexpr const char* kDefaultGenerator = "stub";
constexpr std::size_t kDefaultSynthCount = 32;
constexpr std::size_t kDefaultSynthChoices = 4;
constexpr std::size_t kDefaultDim = 32;

fs::path out_dir(const Settings& s) {
  fs::path dir = s.out_dir.value_or(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::vector<std::string> split_list(std::string_view list) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    parts.push_back(normalize_whitespace(list.substr(start, end - start)));
    start = end + 1;
  }
  return parts;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string require(const std::optional<std::string>& value, const char* flag) {
  if (!value || value->empty()) throw ConfigError(std::string(flag) + " is required");
  return *value;
}

LoadResult load(const Settings& s, const std::string& path) {
  return load_dataset(s.adapter.value_or(kDefaultAdapter), path);
}

void report_skips(const LoadResult& r, const std::string& path, std::ostream& out) {
  if (r.skipped == 0) return;
  out << path << ": skipped " << r.skipped << " record(s)";
  for (const auto& [reason, count] : r.skip_reasons) out << " [" << reason << ": " << count << "]";
  out << '\n';
}

bool is_toy(const std::string& backend) {
  return backend == kToyDualName || backend == kToyFusionName;
}

std::unique_ptr<Backend> make_backend(const Settings& s, ScoringMode mode) {
  const std::uint64_t seed = s.seed.value_or(0);
  std::unique_ptr<Backend> backend;
  if (s.checkpoint) {
    backend = load_checkpoint(*s.checkpoint);
  } else {
    const std::string name = s.backend.value_or(kDefaultBackend);
    ToyBackendConfig config;
    config.seed = seed;
    config.dim = s.dim.value_or(kDefaultDim);
    config.guided_head = mode == ScoringMode::guided_merge;
    if (name == kToyDualName || name == kToyFusionName) {
      backend = create_backend(name, config.to_json());
    } else if (name.rfind("plugin:", 0) == 0) {
      backend = create_backend(name.substr(7), config.to_json());
    } else {
      throw ConfigError("unknown backend '" + name + "' (expected toy-dual, toy-fusion or plugin:<name>)");
    }
  }
  if (mode == ScoringMode::guided_merge && backend->kind() == BackendKind::fusion) {
    auto& fusion = static_cast<FusionBackend&>(*backend);
    if (!fusion.has_guided_head()) fusion.attach_guided_head(seed);
  }
  check_mode_backend(*backend, mode);
  return backend;
}

// Cache bundles plus dataset-shipped guidance for kinds the cache lacks.
std::optional<BundleStore> guidance_for(const Settings& s, ScoringMode mode,
                                        const BundleStore& from_dataset) {
  if (!is_guided(mode)) return std::nullopt;
  const auto path = resolve_cache_path(s);
  if (!path) {
    throw ConfigError("mode " + std::string(to_string(mode)) +
                      " needs --guidance-cache (or LGVQA_CACHE_DIR)");
  }
  if (!fs::exists(*path)) throw DataError("guidance cache '" + path->string() + "' does not exist");
  GuidanceCache cache(*path);
  BundleStore store = cache.bundles();
  for (const auto& [id, bundle] : from_dataset) {
    auto it = store.find(id);
    if (it == store.end()) {
      store.emplace(id, bundle);
      continue;
    }
    for (const auto& [kind, text] : bundle.entries()) {
      if (!it->second.has(kind)) it->second.set(kind, text);
    }
  }
  return store;
}

MissingGuidancePolicy missing_policy(const Settings& s) {
  const std::string v = s.missing_guidance.value_or("error");
  if (v == "error") return MissingGuidancePolicy::error;
  if (v == "skip") return MissingGuidancePolicy::skip;
  throw ConfigError("--missing-guidance must be error or skip");
}

void write_report_files(const fs::path& dir, const EvalReport& report, const std::string& title,
                        const std::string& reference_text) {
  write_text(dir / "report.json", report_to_json(report));
  write_text(dir / "report.txt", render_report_text(report, title) + reference_text);
  write_text(dir / "report.csv", render_report_csv(report));
}

// Rendered reference table for --paper-ref, or empty.
std::string paper_reference_text(const Settings& s) {
  if (!s.paper_ref) return {};
  const PaperReference& ref = embedded_paper_reference();
  const ReferenceTable* table = ref.table(*s.paper_ref);
  if (!table) {
    std::string ids;
    for (const auto& id : ref.table_ids()) ids += (ids.empty() ? "" : ", ") + id;
    throw ConfigError("unknown --paper-ref '" + *s.paper_ref + "' (available: " + ids + ")");
  }
  return "\n" + render_reference_table(*table);
}

}  // namespace

int cmd_synth(const Settings& s, std::ostream& out) {
  const std::uint64_t seed = s.seed.value_or(0);
  const SynthDataset ds = synth_dataset(seed, s.n.value_or(kDefaultSynthCount),
                                        s.n_choices.value_or(kDefaultSynthChoices),
                                        s.dim.value_or(kDefaultDim));
  const fs::path dir = out_dir(s);
  write_instances_jsonl(dir / "dataset.jsonl", ds.instances);
  std::vector<EmbeddingRecord> features;
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    features.push_back({std::nullopt, ds.instances[i].image_ref(), ds.image_features[i]});
  }
  write_embedding_dump(dir / "image_features.jsonl", features);
  out << "wrote " << ds.instances.size() << " instances to " << (dir / "dataset.jsonl").string() << '\n';
  return kExitOk;
}

int cmd_convert(const Settings& s, std::ostream& out) {
  const std::string path = require(s.dataset, "--dataset");
  const LoadResult r = load(s, path);
  report_skips(r, path, out);
  const fs::path dir = out_dir(s);
  write_instances_jsonl(dir / "dataset.jsonl", r.instances);
  out << "wrote " << r.instances.size() << " instances to " << (dir / "dataset.jsonl").string() << '\n';
  if (!r.bundles.empty()) {
    const auto cache_path = resolve_cache_path(s);
    if (!cache_path) {
      out << "dataset guidance for " << r.bundles.size()
          << " instance(s) not stored (no --guidance-cache)\n";
      return kExitOk;
    }
    GuidanceCache cache(*cache_path);
    for (const auto& [id, bundle] : r.bundles) {
      for (const auto& [kind, text] : bundle.entries()) {
        cache.put(id, kind, text, "dataset", s.overwrite.value_or(false));
      }
    }
    cache.save();
    out << "stored dataset guidance for " << r.bundles.size() << " instance(s) in "
        << cache_path->string() << '\n';
  }
  return kExitOk;
}

int cmd_guidance(const Settings& s, std::ostream& out, std::ostream& err) {
  const std::string path = require(s.dataset, "--dataset");
  const auto cache_path = resolve_cache_path(s);
  if (!cache_path) throw ConfigError("--guidance-cache (or LGVQA_CACHE_DIR) is required");
  const std::string kinds_text = s.guidance_kinds.value_or(kDefaultGuidanceKinds);
  const auto kinds = parse_guidance_kinds(kinds_text);
  // Explanations come from a generator trained on VQA-style data; presets only
  // apply them to A-OKVQA (and the synthetic stand-in) unless named outright.
  bool explanation_named = false;
  for (const auto& part : split_list(kinds_text)) explanation_named |= part == "explanation";
  const bool overwrite = s.overwrite.value_or(false);
  const std::uint64_t seed = s.seed.value_or(0);
  const std::string generator_name = s.generator.value_or(kDefaultGenerator);

  const LoadResult data = load(s, path);
  report_skips(data, path, out);

  std::map<std::string, std::string, std::less<>> scene_graphs;
  if (s.scene_graphs) {
    for (const auto& rec : read_scene_graph_file(*s.scene_graphs)) {
      if (auto text = serialize_scene_graph(rec.triplets)) scene_graphs[rec.image_ref] = *text;
    }
  }
  std::map<std::string, std::string, std::less<>> objects;
  if (s.detections) {
    for (const auto& rec : read_detection_file(*s.detections)) {
      if (rec.labels.empty()) continue;
      objects[rec.image_ref] = serialize_objects(DetectionSet(rec.labels));
    }
  }

  GuidanceCache cache(*cache_path);
  std::size_t inserted = 0, replaced = 0, not_listed = 0, not_applicable = 0;
  std::vector<std::string> failures;
  for (GuidanceKind kind : kinds) {
    const bool ingest = (kind == GuidanceKind::scene_graph && s.scene_graphs) ||
                        (kind == GuidanceKind::objects && s.detections);
    std::optional<GeneratorContract> generator;
    if (!ingest) generator = create_generator(generator_name, kind, seed);
    const auto& ingested = kind == GuidanceKind::scene_graph ? scene_graphs : objects;

    for (const auto& inst : data.instances) {
      if (kind == GuidanceKind::explanation && !explanation_named && inst.dataset() != DatasetKind::aokvqa &&
          inst.dataset() != DatasetKind::synthetic) {
        ++not_applicable;
        continue;
      }
      const std::string label = inst.id() + "/" + std::string(to_string(kind));
      if (cache.contains(inst.id(), kind) && !overwrite) {
        failures.push_back(label + ": already cached (use --overwrite)");
        continue;
      }
      std::string text;
      std::string source;
      if (ingest) {
        auto it = ingested.find(inst.image_ref());
        if (it == ingested.end()) {
          ++not_listed;
          continue;
        }
        text = it->second;
        source = "dataset";
      } else {
        try {
          text = generator->generate(inst.image_ref(), inst.question(), std::nullopt);
        } catch (const DataError& e) {
          failures.push_back(label + ": " + e.what());
          continue;
        }
        source = generator->source;
      }
      try {
        const PutResult result = cache.put(inst.id(), kind, text, source, overwrite);
        if (result == PutResult::inserted) ++inserted;
        if (result == PutResult::replaced) ++replaced;
      } catch (const DataError& e) {
        failures.push_back(label + ": " + e.what());
      }
    }
  }
  cache.save();
  out << "guidance cache " << cache_path->string() << ": " << inserted << " inserted, " << replaced
      << " replaced, " << failures.size() << " failed";
  if (not_listed) out << ", " << not_listed << " without detector output";
  if (not_applicable) out << ", " << not_applicable << " explanations skipped outside A-OKVQA";
  out << " (" << cache.size() << " entries total)\n";
  if (!failures.empty()) {
    err << "failed entries:\n";
    for (const auto& f : failures) err << "  " << f << '\n';
    return kExitPartial;
  }
  return kExitOk;
}

int cmd_zero_shot(const Settings& s, std::ostream& out) {
  const std::string path = require(s.dataset, "--dataset");
  const ScoringMode mode = parse_scoring_mode(s.mode.value_or("zero_shot"));
  const auto kinds = parse_guidance_kinds(s.guidance_kinds.value_or(kDefaultGuidanceKinds));
  const std::string reference = paper_reference_text(s);
  auto backend = make_backend(s, mode);
  const LoadResult data = load(s, path);
  report_skips(data, path, out);
  const auto bundles = guidance_for(s, mode, data.bundles);

  const auto predictions = predict_dataset(*backend, data.instances, bundles ? &*bundles : nullptr,
                                           mode, kinds, missing_policy(s) == MissingGuidancePolicy::skip);
  const EvalReport report = accuracy(attach_meta(predictions, data.instances));
  const fs::path dir = out_dir(s);
  write_predictions_jsonl(dir / "predictions.jsonl", predictions);
  write_report_files(dir, report, std::string(to_string(mode)), reference);
  out << render_report_text(report, std::string(to_string(mode))) << reference;
  return kExitOk;
}

int cmd_train(const Settings& s, std::ostream& out) {
  const std::string path = require(s.dataset, "--dataset");
  const ScoringMode mode = parse_scoring_mode(s.mode.value_or("unguided"));
  const std::string backend_name = s.backend.value_or(kDefaultBackend);

  TrainConfig config;
  config.mode = mode;
  config.batch_size = s.batch_size.value_or(config.batch_size);
  config.epochs = s.epochs.value_or(config.epochs);
  config.seed = s.seed.value_or(0);
  config.learning_rate = s.lr.value_or(is_toy(backend_name) || s.checkpoint
                                           ? kDefaultToyLearningRate
                                           : kDefaultPretrainedLearningRate);
  config.guidance_kinds = parse_guidance_kinds(s.guidance_kinds.value_or(kDefaultGuidanceKinds));
  config.missing_guidance = missing_policy(s);
  config.validate();
  const std::string reference = paper_reference_text(s);

  auto backend = make_backend(s, mode);
  const LoadResult train_data = load(s, path);
  report_skips(train_data, path, out);
  LoadResult val_data;
  if (s.val_dataset) {
    val_data = load(s, *s.val_dataset);
    report_skips(val_data, *s.val_dataset, out);
  }
  BundleStore shipped = train_data.bundles;
  for (const auto& [id, b] : val_data.bundles) shipped.emplace(id, b);
  const auto bundles = guidance_for(s, mode, shipped);
  const BundleStore* bundle_ptr = bundles ? &*bundles : nullptr;

  const std::string init_hash = hash_hex(parameter_hash(backend->parameters()));
  Trainer trainer(*backend, train_data.instances, bundle_ptr, config, val_data.instances);
  while (!trainer.finished()) {
    const EpochMetrics m = trainer.run_epoch();
    out << "epoch " << m.epoch << " loss " << m.mean_loss << " train_acc " << m.train_acc;
    if (m.val_acc) out << " val_acc " << *m.val_acc;
    out << '\n';
  }
  const TrainState state = trainer.state();
  if (const ParameterStore* best = trainer.best_parameters()) backend->mutable_parameters() = *best;
  const std::string final_hash = hash_hex(parameter_hash(backend->parameters()));

  const fs::path dir = out_dir(s);
  save_checkpoint(*backend, dir / "checkpoint.json");
  write_text(dir / "metrics.csv", metrics_csv(trainer.history()));
  write_text(dir / "train_state.json", state.to_json() + "\n");

  const auto& eval_set = s.val_dataset ? val_data.instances : train_data.instances;
  const auto predictions = predict_dataset(*backend, eval_set, bundle_ptr, mode, config.guidance_kinds,
                                           config.missing_guidance == MissingGuidancePolicy::skip);
  const EvalReport report = accuracy(attach_meta(predictions, eval_set));
  write_predictions_jsonl(dir / "predictions.jsonl", predictions);
  const std::string title =
      std::string(to_string(mode)) + (s.val_dataset ? " (validation)" : " (training set)");
  write_report_files(dir, report, title, reference);

  json summary;
  summary["backend"] = backend->name();
  summary["mode"] = to_string(mode);
  summary["seed"] = config.seed;
  summary["learning_rate"] = config.learning_rate;
  summary["batch_size"] = config.batch_size;
  summary["epochs"] = config.epochs;
  json kinds = json::array();
  for (GuidanceKind k : config.guidance_kinds) kinds.push_back(to_string(k));
  summary["guidance_kinds"] = is_guided(mode) ? kinds : json::array();
  summary["train_instances"] = train_data.instances.size();
  summary["skipped_instances"] = trainer.skipped_instances();
  summary["val_instances"] = val_data.instances.size();
  summary["trainable"] = trainer.trainable();
  summary["init_param_hash"] = init_hash;
  summary["final_param_hash"] = final_hash;
  summary["best_epoch"] = trainer.best_epoch() ? json(*trainer.best_epoch()) : json(nullptr);
  summary["final_train_acc"] = trainer.history().back().train_acc;
  summary["eval_accuracy"] = report.overall();
  write_text(dir / "train_summary.json", summary.dump(2) + "\n");

  out << render_report_text(report, title) << reference;
  return kExitOk;
}

int cmd_eval(const Settings& s, std::ostream& out) {
  const std::string path = require(s.dataset, "--dataset");
  const std::string reference = paper_reference_text(s);
  const LoadResult data = load(s, path);
  report_skips(data, path, out);
  const fs::path dir = out_dir(s);

  std::vector<PredictionRecord> predictions;
  std::string title;
  if (s.predictions && !s.predictions->empty()) {
    if (s.predictions->size() != 1) throw ConfigError("eval takes one --predictions file; use compare for more");
    predictions = read_predictions_jsonl(s.predictions->front());
    if (predictions.empty()) throw EmptyPredictionsError("'" + s.predictions->front() + "' holds no predictions");
    title = predictions.front().mode;
  } else {
    if (!s.checkpoint) throw ConfigError("eval needs --predictions or --checkpoint");
    const ScoringMode mode = parse_scoring_mode(s.mode.value_or("unguided"));
    const auto kinds = parse_guidance_kinds(s.guidance_kinds.value_or(kDefaultGuidanceKinds));
    auto backend = make_backend(s, mode);
    const auto bundles = guidance_for(s, mode, data.bundles);
    predictions = predict_dataset(*backend, data.instances, bundles ? &*bundles : nullptr, mode, kinds,
                                  missing_policy(s) == MissingGuidancePolicy::skip);
    write_predictions_jsonl(dir / "predictions.jsonl", predictions);
    title = std::string(to_string(mode));
  }
  const EvalReport report = accuracy(attach_meta(predictions, data.instances));
  write_report_files(dir, report, title, reference);
  out << render_report_text(report, title) << reference;
  return kExitOk;
}

int cmd_compare(const Settings& s, std::ostream& out) {
  const std::string path = require(s.dataset, "--dataset");
  if (!s.predictions || s.predictions->size() < 2) {
    throw ConfigError("compare needs at least two --predictions files");
  }
  const std::string reference = paper_reference_text(s);
  const LoadResult data = load(s, path);

  std::map<std::string, EvalReport> reports;
  std::string first_label;
  for (const auto& file : *s.predictions) {
    const auto predictions = read_predictions_jsonl(file);
    if (predictions.empty()) throw EmptyPredictionsError("'" + file + "' holds no predictions");
    std::string label = predictions.front().mode;
    if (reports.count(label)) label = fs::path(file).parent_path().filename().string() + "/" + label;
    if (reports.count(label)) label = file;
    if (first_label.empty()) first_label = label;
    reports.emplace(label, accuracy(attach_meta(predictions, data.instances)));
  }
  std::string baseline = s.baseline.value_or(reports.count("unguided") ? "unguided" : first_label);
  const DeltaTable table = compare_modes(reports, baseline);

  const fs::path dir = out_dir(s);
  write_text(dir / "compare.json", delta_table_to_json(table));
  write_text(dir / "compare.txt", render_delta_text(table) + reference);
  write_text(dir / "compare.csv", render_delta_csv(table));
  out << render_delta_text(table) << reference;
  return kExitOk;
}

}  // namespace lgvqa::cli
