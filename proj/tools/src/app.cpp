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

#include "lgvqa_cli/app.hpp"

#include <algorithm>
#include <functional>

#include <CLI11.hpp>

#include "commands.hpp"
#include "lgvqa/errors.hpp"
#include "lgvqa_cli/settings.hpp"

namespace lgvqa::cli {

namespace {

struct Flags {
  Settings s;
  std::string config;
  std::vector<std::string> predictions;
  bool overwrite = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file; keys are flag names in snake_case");
  sub->add_option("--seed", f.s.seed, "Seed for every random choice (default 0)");
  sub->add_option("--out-dir", f.s.out_dir, "Directory for output artifacts (default .)");
}

void add_data(CLI::App* sub, Flags& f) {
  sub->add_option("--dataset", f.s.dataset, "Dataset file");
  sub->add_option("--adapter", f.s.adapter, "aokvqa | vsr | scienceqa | iconqa | jsonl (default jsonl)");
}

void add_model(CLI::App* sub, Flags& f) {
  sub->add_option("--backend", f.s.backend, "toy-dual | toy-fusion | plugin:<name> (default toy-dual)");
  sub->add_option("--mode", f.s.mode, "zero_shot | unguided | guided_concat | guided_merge");
  sub->add_option("--checkpoint", f.s.checkpoint, "Start from this checkpoint instead of a fresh backend");
  sub->add_option("--dim", f.s.dim, "Toy backend width (default 32)");
}

void add_guidance(CLI::App* sub, Flags& f) {
  sub->add_option("--guidance-kinds", f.s.guidance_kinds,
                  "Comma list of kinds and presets All, CSO, CSOL (default All)");
  sub->add_option("--guidance-cache", f.s.guidance_cache,
                  "Guidance cache file (default $LGVQA_CACHE_DIR/guidance.jsonl)");
  sub->add_option("--missing-guidance", f.s.missing_guidance, "error | skip (default error)");
}

void add_paper_ref(CLI::App* sub, Flags& f) {
  sub->add_option("--paper-ref", f.s.paper_ref,
                  "Append a published reference table: aokvqa | scienceqa | vsr | iconqa | aokvqa-qtypes");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"lgvqa: multi-choice visual question answering with language guidance", "lgvqa"};
  app.require_subcommand(1);
  Flags f;

  auto* synth = app.add_subcommand("synth", "Generate a planted-signal synthetic dataset");
  add_common(synth, f);
  synth->add_option("--n", f.s.n, "Number of instances (default 32)");
  synth->add_option("--n-choices", f.s.n_choices, "Choices per instance, 2..5 (default 4)");
  synth->add_option("--dim", f.s.dim, "Image feature width (default 32)");

  auto* convert = app.add_subcommand("convert", "Convert a dataset to canonical JSONL");
  add_common(convert, f);
  add_data(convert, f);
  convert->add_option("--guidance-cache", f.s.guidance_cache, "Store dataset-provided guidance here");
  convert->add_flag("--overwrite", f.overwrite, "Replace existing cache entries");

  auto* guidance = app.add_subcommand("guidance", "Populate the guidance cache");
  add_common(guidance, f);
  add_data(guidance, f);
  guidance->add_option("--guidance-kinds", f.s.guidance_kinds, "Kinds to populate (default All)");
  guidance->add_option("--guidance-cache", f.s.guidance_cache,
                       "Guidance cache file (default $LGVQA_CACHE_DIR/guidance.jsonl)");
  guidance->add_option("--generator", f.s.generator, "stub | <registered plugin> (default stub)");
  guidance->add_option("--scene-graphs", f.s.scene_graphs, "JSONL of detector triplets per image_ref");
  guidance->add_option("--detections", f.s.detections, "JSONL of detected labels per image_ref");
  guidance->add_flag("--overwrite", f.overwrite, "Replace existing cache entries");

  auto* zero_shot = app.add_subcommand("zero-shot", "Score a dataset without training");
  add_common(zero_shot, f);
  add_data(zero_shot, f);
  add_model(zero_shot, f);
  add_guidance(zero_shot, f);
  add_paper_ref(zero_shot, f);

  auto* train = app.add_subcommand("train", "Fine-tune a backend");
  add_common(train, f);
  add_data(train, f);
  add_model(train, f);
  add_guidance(train, f);
  add_paper_ref(train, f);
  train->add_option("--val-dataset", f.s.val_dataset, "Validation set; selects the best epoch");
  train->add_option("--lr", f.s.lr, "Learning rate (default 1e-2 for toy backends, 3e-6 otherwise)");
  train->add_option("--batch-size", f.s.batch_size, "Instances per step (default 8)");
  train->add_option("--epochs", f.s.epochs, "Epochs (default 8)");

  auto* eval = app.add_subcommand("eval", "Report accuracy for predictions or a checkpoint");
  add_common(eval, f);
  add_data(eval, f);
  add_model(eval, f);
  add_guidance(eval, f);
  add_paper_ref(eval, f);
  eval->add_option("--predictions", f.predictions, "Predictions JSONL");

  auto* compare = app.add_subcommand("compare", "Compare prediction files against a baseline");
  add_common(compare, f);
  add_data(compare, f);
  add_paper_ref(compare, f);
  compare->add_option("--predictions", f.predictions, "Two or more predictions JSONL files")->expected(1, -1);
  compare->add_option("--baseline", f.s.baseline, "Baseline label (default unguided)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    if (f.overwrite) f.s.overwrite = true;
    if (!f.predictions.empty()) f.s.predictions = f.predictions;
    Settings config_values;
    if (!f.config.empty()) config_values = read_config_file(f.config);
    const Settings s = overlay(f.s, config_values);

    const std::string name = chosen->get_name();
    if (name == "synth") return cmd_synth(s, out);
    if (name == "convert") return cmd_convert(s, out);
    if (name == "guidance") return cmd_guidance(s, out, err);
    if (name == "zero-shot") return cmd_zero_shot(s, out);
    if (name == "train") return cmd_train(s, out);
    if (name == "eval") return cmd_eval(s, out);
    if (name == "compare") return cmd_compare(s, out);
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace lgvqa::cli
