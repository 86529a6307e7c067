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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "fixtures.hpp"
#include "lgvqa/backend.hpp"
#include "lgvqa/data.hpp"
#include "lgvqa/evalreport.hpp"
#include "lgvqa/guidance.hpp"
#include "lgvqa/paper_reference.hpp"
#include "lgvqa/rng.hpp"
#include "lgvqa/scoring.hpp"
#include "lgvqa/toy_backend.hpp"
#include "lgvqa/training.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lgvqa;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int g_failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0) c.expect(secs < budget_s, "over time budget");
  std::printf("[%s] criterion %d: %s (%.2fs%s)%s%s\n", c.ok ? "PASS" : "FAIL", id, title, secs,
              budget_s > 0 ? (" of " + std::to_string(static_cast<int>(budget_s)) + "s").c_str() : "",
              c.ok ? "" : " -- ", c.detail.c_str());
  std::fflush(stdout);
  if (!c.ok) ++g_failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Runs the CLI with stdout captured to a file; returns the exit status.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + LGVQA_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<double> random_scores(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 4.0 * rng.normal();
  return v;
}

}  // namespace

int main() {
  criterion(1, "softmax and cross-entropy", 5.0, [](Check& c) {
    Rng rng(101);
    for (int i = 0; i < 1000; ++i) {
      const std::size_t n = 2 + rng.index(4);
      const auto raw = random_scores(rng, n);
      const std::size_t gold = rng.index(n);
      const auto s = softmax_scores(raw);
      double sum = 0.0;
      for (double p : s.normalized) sum += p;
      c.expect(std::abs(sum - 1.0) <= 1e-9, "normalized does not sum to 1");
      const double loss = choice_cross_entropy(s, gold).value;
      c.expect(std::abs(loss + std::log(s.normalized[gold])) <= 1e-9, "loss != -log(p_gold)");
      c.expect(std::abs(loss - oracle::cross_entropy(raw, gold)) <= 1e-9, "loss differs from oracle");
    }
    const double uniform = choice_cross_entropy(softmax_scores({0.7, 0.7, 0.7, 0.7}), 2).value;
    c.expect(std::abs(uniform - std::log(4.0)) <= 1e-12, "uniform loss " + fmt("%.17g", uniform));
  });

  criterion(2, "cross-entropy gradient", 0, [](Check& c) {
    Rng rng(202);
    for (int i = 0; i < 100; ++i) {
      const std::size_t n = 2 + rng.index(4);
      const auto raw = random_scores(rng, n);
      const std::size_t gold = rng.index(n);
      const auto grad = choice_cross_entropy_gradient(softmax_scores(raw), gold);
      double sum = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        sum += grad[k];
        const double numeric = oracle::central_difference(
            [&](double v) {
              auto r = raw;
              r[k] = v;
              return choice_cross_entropy(softmax_scores(r), gold).value;
            },
            raw[k], 1e-4);
        // Entries below 1e-6 are compared absolutely; double-precision
        // differences cannot resolve smaller gradients to 1e-5 relative.
        c.expect(oracle::relative_error(grad[k], numeric, 1e-6) <= 1e-5,
                 "gradient mismatch " + fmt("%.3e", oracle::relative_error(grad[k], numeric, 1e-6)));
      }
      c.expect(std::abs(sum) <= 1e-9, "gradient does not sum to 0");
    }
  });

  criterion(3, "dual-encoder score properties", 0, [](Check& c) {
    ToyBackendConfig cfg;
    cfg.seed = 303;
    auto dual = make_toy_dual(cfg);
    Rng rng(303);
    const std::vector<std::pair<std::string, std::string>> pairs{
        {"coco/1.jpg", "What is on the table? a cup"},
        {"coco/2.jpg", "Why is the road wet? rain"},
        {"synth://3/4/violin", "What is shown in this image? violin"}};
    for (const auto& [img, txt] : pairs) {
      const auto image = dual->encode_image(img);
      const auto text = dual->encode_text(txt);
      const double t = dual->temperature();
      const double base = cosine_times_scale(image, text, t);
      c.expect(std::abs(base - dual_match(*dual, img, txt)) <= 1e-12, "dual_match differs from encodings");
      c.expect(std::abs(base - std::exp(t) * oracle::cosine(image, text)) <= 1e-9, "score differs from oracle");
      for (int k = 0; k < 5; ++k) {
        const double a = std::exp(6.0 * rng.uniform() - 3.0);
        const double b = std::exp(6.0 * rng.uniform() - 3.0);
        auto si = image, st = text;
        for (auto& v : si) v *= a;
        for (auto& v : st) v *= b;
        c.expect(std::abs(cosine_times_scale(si, st, t) - base) <= 1e-9, "not rescale invariant");
      }
      Tensor& scale = dual->mutable_parameters().at("logit_scale");
      const double saved = scale.data[0];
      const double numeric = oracle::central_difference(
          [&](double v) {
            scale.data[0] = v;
            return dual_match(*dual, img, txt);
          },
          saved, 1e-5);
      scale.data[0] = saved;
      c.expect(oracle::relative_error(numeric, base) <= 1e-4, "d(score)/dt != score");
    }
  });

  criterion(4, "feature merge", 0, [](Check& c) {
    const std::vector<double> x1{1, 2}, x2{3, 4};
    c.expect(merge_features(x1, x2) == Vector{1, 2, 3, 4, -2, -2, 3, 8}, "merge([1,2],[3,4]) wrong");
    Rng rng(404);
    for (std::size_t d = 1; d <= 16; ++d) {
      Vector a(d);
      for (auto& v : a) v = rng.normal();
      const auto m = merge_features(a, a);
      c.expect(m.size() == 4 * d, "merged size is not 4d");
      for (std::size_t i = 0; i < d; ++i) c.expect(m[2 * d + i] == 0.0, "difference block nonzero for x1 = x2");
    }
  });

  criterion(5, "empty guidance reproduces unguided scores", 0, [](Check& c) {
    ToyBackendConfig cfg;
    cfg.seed = 505;
    auto dual = make_toy_dual(cfg);
    const auto ds = synth_dataset(505, 50, 4);
    const std::vector<GuidanceKind> kinds{GuidanceKind::caption, GuidanceKind::rationale};
    BundleStore empty;
    for (const auto& inst : ds.instances) empty.emplace(inst.id(), GuidanceBundle(inst.id()));
    const auto unguided = predict_dataset(*dual, ds.instances, nullptr, ScoringMode::unguided, kinds);
    const auto guided = predict_dataset(*dual, ds.instances, &empty, ScoringMode::guided_concat, kinds);
    for (std::size_t i = 0; i < unguided.size(); ++i) {
      c.expect(unguided[i].raw == guided[i].raw, "scores differ for " + unguided[i].id);
    }
  });

  criterion(6, "guidance serialization", 0, [](Check& c) {
    DetectionSet d;
    d.add("dog", 2);
    d.add("girl", 1);
    d.add("toy", 3);
    c.expect(serialize_objects(d) == "two dogs, one girl, three toys", "object string: " + serialize_objects(d));
    std::vector<SceneTriplet> triplets;
    for (std::size_t k = 1; k <= 12; ++k) {
      triplets.push_back({"s" + std::to_string(k), "near", "o" + std::to_string(k)});
      const std::string text = *serialize_scene_graph(triplets);
      std::istringstream words(text);
      std::size_t seps = 0;
      for (std::string tok; words >> tok;) seps += tok == "[SEP]" ? 1 : 0;
      c.expect(seps == k - 1, "scene graph of " + std::to_string(k) + " has " + std::to_string(seps) + " [SEP]");
    }
    const auto dir = fixture::temp_dir("acc_unicode");
    const std::vector<std::string> texts{"caf\xc3\xa9 cr\xc3\xa8me", "\xe6\x97\xa5\xe6\x9c\xac\xe8\xaa\x9e",
                                         "\xf0\x9f\x90\x95 \"q\" \\ slash", "\xce\xa3 \xe2\x89\xa0 \xe2\x88\x9e"};
    {
      GuidanceCache cache(dir / "g.jsonl");
      for (std::size_t i = 0; i < texts.size(); ++i) cache.put("u" + std::to_string(i), GuidanceKind::caption, texts[i]);
      cache.save();
    }
    GuidanceCache reloaded(dir / "g.jsonl");
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const auto got = reloaded.get("u" + std::to_string(i), GuidanceKind::caption);
      c.expect(got && *got == texts[i], "unicode text changed on reload");
    }
  });

  criterion(7, "overfit smoke on planted synthetic data", 60.0, [](Check& c) {
    const auto ds = synth_dataset(7, 32, 4);
    std::string csv[2];
    std::size_t reached = 0;
    for (int rerun = 0; rerun < 2; ++rerun) {
      ToyBackendConfig cfg;
      cfg.seed = 7;
      auto dual = make_toy_dual(cfg);
      TrainConfig tc;
      tc.epochs = 200;
      tc.learning_rate = kDefaultToyLearningRate;
      tc.seed = 7;
      Trainer trainer(*dual, ds.instances, nullptr, tc);
      while (!trainer.finished()) {
        const auto m = trainer.run_epoch();
        if (m.train_acc == 100.0 && reached == 0) reached = m.epoch;
      }
      csv[rerun] = metrics_csv(trainer.history());
      c.expect(trainer.history().back().train_acc == 100.0, "final train accuracy below 100.00");
    }
    c.expect(reached > 0 && reached <= 200, "never reached 100.00");
    c.expect(csv[0] == csv[1], "metrics CSV differs between seeded reruns");
  });

  criterion(8, "positional extension 77 -> 512", 0, [](Check& c) {
    ToyBackendConfig cfg;
    cfg.seed = 808;
    auto dual = make_toy_dual(cfg);
    auto ext = extend_positional_table(*dual, 512);
    c.expect(ext->max_text_len() == 512, "extended length is not 512");
    std::string text;
    for (int len = 1; len <= 77; ++len) {
      text += (len > 1 ? " w" : "w") + std::to_string(len);
      c.expect(dual->encode_text(text) == ext->encode_text(text),
               "encoding changed for a " + std::to_string(len) + "-token text");
    }
    std::string overflow = text;
    for (int len = 78; len <= 120; ++len) overflow += " w" + std::to_string(len);
    ParameterStore grads = ext->parameters().zeros_like();
    Vector g(ext->encode_text(overflow).size(), 1.0);
    ext->backward_text(overflow, g, grads);
    const Tensor& pos = grads.at("text_encoder.positional");
    double new_rows = 0.0;
    for (std::size_t r = 77; r < 120; ++r)
      for (double v : pos.row(r)) new_rows += std::abs(v);
    c.expect(new_rows > 0.0, "no gradient reaches the new positional rows");
    const auto trainable = freeze_policy(*ext);
    c.expect(trainable.count("text_encoder.positional") == 1, "positional table is frozen");
  });

  criterion(9, "metric arithmetic and reference tables", 0, [](Check& c) {
    Rng rng(909);
    std::vector<PredictionMeta> meta;
    std::vector<std::size_t> pred, gold;
    for (int i = 0; i < 10000; ++i) {
      const std::size_t n = 2 + rng.index(4);
      pred.push_back(rng.index(n));
      gold.push_back(rng.index(n));
      meta.push_back({"m" + std::to_string(i), pred.back(), gold.back(),
                      rng.uniform() < 0.1 ? Difficulty::hard : Difficulty::easy, kAllQuestionTypes[rng.index(6)]});
    }
    const auto report = accuracy(meta);
    c.expect(std::abs(report.overall() - oracle::count_accuracy(pred, gold)) <= 1e-12, "overall != brute force");
    const auto* e = report.slice("easy");
    const auto* h = report.slice("hard");
    const double weighted = (e->accuracy * e->count + h->accuracy * h->count) / (e->count + h->count);
    c.expect(std::abs(weighted - report.overall()) <= 1e-9, "difficulty slices do not average to overall");

    const auto dir = fixture::temp_dir("acc_ref");
    c.expect(run_cli("synth --n 8 --out-dir \"" + dir.string() + "\"", dir / "synth.log") == 0, "synth failed");
    c.expect(run_cli("zero-shot --dataset \"" + (dir / "dataset.jsonl").string() + "\" --paper-ref aokvqa --out-dir \"" +
                         dir.string() + "\"",
                     dir / "zs.log") == 0,
             "zero-shot --paper-ref failed");
    const std::string out = fixture::read_file(dir / "zs.log");
    const auto file = load_paper_reference(LGVQA_PAPER_REFERENCE_FILE);
    const auto* table = file.table("aokvqa");
    c.expect(table != nullptr, "aokvqa table missing from reference file");
    if (!table) return;
    const std::pair<const char*, std::size_t> cells[] = {{"Zero-Shot", 0}, {"No Guidance", 0}, {"All", 0},
                                                         {"Zero-Shot", 3}, {"No Guidance", 3}, {"All", 3}};
    const char* expected[] = {"58.52", "68.30", "75.98", "64.98", "75.02", "79.83"};
    for (std::size_t i = 0; i < 6; ++i) {
      c.expect(table->row(cells[i].first)->values[cells[i].second] == expected[i],
               std::string("reference file lacks ") + expected[i]);
      c.expect(out.find(expected[i]) != std::string::npos, std::string("CLI output lacks ") + expected[i]);
    }
  });

  criterion(10, "command-line pipeline end to end", 120.0, [](Check& c) {
    const auto dir = fixture::temp_dir("acc_e2e");
    const std::string d = "\"" + dir.string() + "\"";
    const std::string data = "\"" + (dir / "dataset.jsonl").string() + "\"";
    const std::string cache = "\"" + (dir / "guidance.jsonl").string() + "\"";
    const std::string guided = "\"" + (dir / "guided").string() + "\"";
    const std::string unguided = "\"" + (dir / "unguided").string() + "\"";
    const std::string eval_dir = "\"" + (dir / "eval").string() + "\"";
    const std::vector<std::pair<std::string, std::string>> steps{
        {"synth", "synth --n 32 --seed 1 --out-dir " + d},
        {"guidance", "guidance --dataset " + data + " --guidance-cache " + cache},
        {"train guided_merge", "train --dataset " + data + " --backend toy-fusion --mode guided_merge --guidance-cache " +
                                   cache + " --epochs 20 --seed 1 --out-dir " + guided},
        {"eval", "eval --dataset " + data + " --predictions \"" + (dir / "guided" / "predictions.jsonl").string() +
                     "\" --out-dir " + eval_dir},
        {"train unguided", "train --dataset " + data + " --backend toy-fusion --mode unguided --epochs 20 --seed 1 --out-dir " +
                               unguided},
        {"compare", "compare --dataset " + data + " --predictions \"" +
                        (dir / "unguided" / "predictions.jsonl").string() + "\" \"" +
                        (dir / "guided" / "predictions.jsonl").string() + "\" --out-dir " + d},
    };
    int i = 0;
    for (const auto& [name, args] : steps) {
      const int code = run_cli(args, dir / ("step" + std::to_string(i++) + ".log"));
      c.expect(code == 0, name + " exited " + std::to_string(code));
    }
    const std::vector<fs::path> artifacts{
        dir / "dataset.jsonl",           dir / "image_features.jsonl",       dir / "guidance.jsonl",
        dir / "guided/checkpoint.json",  dir / "guided/metrics.csv",         dir / "guided/train_state.json",
        dir / "guided/predictions.jsonl", dir / "guided/report.json",        dir / "guided/report.txt",
        dir / "guided/report.csv",       dir / "guided/train_summary.json",  dir / "eval/report.json",
        dir / "eval/report.txt",         dir / "eval/report.csv",            dir / "unguided/predictions.jsonl",
        dir / "compare.json",            dir / "compare.txt",                dir / "compare.csv"};
    for (const auto& p : artifacts) {
      c.expect(fs::exists(p) && fs::file_size(p) > 0, "missing artifact " + p.lexically_relative(dir).string());
    }
    const std::string cmp = fixture::read_file(dir / "compare.txt");
    c.expect(cmp.find("baseline: unguided") != std::string::npos, "compare is not against unguided");
  });

  std::printf("%d of 10 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
