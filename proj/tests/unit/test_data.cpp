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

#include <doctest.h>

#include "fixtures.hpp"
#include "lgvqa/data.hpp"
#include "lgvqa/errors.hpp"
#include "lgvqa/text.hpp"
#include "lgvqa/toy_backend.hpp"
#include "oracles.hpp"

using namespace lgvqa;

namespace {

const char* kAokvqa = R"([
  {"question_id": "a1", "image_id": 42, "question": "What is the man holding?",
   "choices": ["bat", "racket", "ball", "glove"], "correct_choice_idx": 2,
   "difficult_direct_answer": false, "rationales": ["He throws it.", "It is round."]},
  {"question_id": "a2", "image_id": 7, "question": "Why is it dark?",
   "choices": ["night", "storm", "cave", "eclipse"], "correct_choice_idx": 0,
   "difficult_direct_answer": true, "rationales": []}
])";

}  // namespace

TEST_CASE("A-OKVQA loader") {
  const auto dir = fixture::temp_dir("aokvqa");
  fixture::write_file(dir / "val.json", kAokvqa);
  const auto r = load_aokvqa(dir / "val.json");
  REQUIRE(r.instances.size() == 2);
  CHECK(r.instances[0].gold_index() == 2);
  CHECK(r.instances[0].difficulty() == Difficulty::easy);
  CHECK(r.instances[1].difficulty() == Difficulty::hard);
  CHECK(r.instances[0].image_ref() == "coco2017/000000000042.jpg");
  CHECK(r.instances[0].dataset() == DatasetKind::aokvqa);
  CHECK(*r.bundles.at("a1").get(GuidanceKind::rationale) == "He throws it. It is round.");
  CHECK_FALSE(r.bundles.count("a2"));
  CHECK(load_aokvqa(dir / "val.json", {false}).bundles.empty());
}

TEST_CASE("A-OKVQA loader rejects three choices with the record id") {
  const auto dir = fixture::temp_dir("aokvqa_bad");
  fixture::write_file(dir / "bad.jsonl",
                      R"({"question_id": "zz9", "image_id": 1, "question": "Q?", "choices": ["a","b","c"], "correct_choice_idx": 0})"
                      "\n");
  try {
    load_aokvqa(dir / "bad.jsonl");
    FAIL("expected ChoiceCountError");
  } catch (const ChoiceCountError& e) {
    CHECK(std::string(e.what()).find("zz9") != std::string::npos);
  }
  fixture::write_file(dir / "nofield.jsonl",
                      R"({"question_id": "p", "image_id": 1, "question": "Q?", "choices": ["a","b","c","d"], "correct_choice_idx": 0})"
                      "\n"
                      R"({"question_id": "q", "image_id": 1, "choices": ["a","b","c","d"], "correct_choice_idx": 0})"
                      "\n");
  try {
    load_aokvqa(dir / "nofield.jsonl");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("nofield.jsonl:2.question") != std::string::npos);
  }
  CHECK_THROWS_AS(load_aokvqa(dir / "missing.json"), DataError);
}

TEST_CASE("VSR loader") {
  const auto dir = fixture::temp_dir("vsr");
  fixture::write_file(dir / "vsr.jsonl",
                      R"({"image": "000000085637.jpg", "caption": "The cat is under the table.", "label": 1})" "\n"
                      R"({"image": "000000001.jpg", "caption": "The dog is left of the car.", "label": false})" "\n");
  const auto r = load_vsr(dir / "vsr.jsonl");
  REQUIRE(r.instances.size() == 2);
  CHECK(r.instances[0].choices() == std::vector<std::string>{"true", "false"});
  CHECK(r.instances[0].gold_index() == 0);
  CHECK(r.instances[1].gold_index() == 1);
  CHECK(r.instances[0].question() == "True or false: The cat is under the table.");
  fixture::write_file(dir / "nolabel.jsonl", R"({"image": "x.jpg", "caption": "c"})" "\n");
  CHECK_THROWS_AS(load_vsr(dir / "nolabel.jsonl"), SchemaError);
}

TEST_CASE("ScienceQA loader skips image-less records and keeps lectures") {
  const auto dir = fixture::temp_dir("sqa");
  fixture::write_file(dir / "problems.json", R"({
    "5": {"question": "Which is a mammal?", "choices": ["frog","whale","shark","eel","newt"], "answer": 1,
          "image": "image.png", "lecture": "Mammals feed their young milk."},
    "6": {"question": "Which word is a noun?", "choices": ["run","cat"], "answer": 1, "image": null, "lecture": ""},
    "7": {"question": "Which magnet pulls?", "choices": ["north","south"], "answer": 0, "image": "image.png"}
  })");
  const auto r = load_scienceqa(dir / "problems.json");
  REQUIRE(r.instances.size() == 2);
  CHECK(r.skipped == 1);
  CHECK(r.skip_reasons.at("no image") == 1);
  CHECK(r.instances[0].num_choices() == 5);
  CHECK(r.instances[0].id() == "5");
  CHECK(*r.bundles.at("5").get(GuidanceKind::lecture) == "Mammals feed their young milk.");
  CHECK_FALSE(r.bundles.count("7"));
}

TEST_CASE("IconQA loader keeps text-choice questions only") {
  const auto dir = fixture::temp_dir("iconqa");
  fixture::write_file(dir / "iconqa.json", R"([
    {"id": "i1", "question": "Which shape is a circle?", "choices": ["A", "B", "C"], "answer": 2, "ques_type": "choose_txt"},
    {"id": "i2", "question": "Pick the image.", "choices": ["x.png", "y.png"], "answer": 0, "ques_type": "choose_img"},
    {"id": "i3", "question": "How many?", "answer": "3", "ques_type": "fill_in_blank"}
  ])");
  const auto r = load_iconqa(dir / "iconqa.json");
  REQUIRE(r.instances.size() == 1);
  CHECK(r.instances[0].dataset() == DatasetKind::iconqa);
  CHECK(r.skipped == 2);
  CHECK(r.instances[0].image_ref() == "iconqa/i1/image.png");
}

TEST_CASE("load_dataset dispatch") {
  CHECK_THROWS_AS(load_dataset("coco", "x"), ConfigError);
  const auto dir = fixture::temp_dir("dispatch");
  const auto ds = synth_dataset(1, 3, 2);
  write_instances_jsonl(dir / "d.jsonl", ds.instances);
  CHECK(load_dataset("jsonl", dir / "d.jsonl").instances == ds.instances);
}

TEST_CASE("synthetic data is deterministic and planted") {
  const auto a = synth_dataset(11, 50, 4);
  const auto b = synth_dataset(11, 50, 4);
  CHECK(a.instances == b.instances);
  CHECK(a.image_features == b.image_features);
  CHECK(synth_dataset(12, 50, 4).instances != a.instances);
  std::size_t easy = 0;
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    const auto& inst = a.instances[i];
    CHECK(inst.num_choices() == 4);
    const auto ref_tokens = tokenize(inst.image_ref());
    CHECK(ref_tokens.back() == inst.choices()[inst.gold_index()]);
    CHECK(a.image_features[i] == pseudo_image_feature(inst.image_ref(), kSynthFeatureDim, kDefaultFeatureSeed));
    easy += inst.difficulty() == Difficulty::easy ? 1 : 0;
  }
  CHECK(easy > 0);
  CHECK(easy < 50);
  for (const auto& inst : synth_dataset(3, 10, 2).instances) CHECK(inst.num_choices() == 2);
  CHECK_THROWS_AS(synth_dataset(1, 0, 4), ConfigError);
  CHECK_THROWS_AS(synth_dataset(1, 5, 6), ConfigError);
}

TEST_CASE("question_type first-token rule") {
  CHECK(question_type("What is the man holding?") == QuestionType::what);
  CHECK(question_type("At what time was this taken?") == QuestionType::other);
  CHECK(question_type("WHERE is the cat?") == QuestionType::where);
  CHECK(question_type("What's that?") == QuestionType::what);
  CHECK(question_type("  how many?") == QuestionType::how);
  CHECK(question_type("Which one?") == QuestionType::which);
  CHECK(question_type("Why so?") == QuestionType::why);
  CHECK(question_type("Is it raining?") == QuestionType::other);
  CHECK(question_type("Whatever") == QuestionType::other);
  const char* samples[] = {"what", "Which x", "why?", "HOW", "where.", "who", "whence", "¿Qué?", "2 dogs"};
  for (const char* q : samples) {
    const std::string w = oracle::first_word_lower(q);
    const bool wh = w == "what" || w == "which" || w == "why" || w == "how" || w == "where";
    CHECK((question_type(q) != QuestionType::other) == wh);
  }
}
