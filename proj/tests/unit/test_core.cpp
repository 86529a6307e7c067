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

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "lgvqa/errors.hpp"
#include "lgvqa/instance.hpp"
#include "lgvqa/rng.hpp"
#include "lgvqa/tensor.hpp"
#include "lgvqa/text.hpp"

using namespace lgvqa;

TEST_CASE("validate_instance accepts 2 to 5 choices") {
  for (std::size_t n = 2; n <= 5; ++n) {
    std::vector<std::string> choices;
    for (std::size_t i = 0; i < n; ++i) choices.push_back("c" + std::to_string(i));
    const auto inst = fixture::instance("q", "What is it?", choices, static_cast<long long>(n - 1));
    CHECK(inst.num_choices() == n);
    CHECK(inst.gold_index() == n - 1);
  }
}

TEST_CASE("validate_instance rejects bad choice counts and gold indices") {
  CHECK_THROWS_AS(fixture::instance("q", "Q?", {"a"}, 0), ChoiceCountError);
  CHECK_THROWS_AS(fixture::instance("q", "Q?", {"a", "b", "c", "d", "e", "f"}, 0), ChoiceCountError);
  CHECK_THROWS_AS(fixture::instance("q", "Q?", {"a", "b"}, 2), GoldIndexError);
  CHECK_THROWS_AS(fixture::instance("q", "Q?", {"a", "b"}, -1), GoldIndexError);
}

TEST_CASE("choices must differ after whitespace normalization") {
  CHECK_THROWS_AS(fixture::instance("q", "Q?", {"red  car", " red car "}, 0), DuplicateChoiceError);
  const auto inst = fixture::instance("q", "  What   is\tit? ", {" a  b ", "c"}, 0);
  CHECK(inst.question() == "What is it?");
  CHECK(inst.choices()[0] == "a b");
}

TEST_CASE("validate_instance requires id, image_ref and question") {
  RawInstance raw;
  raw.id = "x";
  raw.image_ref = "img";
  raw.question = "Q?";
  raw.choices = {"a", "b"};
  raw.gold_index = 0;
  CHECK_NOTHROW(validate_instance(raw));
  raw.id.clear();
  CHECK_THROWS_AS(validate_instance(raw), SchemaError);
  raw.id = "x";
  raw.image_ref = " ";
  CHECK_THROWS_AS(validate_instance(raw), SchemaError);
  raw.image_ref = "img";
  raw.question = "";
  CHECK_THROWS_AS(validate_instance(raw), SchemaError);
}

TEST_CASE("instance JSON round trip") {
  const auto inst = fixture::instance("id-1", "Which café is open?", {"le café", "naïve bar", "z"}, 1,
                                      Difficulty::hard, "coco/ü.jpg");
  const auto line = encode_instance_json(inst);
  CHECK(decode_instance_json(line) == inst);

  const auto dir = fixture::temp_dir("core_jsonl");
  std::vector<MultiChoiceInstance> all{inst, fixture::instance("id-2", "Why?", {"a", "b"}, 0)};
  write_instances_jsonl(dir / "d.jsonl", all);
  CHECK(read_instances_jsonl(dir / "d.jsonl") == all);
  CHECK_THROWS_AS(read_instances_jsonl(dir / "missing.jsonl"), DataError);
}

TEST_CASE("malformed instance JSON is a SchemaError") {
  CHECK_THROWS_AS(decode_instance_json("{\"id\": 3}"), SchemaError);
  CHECK_THROWS_AS(decode_instance_json("not json"), SchemaError);
  CHECK_THROWS_AS(parse_difficulty("medium"), SchemaError);
  CHECK(parse_dataset_kind("vsr") == DatasetKind::vsr);
}

TEST_CASE("GuidanceBundle set/get/merge") {
  GuidanceBundle a("q1");
  a.set(GuidanceKind::caption, "a dog on grass");
  CHECK(a.has(GuidanceKind::caption));
  CHECK(*a.get(GuidanceKind::caption) == "a dog on grass");
  CHECK_FALSE(a.get(GuidanceKind::rationale).has_value());
  CHECK_THROWS_AS(a.set(GuidanceKind::rationale, ""), SchemaError);
  CHECK_THROWS_AS(a.set(GuidanceKind::rationale, "bad\x01text"), SchemaError);

  GuidanceBundle b("q1");
  b.set(GuidanceKind::rationale, "dogs like grass");
  const auto m = a.merged(b);
  CHECK(m.entries().size() == 2);
  CHECK_THROWS_AS(a.merged(a), GuidanceConflictError);
  CHECK_THROWS_AS(a.merged(GuidanceBundle("other")), GuidanceConflictError);
}

TEST_CASE("guidance kind names round trip") {
  for (GuidanceKind k : kAllGuidanceKinds) CHECK(parse_guidance_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_guidance_kind("summary"), SchemaError);
}

TEST_CASE("Rng is deterministic and serializable") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  a.normal();  // leaves a spare cached
  Rng c = Rng::deserialize(a.serialize());
  for (int i = 0; i < 10; ++i) CHECK(a.normal() == c.normal());
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}

TEST_CASE("Rng distributions look right") {
  Rng r(7);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) ++counts[r.index(5)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("text helpers") {
  CHECK(normalize_whitespace("  a \t b\n") == "a b");
  CHECK(tokenize("What's the Café?") == std::vector<std::string>{"what", "s", "the", "caf\xc3\xa9"});
  CHECK(tokenize("").empty());
  CHECK(has_control_chars("a\tb"));
  CHECK_FALSE(has_control_chars("plain ünïcode"));
  CHECK(join({"a", "b", "c"}, ", ") == "a, b, c");
  // FNV-1a 64 test vector.
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("tensor helpers") {
  Tensor w = Tensor::zeros({2, 3});
  w.data = {1, 2, 3, 4, 5, 6};
  const std::vector<double> x{1, 0, -1};
  CHECK(matvec(w, x) == std::vector<double>{-2, -2});
  CHECK(matvec_transposed(w, std::vector<double>{1, 1}) == std::vector<double>{5, 7, 9});
  Tensor g = Tensor::zeros({2, 3});
  accumulate_outer(g, std::vector<double>{1, 2}, x);
  CHECK(g.data == std::vector<double>{1, 0, -1, 2, 0, -2});
  CHECK(dot(x, x) == 2.0);
  CHECK(l2_norm(std::vector<double>{3, 4}) == 5.0);
  CHECK_FALSE(all_finite(std::vector<double>{1.0, NAN}));

  ParameterStore s;
  s.add("b", w);
  s.add("a", Tensor::zeros({1}));
  CHECK(s.names() == std::vector<std::string>{"a", "b"});
  CHECK(s.total_size() == 7);
  const auto h = parameter_hash(s);
  s.at("a").data[0] = 1e-300;
  CHECK(parameter_hash(s) != h);
  CHECK(hash_hex(0xabc).size() == 16);
}

TEST_CASE("ChoiceScores invariants") {
  ChoiceScores s;
  s.raw = {1.0, 2.0, -INFINITY};
  s.normalized = {0.25, 0.75, 0.0};
  s.mask = {true, true, false};
  CHECK(s.valid_count() == 2);
  CHECK_NOTHROW(s.check_invariants());
  s.normalized[2] = 0.1;
  CHECK_THROWS_AS(s.check_invariants(), Error);
}
