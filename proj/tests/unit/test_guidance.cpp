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

#include <thread>

#include "fixtures.hpp"
#include "lgvqa/errors.hpp"
#include "lgvqa/guidance.hpp"

using namespace lgvqa;

TEST_CASE("scene graph serialization") {
  const std::vector<SceneTriplet> t{{"man", "riding", "horse"}, {"horse", "on", "beach"}, {"sky", "above", "sea"}};
  CHECK(*serialize_scene_graph(t) == "man riding horse [SEP] horse on beach [SEP] sky above sea");
  CHECK(*serialize_scene_graph(std::span(t).first(1)) == "man riding horse");
  CHECK_FALSE(serialize_scene_graph({}).has_value());
  const std::vector<SceneTriplet> bad{{"man", "", "horse"}};
  CHECK_THROWS_AS(serialize_scene_graph(bad), SchemaError);
}

TEST_CASE("object serialization") {
  DetectionSet d;
  d.add("dog", 2);
  d.add("girl");
  d.add("toy", 3);
  CHECK(serialize_objects(d) == "two dogs, one girl, three toys");

  const std::vector<std::string> labels{"bus", "person", "bus", "glass", "box", "dish", "person", "child"};
  CHECK(serialize_objects(DetectionSet(labels)) == "two buses, two people, one glass, one box, one dish, one child");
  CHECK_THROWS_AS(serialize_objects(DetectionSet()), EmptyDetectionError);
  CHECK_THROWS_AS(d.add("a, b"), SchemaError);
}

TEST_CASE("count words and plurals") {
  CHECK(count_word(1) == "one");
  CHECK(count_word(12) == "twelve");
  CHECK(count_word(20) == "twenty");
  CHECK(count_word(21) == "21");
  for (std::size_t n = 1; n <= 30; ++n) CHECK(parse_count_word(count_word(n)) == n);
  CHECK_FALSE(parse_count_word("many").has_value());
  CHECK(pluralize("man", 2) == "men");
  CHECK(pluralize("woman", 3) == "women");
  CHECK(pluralize("traffic light", 2) == "traffic lights");
  CHECK(pluralize("church", 2) == "churches");
  CHECK(pluralize("cat", 1) == "cat");
}

TEST_CASE("parse_objects inverts serialize_objects") {
  DetectionSet d;
  d.add("dog", 2);
  d.add("box", 1);
  d.add("cup", 25);
  const auto terms = parse_objects(serialize_objects(d));
  REQUIRE(terms.size() == 3);
  CHECK(terms[0] == ObjectTerm{2, "dogs"});
  CHECK(terms[2].count == 25);
}

TEST_CASE("guidance presets and kind lists") {
  using K = GuidanceKind;
  CHECK(*guidance_preset("All") ==
        std::vector<K>{K::rationale, K::explanation, K::caption, K::scene_graph, K::objects});
  CHECK(*guidance_preset("CSO") == std::vector<K>{K::caption, K::scene_graph, K::objects});
  CHECK(*guidance_preset("CSOL") == std::vector<K>{K::caption, K::scene_graph, K::objects, K::lecture});
  CHECK(parse_guidance_kinds("CSO,lecture,caption") ==
        std::vector<K>{K::caption, K::scene_graph, K::objects, K::lecture});
  CHECK_THROWS_AS(parse_guidance_kinds("caption,summary"), ConfigError);
}

TEST_CASE("combine keeps the requested order") {
  using K = GuidanceKind;
  GuidanceBundle b("q");
  b.set(K::objects, "two dogs");
  b.set(K::caption, "a park");
  const std::vector<K> kinds{K::caption, K::rationale, K::objects};
  const auto c = combine(b, kinds);
  CHECK(c.text == "a park two dogs");
  CHECK(c.skipped == std::vector<K>{K::rationale});
  const std::vector<K> only{K::lecture};
  CHECK_THROWS_AS(combine(b, only), NoGuidanceAvailableError);
  CHECK(combine_or_empty(b, only).text.empty());
}

TEST_CASE("stub generator is deterministic and grounded in its inputs") {
  const auto gen = stub_generator(GuidanceKind::rationale, 3);
  const auto a = gen.generate("synth://1/2/violin", "What is shown in this image?", std::nullopt);
  CHECK(a == gen.generate("synth://1/2/violin", "What is shown in this image?", std::nullopt));
  CHECK(a.rfind("rationale:", 0) == 0);
  CHECK(a.find("violin") != std::string::npos);
  const auto p = gen.generate("x.jpg", "Why?", std::string_view("strings bow"));
  CHECK(p.find("strings") != std::string::npos);
  CHECK_THROWS_AS(gen.generate("", "Q?", std::nullopt), GenerationInputError);
  CHECK_THROWS_AS(gen.generate("x.jpg", " ", std::nullopt), GenerationInputError);
  CHECK(gen.source == "stub");
}

TEST_CASE("generator registry") {
  register_generator("echo", [](GuidanceKind kind, std::uint64_t) {
    GeneratorContract c;
    c.kind = kind;
    c.generate = [](std::string_view, std::string_view q, std::optional<std::string_view>) {
      return std::string(q);
    };
    return c;
  });
  const auto g = create_generator("echo", GuidanceKind::caption, 0);
  CHECK(g.source == "plugin:echo");
  CHECK(g.generate("i", "hello", std::nullopt) == "hello");
  CHECK_THROWS_AS(create_generator("blip2", GuidanceKind::caption, 0), ConfigError);
}

TEST_CASE("guidance cache put semantics") {
  const auto dir = fixture::temp_dir("cache_put");
  GuidanceCache cache(dir / "g.jsonl");
  CHECK(cache.put("q1", GuidanceKind::caption, "a cat") == PutResult::inserted);
  CHECK(cache.put("q1", GuidanceKind::caption, "a cat") == PutResult::unchanged);
  CHECK_THROWS_AS(cache.put("q1", GuidanceKind::caption, "a dog"), CacheConflictError);
  CHECK(cache.put("q1", GuidanceKind::caption, "a dog", "stub", true) == PutResult::replaced);
  CHECK(*cache.get("q1", GuidanceKind::caption) == "a dog");
  CHECK_THROWS_AS(cache.put("q1", GuidanceKind::caption, "x", "human"), SchemaError);
  CHECK_THROWS_AS(cache.put("q1", GuidanceKind::caption, ""), SchemaError);
  CHECK(valid_cache_source("plugin:blip2"));
  CHECK_FALSE(valid_cache_source("plugin:"));
}

TEST_CASE("guidance cache round-trips unicode bit-exactly") {
  const auto dir = fixture::temp_dir("cache_unicode");
  const std::string texts[] = {"un café crème à côté", "日本語のキャプション", "emoji 🐕‍🦺 and \"quotes\" \\ slash",
                               "Ελληνικά ∑ ≠ ∞"};
  {
    GuidanceCache cache(dir / "g.jsonl");
    int i = 0;
    for (const auto& t : texts) cache.put("id-" + std::to_string(i++), GuidanceKind::rationale, t);
    cache.save();
  }
  GuidanceCache reloaded(dir / "g.jsonl");
  int i = 0;
  for (const auto& t : texts) CHECK(*reloaded.get("id-" + std::to_string(i++), GuidanceKind::rationale) == t);
  const std::string first = fixture::read_file(dir / "g.jsonl");
  reloaded.save();
  CHECK(fixture::read_file(dir / "g.jsonl") == first);
}

TEST_CASE("guidance cache bundles and bad files") {
  const auto dir = fixture::temp_dir("cache_bundles");
  GuidanceCache cache(dir / "g.jsonl");
  cache.put("a", GuidanceKind::caption, "c");
  cache.put("a", GuidanceKind::objects, "one cat");
  cache.put("b", GuidanceKind::lecture, "l", "dataset");
  const auto bundles = cache.bundles();
  CHECK(bundles.size() == 2);
  CHECK(bundles.at("a").entries().size() == 2);
  fixture::write_file(dir / "bad.jsonl", "{\"instance_id\":\"a\",\"kind\":\"caption\"}\n");
  CHECK_THROWS_AS(GuidanceCache(dir / "bad.jsonl"), CacheIOError);
}

TEST_CASE("guidance cache tolerates concurrent readers and writers") {
  const auto dir = fixture::temp_dir("cache_threads");
  GuidanceCache cache(dir / "g.jsonl");
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&cache, t] {
      for (int i = 0; i < 200; ++i) {
        cache.put("t" + std::to_string(t) + "-" + std::to_string(i), GuidanceKind::caption, "x");
        cache.get("t0-0", GuidanceKind::caption);
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(cache.size() == 800);
}

TEST_CASE("detector output ingestion") {
  const auto dir = fixture::temp_dir("ingest");
  fixture::write_file(dir / "sg.jsonl",
                      "{\"image_ref\":\"a.jpg\",\"triplets\":[[\"man\",\"on\",\"horse\"],[\"horse\",\"near\",\"tree\"]]}\n");
  fixture::write_file(dir / "det.jsonl", "{\"image_ref\":\"a.jpg\",\"labels\":[\"dog\",\"dog\",\"girl\"]}\n");
  const auto sg = read_scene_graph_file(dir / "sg.jsonl");
  REQUIRE(sg.size() == 1);
  CHECK(*serialize_scene_graph(sg[0].triplets) == "man on horse [SEP] horse near tree");
  const auto det = read_detection_file(dir / "det.jsonl");
  REQUIRE(det.size() == 1);
  CHECK(serialize_objects(DetectionSet(det[0].labels)) == "two dogs, one girl");
  fixture::write_file(dir / "bad.jsonl", "{\"image_ref\":\"a.jpg\",\"triplets\":[[\"man\",\"on\"]]}\n");
  CHECK_THROWS_AS(read_scene_graph_file(dir / "bad.jsonl"), SchemaError);
}
