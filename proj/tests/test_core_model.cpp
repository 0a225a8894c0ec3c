#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "intent_miner/core_model.hpp"
#include "intent_miner/errors.hpp"
#include "synthetic.hpp"

using namespace intent_miner;

TEST_CASE("intention codes round-trip in index order") {
  const char* codes[] = {"discrepancy", "explicit-error", "review", "conceptual", "learning", "how-to", "other"};
  for (std::size_t i = 0; i < kNumIntentions; ++i) {
    const auto it = parse_intention(codes[i]);
    CHECK(index_of(it) == i);
    CHECK(to_code(it) == codes[i]);
  }
  CHECK_THROWS_AS(parse_intention("howto"), ValidationError);
  CHECK_THROWS_AS(parse_intention(""), ValidationError);
}

TEST_CASE("content category codes round-trip") {
  const char* codes[] = {"natural-language", "code", "error-message", "config", "command-line", "others"};
  for (std::size_t i = 0; i < kNumContentCategories; ++i) {
    CHECK(index_of(parse_content_category(codes[i])) == i);
    CHECK(to_code(parse_content_category(codes[i])) == codes[i]);
  }
  CHECK_THROWS_AS(parse_content_category("text"), ValidationError);
}

TEST_CASE("label set operations") {
  IntentionLabelSet s{Intention::kHowTo, Intention::kLearning};
  CHECK(s.size() == 2);
  CHECK(s.contains(Intention::kHowTo));
  CHECK_FALSE(s.contains(Intention::kOther));
  CHECK(s.contains_index(4));
  CHECK_FALSE(s.contains_index(7));
  CHECK(s.codes() == std::vector<std::string>{"learning", "how-to"});
  const auto ind = s.indicator();
  CHECK(ind[4] == 1.0);
  CHECK(ind[5] == 1.0);
  CHECK(ind[0] == 0.0);
  CHECK((s & IntentionLabelSet{Intention::kHowTo}) == IntentionLabelSet{Intention::kHowTo});
  s.erase(Intention::kHowTo);
  CHECK(s == IntentionLabelSet{Intention::kLearning});
  CHECK(IntentionLabelSet::from_mask(0xFF).size() == 7);
}

TEST_CASE("empty file parses to an empty list") {
  CHECK(parse_dataset("").empty());
  CHECK(parse_dataset("\n\n").empty());
}

TEST_CASE("single record maps fields directly") {
  const auto data = parse_dataset(
      R"({"id":"1","source":"stackexchange","title":"t","body_html":"<p>b</p>","labels":["how-to"]})");
  REQUIRE(data.size() == 1);
  CHECK(data[0].post.id == "1");
  CHECK(data[0].post.source == PostSource::kStackExchange);
  CHECK(data[0].post.title == "t");
  CHECK(data[0].post.body_html == "<p>b</p>");
  CHECK_FALSE(data[0].post.url.has_value());
  CHECK(data[0].labels.size() == 1);
  CHECK(data[0].labels.contains_index(5));
}

TEST_CASE("malformed input is rejected with the line number") {
  const std::string good = R"({"id":"1","source":"lithium","title":"t","body_html":"","labels":["review"]})";
  SUBCASE("bad json") {
    try {
      parse_dataset(good + "\n{not json\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("empty labels") {
    CHECK_THROWS_AS(parse_dataset(R"({"id":"1","source":"lithium","title":"t","body_html":"","labels":[]})"),
                    ValidationError);
  }
  SUBCASE("unknown label") {
    CHECK_THROWS_AS(parse_dataset(R"({"id":"1","source":"lithium","title":"t","body_html":"","labels":["bug"]})"),
                    ValidationError);
  }
  SUBCASE("duplicate id") {
    try {
      parse_dataset(good + "\n" + good + "\n");
      FAIL("expected a duplicate-id error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("unknown source") {
    CHECK_THROWS_AS(parse_dataset(R"({"id":"1","source":"reddit","title":"t","body_html":"","labels":["other"]})"),
                    ValidationError);
  }
  SUBCASE("missing title") {
    CHECK_THROWS_AS(parse_dataset(R"({"id":"1","source":"lithium","body_html":"","labels":["other"]})"),
                    ValidationError);
  }
}

TEST_CASE("posts may omit labels") {
  const auto posts = parse_posts(R"({"id":"p","source":"discourse","title":"t","body_html":"x"})");
  REQUIRE(posts.size() == 1);
  CHECK(posts[0].source == PostSource::kDiscourse);
  CHECK_THROWS_AS(parse_posts(R"({"id":"p","source":"discourse","title":"t","body_html":"x","labels":["nope"]})"),
                  ValidationError);
}

TEST_CASE("serialize then parse is the identity") {
  const auto data = testing::synthetic_dataset(7, 40);
  const auto text = serialize_dataset(data);
  const auto back = parse_dataset(text);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].post.id == data[i].post.id);
    CHECK(back[i].post.title == data[i].post.title);
    CHECK(back[i].post.body_html == data[i].post.body_html);
    CHECK(back[i].post.url == data[i].post.url);
    CHECK(back[i].post.source == data[i].post.source);
    CHECK(back[i].labels == data[i].labels);
  }
  CHECK(serialize_dataset(back) == text);
}

TEST_CASE("file round trip and missing files") {
  const auto dir = std::filesystem::temp_directory_path() / "intent_miner_core_test";
  const auto data = testing::synthetic_dataset(3, 5);
  save_dataset(dir / "d.jsonl", data);
  CHECK(load_dataset(dir / "d.jsonl").size() == 5);
  CHECK_THROWS_AS(load_dataset(dir / "missing.jsonl"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset stats") {
  SUBCASE("empty dataset gives zero counts") {
    const auto s = dataset_stats({});
    CHECK(s.post_count == 0);
    for (auto c : s.label_counts) CHECK(c == 0);
    for (auto c : s.cardinality_counts) CHECK(c == 0);
  }
  SUBCASE("two posts") {
    std::vector<AnnotatedPost> data(2);
    data[0].post.id = "a";
    data[0].post.body_html = "<p>one two three</p>";
    data[0].labels = {Intention::kHowTo};
    data[1].post.id = "b";
    data[1].post.body_html = "<p>one</p><pre>code here</pre>";
    data[1].labels = {Intention::kHowTo, Intention::kLearning};
    const auto s = dataset_stats(data);
    CHECK(s.label_counts[index_of(Intention::kHowTo)] == 2);
    CHECK(s.label_counts[index_of(Intention::kLearning)] == 1);
    CHECK(s.cardinality_counts[1] == 1);
    CHECK(s.cardinality_counts[2] == 1);
    CHECK(s.description_tokens_mean == doctest::Approx(2.0));
    CHECK(s.description_tokens_median == doctest::Approx(2.0));
    CHECK(s.description_tokens_max == 3);
  }
  SUBCASE("synthetic reference-sized dataset reproduces the label table") {
    const auto data = testing::synthetic_dataset(42);
    const auto s = dataset_stats(data);
    CHECK(s.post_count == testing::kReferencePostCount);
    for (std::size_t c = 0; c < kNumIntentions; ++c) CHECK(s.label_counts[c] == testing::kReferenceLabelCounts[c]);
    CHECK(s.cardinality_counts[1] == 650);
    CHECK(s.cardinality_counts[2] == 126);
    CHECK(s.cardinality_counts[3] == 8);
  }
}
